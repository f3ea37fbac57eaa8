//! Batch front-end over the walk library: parse network files, dispatch
//! subcommands, emit versioned JSON or CSV reports.
//!
//! Exit codes: 0 on success, 1 when a verified invariant fails or a
//! computation cannot proceed, 2 on usage or input-parse errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gibbswalk::chains::{
    build_m1, build_m2, build_m_hyb, check_pair_detailed_balance, spectrum, verify_spectra_equal,
};
use gibbswalk::embedding::{
    build_u, build_u1, build_u2, decompose_multiplexors, format_gate_list,
    verify_eigen_contraction, Completion, EigenContraction, GateEntry, Side,
};
use gibbswalk::reflection::{measure_reflection_error, parameters_for_net, QUBIT_BUDGET};
use gibbswalk::sampler::{
    classical_sweeps_needed, compare, run_classical_sampler, run_quantum_sampler, ComparisonReport,
    GroverConfig,
};
use gibbswalk::state::RegisterLayout;
use gibbswalk::walk::verify_walk_spectrum;
use gibbswalk::BayesianNetwork;

const SCHEMA_VERSION: u32 = 1;

/// Dense verification (embedding matrices, walk spectra) is capped to keep
/// the ladder interactive; wider nets report the capped steps as skipped.
const DENSE_EMBEDDING_BITS: usize = 4;

#[derive(Parser)]
#[command(
    name = "gibbswalk",
    version,
    about = "Gibbs-chain walk operators for Bayesian networks: spectra, \
             verification, gate lists, and samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue report for the sweep kernels of one network
    Spectrum(SpectrumArgs),
    /// Run the invariant ladder; exit 1 if any hard check fails
    Verify(VerifyArgs),
    /// Emit multiplexed-rotation gate lists for both embeddings
    Compile(CompileArgs),
    /// Draw samples with the quantum or the classical sampler
    Sample(SampleArgs),
    /// Quantum-vs-classical cost rows across one or more networks
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Network definition file (JSON)
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    /// Per-reflection error budget used by the reflection step
    #[arg(long, default_value_t = 1.0 / 16.0)]
    epsilon2: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    input: PathBuf,
    /// Output prefix; writes <prefix>.u1.gates and <prefix>.u2.gates
    /// (defaults to the input file stem in the current directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Quantum,
    Classical,
}

#[derive(Args)]
struct SampleArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "quantum")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    /// Per-reflection error budget epsilon_2 in (0, 1)
    #[arg(long, default_value_t = 1.0 / 16.0)]
    epsilon2: f64,
    /// Override the probe qubits per phase-estimation block (a)
    #[arg(long)]
    probe_bits: Option<usize>,
    /// Override the number of phase-estimation blocks (c)
    #[arg(long)]
    pe_steps: Option<usize>,
    /// Override the amplification rounds (L)
    #[arg(long)]
    grover_iters: Option<usize>,
    /// Override the start state as a packed index into the joint space
    #[arg(long)]
    x0: Option<usize>,
    /// Classical burn-in sweeps (defaults to the smallest count reaching
    /// total variation 0.1 from stationarity)
    #[arg(long)]
    sweeps: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Network definition files (one CSV row each)
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// End-to-end sqrt-amplitude error target
    #[arg(long, default_value_t = 0.1)]
    eps_target: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage errors (bad files, bad flag values) exit 2; invariant or
/// computation failures exit 1.
enum CliError {
    Usage(String),
    Invariant(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Compile(args) => cmd_compile(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn load_network(path: &Path) -> Result<BayesianNetwork, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    BayesianNetwork::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize without maps of non-strings")
}

fn invariant(e: gibbswalk::Error) -> CliError {
    CliError::Invariant(e.to_string())
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct EigenvalueRow {
    re: f64,
    im: f64,
    modulus: f64,
    /// Phase split m = e^(i eta) cos(phi): the walk eigenphase is 2 phi.
    phi: f64,
    eta: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    schema_version: u32,
    network: String,
    n_nodes: usize,
    n_states: usize,
    n_bits: usize,
    /// Spectral gap 1 - |m_1|.
    delta: f64,
    eigenvalues: Vec<EigenvalueRow>,
    residuals: SpectrumResiduals,
}

#[derive(Serialize)]
struct SpectrumResiduals {
    m1_column_stochastic: f64,
    m2_column_stochastic: f64,
    pair_detailed_balance: f64,
    /// max |M_hyb M_hyb^T - M_hyb^T M_hyb|; small means an orthonormal
    /// eigenbasis exists.
    hybrid_normality: f64,
    eigenbasis_orthonormality: f64,
    /// || M1 pi - pi ||_inf.
    stationarity: f64,
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let net = load_network(&args.input)?;
    let report = spectrum_report(&net, label_of(&args.input)).map_err(invariant)?;
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut csv = String::from("index,re,im,modulus,phi,eta\n");
            for (i, row) in report.eigenvalues.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{i},{},{},{},{},{}",
                    row.re, row.im, row.modulus, row.phi, row.eta
                );
            }
            csv.pop();
            csv
        }
    };
    emit(&text, &args.out)
}

fn spectrum_report(net: &BayesianNetwork, network: String) -> gibbswalk::Result<SpectrumReport> {
    let m1 = build_m1(net)?;
    let m2 = build_m2(net)?;
    let mh = build_m_hyb(&m1, &m2);
    let spectral = spectrum(&mh)?;
    let pi = net.stationary_distribution();
    let eigenvalues = spectral
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, m)| EigenvalueRow {
            re: m.re,
            im: m.im,
            modulus: m.norm(),
            phi: spectral.phi[j],
            eta: spectral.eta[j],
        })
        .collect();
    let mut stationarity = 0.0f64;
    for y in 0..net.n_states() {
        let acc: f64 = (0..net.n_states())
            .map(|x| m1.entries[[y, x]] * pi[x])
            .sum();
        stationarity = stationarity.max((acc - pi[y]).abs());
    }
    Ok(SpectrumReport {
        schema_version: SCHEMA_VERSION,
        network,
        n_nodes: net.n_nodes(),
        n_states: net.n_states(),
        n_bits: net.n_bits(),
        delta: spectral.delta,
        eigenvalues,
        residuals: SpectrumResiduals {
            m1_column_stochastic: m1.column_sum_residual(),
            m2_column_stochastic: m2.column_sum_residual(),
            pair_detailed_balance: check_pair_detailed_balance(&m1, &m2, &pi),
            hybrid_normality: spectral.normality_residual,
            eigenbasis_orthonormality: spectral.orthonormality_residual,
            stationarity,
        },
    })
}

// ------------------------------------------------------------------ verify

#[derive(Serialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    status: CheckStatus,
    /// Worst measured residual, when the step ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

impl Check {
    fn ran(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            status: if measured < tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            measured: Some(measured),
            tolerance: Some(tolerance),
            detail: None,
        }
    }

    fn skipped(name: &'static str, why: String) -> Self {
        Check {
            name,
            status: CheckStatus::Skipped,
            measured: None,
            tolerance: None,
            detail: Some(why),
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    network: String,
    checks: Vec<Check>,
    passed: bool,
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if !(args.epsilon2 > 0.0 && args.epsilon2 < 1.0) {
        return Err(CliError::Usage(format!(
            "--epsilon2 must lie in (0, 1); got {}",
            args.epsilon2
        )));
    }
    let net = load_network(&args.input)?;
    let report = verify_ladder(&net, label_of(&args.input), args.epsilon2).map_err(invariant)?;
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut csv = String::from("check,status,measured,tolerance,detail\n");
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "fail",
                    CheckStatus::Skipped => "skipped",
                };
                let _ = writeln!(
                    csv,
                    "{},{status},{},{},{}",
                    c.name,
                    c.measured.map(|m| m.to_string()).unwrap_or_default(),
                    c.tolerance.map(|t| t.to_string()).unwrap_or_default(),
                    c.detail.as_deref().unwrap_or("")
                );
            }
            csv.pop();
            csv
        }
    };
    emit(&text, &args.out)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name)
            .collect();
        Err(CliError::Invariant(format!(
            "verification failed: {}",
            failed.join(", ")
        )))
    }
}

fn verify_ladder(
    net: &BayesianNetwork,
    network: String,
    epsilon2: f64,
) -> gibbswalk::Result<VerifyReport> {
    let mut checks = Vec::new();
    let m1 = build_m1(net)?;
    let m2 = build_m2(net)?;
    let mh = build_m_hyb(&m1, &m2);
    let pi = net.stationary_distribution();

    checks.push(Check::ran(
        "pair_detailed_balance",
        check_pair_detailed_balance(&m1, &m2, &pi),
        1e-12,
    ));

    let cmp = verify_spectra_equal(&m1, &m2, &mh, &pi)?;
    checks.push(Check::ran("spectra_equality", cmp.multiset_mismatch, 1e-9));
    checks.push(Check::ran(
        "similarity_identities",
        cmp.similarity_m2.max(cmp.similarity_m_hyb),
        1e-12,
    ));

    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let mut stat1 = 0.0f64;
    let mut stath = 0.0f64;
    for y in 0..net.n_states() {
        let mut acc1 = 0.0;
        let mut acch = 0.0;
        for x in 0..net.n_states() {
            acc1 += m1.entries[[y, x]] * pi[x];
            acch += mh.entries[[y, x]] * sqrt_pi[x];
        }
        stat1 = stat1.max((acc1 - pi[y]).abs());
        stath = stath.max((acch - sqrt_pi[y]).abs());
    }
    checks.push(Check::ran("m1_stationarity", stat1, 1e-12));
    checks.push(Check::ran("hybrid_fixed_point", stath, 1e-10));

    if net.n_bits() <= DENSE_EMBEDDING_BITS {
        let u1 = build_u1(net, Completion::DescendingBasis)?;
        let u2 = build_u2(net, Completion::DescendingBasis)?;
        let u = build_u(&u1, &u2);
        let unit = u1
            .unitarity_residual()
            .max(u2.unitarity_residual())
            .max(u.unitarity_residual());
        checks.push(Check::ran("embedding_unitarity", unit, 1e-10));

        let spectral = spectrum(&mh)?;
        match verify_eigen_contraction(&u, &spectral, RegisterLayout::new(net.n_bits())) {
            EigenContraction::Checked { residual } => {
                checks.push(Check::ran("eigenvector_contraction", residual, 1e-9));
            }
            EigenContraction::SkippedNonOrthonormal {
                residual,
                orthonormality,
            } => checks.push(Check::skipped(
                "eigenvector_contraction",
                format!(
                    "hybrid eigenbasis is not orthonormal (residual {orthonormality:.3e}); \
                     off-diagonal contraction residual {residual:.3e} reported, not asserted"
                ),
            )),
        }
    } else {
        let why = format!(
            "dense embedding checks capped at {DENSE_EMBEDDING_BITS} register bits \
             (network has {})",
            net.n_bits()
        );
        checks.push(Check::skipped("embedding_unitarity", why.clone()));
        checks.push(Check::skipped("eigenvector_contraction", why));
    }

    match verify_walk_spectrum(net) {
        Ok(walk) => {
            checks.push(Check::ran(
                "walk_spectrum_singular_route",
                walk.singular_multiset_mismatch,
                1e-9,
            ));
            if walk.orthonormality_residual < 1e-6 {
                checks.push(Check::ran(
                    "walk_spectrum_eigenvalue_route",
                    walk.eigenvalue_multiset_mismatch,
                    1e-9,
                ));
            } else {
                checks.push(Check::skipped(
                    "walk_spectrum_eigenvalue_route",
                    format!(
                        "eigenvalue-based prediction needs an orthonormal eigenbasis \
                         (residual {:.3e}); mismatch {:.3e} reported, not asserted",
                        walk.orthonormality_residual, walk.eigenvalue_multiset_mismatch
                    ),
                ));
            }
            checks.push(Check::ran(
                "walk_fixed_point",
                walk.fixed_point_residual,
                1e-10,
            ));
            checks.push(Check::ran(
                "walk_busy_complement_identity",
                walk.perp_identity_residual,
                1e-9,
            ));
        }
        Err(gibbswalk::Error::BudgetExceeded { required, cap }) => {
            checks.push(Check::skipped(
                "walk_spectrum_singular_route",
                format!("dense walk capped at {cap} register bits (network has {required})"),
            ));
        }
        Err(e) => return Err(e),
    }

    match parameters_for_net(net, epsilon2)
        .and_then(|p| Ok((measure_reflection_error(net, &p)?, p)))
    {
        Ok((err, p)) => {
            let mut check = Check::ran("reflection_error", err, 4.0 * p.epsilon2.sqrt());
            check.detail = Some(format!(
                "a = {}, c = {}, cap_applied = {}",
                p.a, p.c, p.cap_applied
            ));
            checks.push(check);
        }
        Err(gibbswalk::Error::BudgetExceeded { required, cap }) => {
            checks.push(Check::skipped(
                "reflection_error",
                format!("probe-register sweep capped at {cap} bits (needs {required})"),
            ));
        }
        Err(e) => return Err(e),
    }

    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        network,
        checks,
        passed,
    })
}

// ----------------------------------------------------------------- compile

#[derive(Serialize)]
struct CompileReport {
    schema_version: u32,
    network: String,
    files: Vec<String>,
    rotation_gates: [usize; 2],
    dense_fallbacks: [usize; 2],
}

fn cmd_compile(args: CompileArgs) -> Result<(), CliError> {
    let net = load_network(&args.input)?;
    let prefix = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(label_of(&args.input)));
    let mut files = Vec::new();
    let mut rotation_gates = [0usize; 2];
    let mut dense_fallbacks = [0usize; 2];
    for (i, side) in [Side::U1, Side::U2].into_iter().enumerate() {
        let gates = decompose_multiplexors(&net, side).map_err(invariant)?;
        for entry in &gates.entries {
            match entry {
                GateEntry::MuxRy(_) => rotation_gates[i] += 1,
                GateEntry::DenseFallback { .. } => dense_fallbacks[i] += 1,
            }
        }
        let suffix = if side == Side::U1 { "u1" } else { "u2" };
        let path = PathBuf::from(format!("{}.{suffix}.gates", prefix.display()));
        fs::write(&path, format_gate_list(&gates))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        files.push(path.display().to_string());
    }
    let report = CompileReport {
        schema_version: SCHEMA_VERSION,
        network: label_of(&args.input),
        files,
        rotation_gates,
        dense_fallbacks,
    };
    println!("{}", to_json(&report));
    Ok(())
}

// ------------------------------------------------------------------ sample

#[derive(Serialize)]
struct SampleEnvelope {
    schema_version: u32,
    network: String,
    #[serde(flatten)]
    report: gibbswalk::sampler::SamplingReport,
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    if args.shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    if !(args.epsilon2 > 0.0 && args.epsilon2 < 1.0) {
        return Err(CliError::Usage(format!(
            "--epsilon2 must lie in (0, 1); got {}",
            args.epsilon2
        )));
    }
    let net = load_network(&args.input)?;
    let report = match args.method {
        Method::Quantum => {
            let mut cfg = GroverConfig::for_net(&net, args.epsilon2, args.shots, args.seed)
                .map_err(invariant)?;
            if let Some(a) = args.probe_bits {
                if a == 0 {
                    return Err(CliError::Usage("--probe-bits must be at least 1".into()));
                }
                cfg.pe.a = a;
            }
            if let Some(c) = args.pe_steps {
                if c == 0 {
                    return Err(CliError::Usage("--pe-steps must be at least 1".into()));
                }
                cfg.pe.c = c;
            }
            let total = 2 * net.n_bits() + cfg.pe.a * cfg.pe.c;
            if total > QUBIT_BUDGET {
                return Err(CliError::Usage(format!(
                    "--probe-bits/--pe-steps need {total} qubits; budget is {QUBIT_BUDGET}"
                )));
            }
            if let Some(l) = args.grover_iters {
                cfg.l = l;
            }
            if let Some(x0) = args.x0 {
                if x0 >= net.n_states() {
                    return Err(CliError::Usage(format!(
                        "--x0 {x0} out of range; network has {} states",
                        net.n_states()
                    )));
                }
                cfg.x0 = net.unpack(x0);
            }
            run_quantum_sampler(&net, &cfg).map_err(invariant)?
        }
        Method::Classical => {
            let sweeps = match args.sweeps {
                Some(s) => s,
                None => classical_sweeps_needed(&net, 0.1).map_err(invariant)?,
            };
            run_classical_sampler(&net, sweeps, args.shots, args.seed).map_err(invariant)?
        }
    };
    let envelope = SampleEnvelope {
        schema_version: SCHEMA_VERSION,
        network: label_of(&args.input),
        report,
    };
    let text = match args.format {
        Format::Json => to_json(&envelope),
        Format::Csv => {
            let r = &envelope.report;
            let mut csv = String::from("state,count,empirical,exact_marginal,stationary\n");
            for x in 0..r.counts.len() {
                let _ = writeln!(
                    csv,
                    "{x},{},{},{},{}",
                    r.counts[x], r.empirical[x], r.exact_marginal[x], r.stationary[x]
                );
            }
            csv.pop();
            csv
        }
    };
    emit(&text, &args.out)
}

// ----------------------------------------------------------------- compare

#[derive(Serialize)]
struct CompareRow {
    label: String,
    #[serde(flatten)]
    report: ComparisonReport,
}

#[derive(Serialize)]
struct CompareEnvelope {
    schema_version: u32,
    eps_target: f64,
    rows: Vec<CompareRow>,
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    if !(args.eps_target > 0.0 && args.eps_target < 1.0) {
        return Err(CliError::Usage(format!(
            "--eps-target must lie in (0, 1); got {}",
            args.eps_target
        )));
    }
    let mut rows = Vec::new();
    for path in &args.inputs {
        let net = load_network(path)?;
        let report = compare(&net, args.eps_target).map_err(invariant)?;
        rows.push(CompareRow {
            label: label_of(path),
            report,
        });
    }
    let text = match args.format {
        Format::Json => to_json(&CompareEnvelope {
            schema_version: SCHEMA_VERSION,
            eps_target: args.eps_target,
            rows,
        }),
        Format::Csv => {
            let mut csv = String::from(ComparisonReport::csv_header());
            for row in &rows {
                csv.push('\n');
                csv.push_str(&row.report.csv_row(&row.label));
            }
            csv
        }
    };
    emit(&text, &args.out)
}
