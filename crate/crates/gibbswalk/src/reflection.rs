//! Approximate reflection about the stationary state via phase estimation.
//!
//! V runs c independent phase-estimation blocks of a probe qubits each
//! against the walk operator; eigenvectors of the walk with nonzero
//! eigenphase leave at least one block away from |0..0>, so the ancilla
//! reflection Q = (-1)^{probe = 0} conjugated as R~ = V^dagger Q V acts as
//! -1 on the stationary state and as +1 (up to a leakage of order
//! sqrt(epsilon2)) on the rest of the busy subspace. Parameter selection
//! follows 2^a >= 1/Delta and c >= log2(1/sqrt(epsilon2)).

use ndarray::Array2;
use num_complex::Complex64;

use crate::bayesnet::BayesianNetwork;
use crate::chains;
use crate::embedding::{Completion, Embedding};
use crate::error::{Error, Result};
use crate::state::{apply_block_complex, phase_flip_sector, Statevector};
use crate::walk::{busy_subspace_basis, stationary_state, WalkOperator};

/// Total qubits the simulator will allocate (walk + probes).
pub const QUBIT_BUDGET: usize = 24;

/// Phase-estimation parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PEParams {
    /// Probe qubits per phase-estimation block.
    pub a: usize,
    /// Number of blocks.
    pub c: usize,
    /// Per-reflection error budget; leakage bound sqrt(epsilon2).
    pub epsilon2: f64,
    /// Phase-resolution target Delta = phi_1 / pi.
    pub delta_phase: f64,
    /// True when a or c were reduced to fit the qubit budget.
    pub cap_applied: bool,
}

impl PEParams {
    pub fn probe_bits(&self) -> usize {
        self.a * self.c
    }
}

/// Placement of the probe blocks above the two walk registers.
#[derive(Debug, Clone, Copy)]
pub struct ProbeLayout {
    /// Bits per walk register.
    pub n_bits: usize,
    pub a: usize,
    pub c: usize,
}

impl ProbeLayout {
    pub fn new(n_bits: usize, params: &PEParams) -> Self {
        Self {
            n_bits,
            a: params.a,
            c: params.c,
        }
    }

    /// Lowest qubit index of block k.
    pub fn block_lo(&self, k: usize) -> usize {
        2 * self.n_bits + self.a * k
    }

    /// Mask covering every probe bit.
    pub fn probe_mask(&self) -> usize {
        ((1usize << (self.a * self.c)) - 1) << (2 * self.n_bits)
    }
}

fn ceil_log2(x: f64) -> usize {
    // Guard against values like 4.0 landing at 2.0000000000000004.
    (x.log2() - 1e-12).ceil().max(1.0) as usize
}

/// Select (a, c) for a spectral gap delta and error budget epsilon2 on a
/// network with `n_bits` bits per register. The phase-resolution target is
/// Delta = phi_1/pi with phi_1 = arccos(1 - delta); a and c are shrunk (c
/// first) when 2*n_bits + a*c exceeds the qubit budget.
pub fn choose_parameters(delta: f64, epsilon2: f64, n_bits: usize) -> Result<PEParams> {
    assert!(delta > 0.0 && delta <= 1.0, "delta in (0, 1]");
    assert!(epsilon2 > 0.0 && epsilon2 < 1.0, "epsilon2 in (0, 1)");
    let phi1 = (1.0 - delta).clamp(-1.0, 1.0).acos();
    let delta_phase = phi1 / std::f64::consts::PI;
    let mut a = ceil_log2(1.0 / delta_phase);
    let mut c = ceil_log2(1.0 / epsilon2.sqrt());
    let mut cap_applied = false;
    while 2 * n_bits + a * c > QUBIT_BUDGET && c > 1 {
        c -= 1;
        cap_applied = true;
    }
    while 2 * n_bits + a * c > QUBIT_BUDGET && a > 1 {
        a -= 1;
        cap_applied = true;
    }
    if 2 * n_bits + a * c > QUBIT_BUDGET {
        return Err(Error::BudgetExceeded {
            required: 2 * n_bits + a * c,
            cap: QUBIT_BUDGET,
        });
    }
    Ok(PEParams {
        a,
        c,
        epsilon2,
        delta_phase,
        cap_applied,
    })
}

fn hadamard() -> Array2<Complex64> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ndarray::array![[r, r], [r, -r]]
}

/// Fourier matrix on `a` qubits; `inverse` negates the phase sign. Index j
/// reads the block bits with bit t weighted 2^t.
fn fourier_matrix(a: usize, inverse: bool) -> Array2<Complex64> {
    let n = 1usize << a;
    let sign = if inverse { -1.0 } else { 1.0 };
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            let angle = sign * 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
            m[[j, k]] = Complex64::from_polar(scale, angle);
        }
    }
    m
}

/// Apply V (or V^dagger): per block, Hadamards on the probes, controlled
/// W^{2^t} from probe bit t (by 2^t repeated controlled applications), a
/// dense inverse Fourier transform on the block, and one closing
/// uncontrolled walk application. The closing step cancels exactly inside
/// V^dagger Q V (it commutes with Q) and makes each block cost exactly 2^a
/// walk applications.
pub fn apply_v(
    sv: &mut Statevector,
    walk: &mut WalkOperator,
    params: &PEParams,
    inverse: bool,
) -> Result<()> {
    let layout = ProbeLayout::new(sv.n_bits, params);
    let h = hadamard();
    if inverse {
        for k in (0..layout.c).rev() {
            let lo = layout.block_lo(k);
            walk.apply_inverse(sv)?;
            let qft = fourier_matrix(layout.a, false);
            apply_block_complex(&mut sv.amps, lo, layout.a, 0, &qft);
            for t in (0..layout.a).rev() {
                let ctrl = 1usize << (lo + t);
                for _ in 0..1usize << t {
                    walk.apply_controlled(sv, ctrl, true)?;
                }
            }
            for t in 0..layout.a {
                apply_block_complex(&mut sv.amps, lo + t, 1, 0, &h);
            }
        }
    } else {
        for k in 0..layout.c {
            let lo = layout.block_lo(k);
            for t in 0..layout.a {
                apply_block_complex(&mut sv.amps, lo + t, 1, 0, &h);
            }
            for t in 0..layout.a {
                let ctrl = 1usize << (lo + t);
                for _ in 0..1usize << t {
                    walk.apply_controlled(sv, ctrl, false)?;
                }
            }
            let iqft = fourier_matrix(layout.a, true);
            apply_block_complex(&mut sv.amps, lo, layout.a, 0, &iqft);
            walk.apply(sv)?;
        }
    }
    Ok(())
}

/// Q: flip the sign of amplitudes whose probe blocks are all zero.
pub fn apply_q(sv: &mut Statevector, params: &PEParams) {
    let layout = ProbeLayout::new(sv.n_bits, params);
    phase_flip_sector(&mut sv.amps, layout.probe_mask(), 0);
}

/// Approximate reflection about the stationary state:
/// R~ = V^dagger Q V. Probe blocks must enter as |0...0>.
pub fn apply_r_tar_approx(
    sv: &mut Statevector,
    walk: &mut WalkOperator,
    params: &PEParams,
) -> Result<()> {
    apply_v(sv, walk, params, false)?;
    apply_q(sv, params);
    apply_v(sv, walk, params, true)
}

/// Worst-case deviation of R~ from the exact stationary-state reflection
/// over an orthonormal spanning set of the busy subspace:
/// max_b || R~ (b ox 0) - (R_tar b) ox 0 ||.
pub fn measure_reflection_error(net: &BayesianNetwork, params: &PEParams) -> Result<f64> {
    const MAX_BITS: usize = 3;
    if net.n_bits() > MAX_BITS {
        return Err(Error::BudgetExceeded {
            required: net.n_bits(),
            cap: MAX_BITS,
        });
    }
    let emb = Embedding::new(net, Completion::DescendingBasis)?;
    let psi0 = stationary_state(net);
    let basis = busy_subspace_basis(&emb, Some(&psi0))?;
    let probe_bits = params.probe_bits();
    let walk_dim = 1usize << (2 * net.n_bits());
    let mut worst = 0.0f64;
    for b in &basis {
        let mut sv = Statevector::zeros(net.n_bits(), probe_bits);
        sv.amps[..walk_dim].copy_from_slice(&b.amps);
        let mut walk = WalkOperator::new(&emb);
        apply_r_tar_approx(&mut sv, &mut walk, params)?;
        // Exact reflection: b - 2 <psi0|b> psi0, in the probe = 0 sector.
        let overlap = psi0.inner(b);
        let mut acc = 0.0f64;
        for (idx, amp) in sv.amps.iter().enumerate() {
            let expect = if idx < walk_dim {
                b.amps[idx] - 2.0 * overlap * psi0.amps[idx]
            } else {
                Complex64::new(0.0, 0.0)
            };
            acc += (amp - expect).norm_sqr();
        }
        worst = worst.max(acc.sqrt());
    }
    Ok(worst)
}

/// Convenience: parameters chosen from the network's own spectral gap.
pub fn parameters_for_net(net: &BayesianNetwork, epsilon2: f64) -> Result<PEParams> {
    let m1 = chains::build_m1(net)?;
    let m2 = chains::build_m2(net)?;
    let mh = chains::build_m_hyb(&m1, &m2);
    let spectral = chains::spectrum(&mh)?;
    choose_parameters(spectral.delta, epsilon2, net.n_bits())
}
