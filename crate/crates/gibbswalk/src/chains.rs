//! Dual Gibbs sweep kernels and their spectral data.
//!
//! `build_m1` sweeps the nodes in index order, resampling each node from its
//! full conditional given the already-resampled prefix and the original
//! suffix; `build_m2` is the swapped-pattern partner (original prefix,
//! resampled suffix). The two kernels satisfy pair detailed balance
//! M1(y|x) pi(x) = M2(x|y) pi(y), and the entrywise geometric mean
//! M_hyb(y|x) = sqrt(M2(x|y)) * sqrt(M1(y|x)) shares their spectrum.
//!
//! Matrices are dense and column-indexed by packed states: `entries[[y, x]]`
//! is the transition weight from x to y. Dense mode is capped at 8 register
//! qubits (256 states).

use ndarray::{s, Array2};
use ndarray_linalg::{Eig, Eigh, SVD, UPLO};
use num_complex::Complex64;
use rand::Rng;

use crate::bayesnet::{Assignment, BayesianNetwork};
use crate::error::{Error, Result};

/// Dense transition kernel over packed states. `stochastic` records whether
/// columns are normalized (true for M1/M2, false for Lambda and M_hyb).
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub entries: Array2<f64>,
    pub stochastic: bool,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest column-sum deviation from 1; meaningful for stochastic
    /// kernels.
    pub fn column_sum_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.dim() {
            let s: f64 = self.entries.column(x).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

/// Eigenstructure of a kernel: eigenvalues sorted with the top eigenvalue
/// first, the phase split m_j = exp(i eta_j) cos(phi_j), the spectral gap
/// delta = 1 - |m_1|, and residual diagnostics that downstream modules use
/// to gate orthonormality-dependent checks.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    /// Unit right eigenvectors, column j for eigenvalue j, phase-fixed so
    /// the largest-modulus component is real positive.
    pub eigenvectors: Array2<Complex64>,
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    pub delta: f64,
    /// max |V^H V - I| over the eigenvector matrix.
    pub orthonormality_residual: f64,
    /// max |M M^T - M^T M|: zero iff the kernel is normal.
    pub normality_residual: f64,
}

const MAX_DENSE_BITS: usize = 8;

fn check_dense_budget(net: &BayesianNetwork) -> Result<()> {
    if net.n_bits() > MAX_DENSE_BITS {
        return Err(Error::BudgetExceeded {
            required: net.n_bits(),
            cap: MAX_DENSE_BITS,
        });
    }
    Ok(())
}

/// Forward sweep kernel: M1(y|x) = prod_i P(y_i | y_{<i}, x_{>i}).
pub fn build_m1(net: &BayesianNetwork) -> Result<TransitionMatrix> {
    build_sweep(net, false)
}

/// Swapped-pattern kernel: M2(y|x) = prod_i P(y_i | x_{<i}, y_{>i}).
pub fn build_m2(net: &BayesianNetwork) -> Result<TransitionMatrix> {
    build_sweep(net, true)
}

fn build_sweep(net: &BayesianNetwork, swapped: bool) -> Result<TransitionMatrix> {
    check_dense_budget(net)?;
    let n = net.n_states();
    let n_nodes = net.n_nodes();
    let mut entries = Array2::zeros((n, n));
    let mut mix = vec![0usize; n_nodes];
    for x_idx in 0..n {
        let xa = net.unpack(x_idx);
        for y_idx in 0..n {
            let ya = net.unpack(y_idx);
            let mut p = 1.0;
            for i in 0..n_nodes {
                for j in 0..n_nodes {
                    let take_y = if swapped { j > i } else { j < i };
                    mix[j] = if take_y { ya[j] } else { xa[j] };
                }
                let cond = net.full_conditional(i, &mix)?;
                p *= cond[ya[i]];
                if p == 0.0 {
                    break;
                }
            }
            entries[[y_idx, x_idx]] = p;
        }
    }
    Ok(TransitionMatrix {
        entries,
        stochastic: true,
    })
}

/// Entrywise square root of a kernel.
pub fn build_lambda(m: &TransitionMatrix) -> TransitionMatrix {
    TransitionMatrix {
        entries: m.entries.mapv(f64::sqrt),
        stochastic: false,
    }
}

/// Hybrid kernel M_hyb(y|x) = sqrt(M2(x|y)) * sqrt(M1(y|x)). Not column
/// stochastic in general, but it fixes sqrt(pi) and shares the sweep
/// kernels' eigenvalues.
pub fn build_m_hyb(m1: &TransitionMatrix, m2: &TransitionMatrix) -> TransitionMatrix {
    let n = m1.dim();
    let mut entries = Array2::zeros((n, n));
    for y in 0..n {
        for x in 0..n {
            entries[[y, x]] = (m2.entries[[x, y]] * m1.entries[[y, x]]).sqrt();
        }
    }
    TransitionMatrix {
        entries,
        stochastic: false,
    }
}

/// Largest violation of M1(y|x) pi(x) = M2(x|y) pi(y) over all state pairs.
pub fn check_pair_detailed_balance(
    m1: &TransitionMatrix,
    m2: &TransitionMatrix,
    pi: &[f64],
) -> f64 {
    let n = m1.dim();
    let mut worst = 0.0f64;
    for y in 0..n {
        for x in 0..n {
            let lhs = m1.entries[[y, x]] * pi[x];
            let rhs = m2.entries[[x, y]] * pi[y];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Canonical eigenvalue order: descending |m|, then descending real part,
/// then descending imaginary part — reproducible reports and stable
/// multiset comparisons.
fn canonical_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    let ka = (a.norm(), a.re, a.im);
    let kb = (b.norm(), b.re, b.im);
    kb.partial_cmp(&ka).unwrap()
}

/// Dense eigendecomposition with the canonical ordering and phase split.
///
/// Symmetric inputs (max |M - M^T| < 1e-12) are routed through the
/// symmetric solver so that degenerate eigenspaces come back with an
/// orthonormal basis; the general solver does not guarantee that, and the
/// orthonormality residual reported here is what downstream checks gate on.
pub fn spectrum(m: &TransitionMatrix) -> Result<SpectralData> {
    let a = &m.entries;
    let n = a.nrows();
    let sym_residual = {
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
            }
        }
        worst
    };

    let (mut vals, mut vecs): (Vec<Complex64>, Array2<Complex64>) = if sym_residual < 1e-12 {
        let (w, v) = a
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Eigensolver(e.to_string()))?;
        (
            w.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            v.mapv(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let (w, v) = a.eig().map_err(|e| Error::Eigensolver(e.to_string()))?;
        (w.to_vec(), v)
    };

    // Canonical order, applied consistently to values and vector columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| canonical_cmp(&vals[i], &vals[j]));
    vals = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        sorted_vecs
            .column_mut(new_col)
            .assign(&vecs.column(old_col));
    }
    vecs = sorted_vecs;

    // Unit norm and a deterministic phase: largest component real positive.
    for mut col in vecs.columns_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let anchor = col
                .iter()
                .cloned()
                .max_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap())
                .unwrap();
            let phase = if anchor.norm() > 0.0 {
                anchor / anchor.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let scale = phase.conj() / norm;
            col.mapv_inplace(|z| z * scale);
        }
    }

    if n > 1 {
        let top = vals[0].norm();
        let second = vals[1].norm();
        if (top - 1.0).abs() < 1e-9 && (second - 1.0).abs() < 1e-9 {
            return Err(Error::DegenerateTopEigenvalue { top, second });
        }
    }

    let phi: Vec<f64> = vals
        .iter()
        .map(|m| m.norm().clamp(0.0, 1.0).acos())
        .collect();
    let eta: Vec<f64> = vals
        .iter()
        .map(|m| {
            let mut e = m.arg();
            if e < 0.0 {
                e += std::f64::consts::TAU;
            }
            e
        })
        .collect();
    let delta = if n > 1 { 1.0 - vals[1].norm() } else { 1.0 };

    // Residual diagnostics.
    let mut ortho = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut g = Complex64::new(0.0, 0.0);
            for k in 0..n {
                g += vecs[[k, i]].conj() * vecs[[k, j]];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((g - target).norm());
        }
    }
    let aat = a.dot(&a.t());
    let ata = a.t().dot(a);
    let mut normality = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            normality = normality.max((aat[[i, j]] - ata[[i, j]]).abs());
        }
    }

    Ok(SpectralData {
        eigenvalues: vals,
        eigenvectors: vecs,
        phi,
        eta,
        delta,
        orthonormality_residual: ortho,
        normality_residual: normality,
    })
}

/// Eigenvalue multiset of a kernel with exact rank resolution.
///
/// Sweep kernels are typically low-rank: every state is resampled during a
/// sweep, so the null space is large and nilpotent (defective zero
/// eigenvalue). A dense eigensolver splits a defective cluster by roughly
/// machine-epsilon^(1/k) for a Jordan block of size k — orders of magnitude
/// above entrywise accuracy. Instead, locate the numerical range with an
/// SVD, eigensolve the compression onto that range, and pad with exact
/// zeros: range(M) lies inside the compression subspace, so the quotient
/// map is zero and spectrum(M) = spectrum(Q^T M Q) + {0, ...} exactly.
fn rank_resolved_eigenvalues(m: &TransitionMatrix) -> Result<Vec<Complex64>> {
    let n = m.dim();
    let (u, sigma, _) = m
        .entries
        .svd(true, false)
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let tol = sigma[0] * n as f64 * 1e-14;
    let r = sigma.iter().filter(|&&s| s > tol).count();
    if r == n {
        return Ok(spectrum(m)?.eigenvalues);
    }
    let u = u.expect("left singular vectors were requested");
    let q = u.slice(s![.., ..r]);
    let compressed = q.t().dot(&m.entries).dot(&q);
    let (w, _) = compressed
        .eig()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let mut vals = w.to_vec();
    vals.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), n - r));
    vals.sort_by(canonical_cmp);
    Ok(vals)
}

/// Distance between two eigenvalue multisets: greedy nearest-neighbour
/// matching after canonical sorting, reporting the largest matched gap.
pub fn eigenvalue_multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(canonical_cmp);
    b.sort_by(canonical_cmp);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for va in &a {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, vb) in b.iter().enumerate() {
            if !used[j] {
                let d = (va - vb).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        worst = worst.max(best_d);
    }
    worst
}

/// Result of the spectra-equality check: the worst eigenvalue multiset gap
/// among the three kernels, and the entrywise residuals of the two
/// diagonal-similarity identities that relate them through D = diag(pi).
#[derive(Debug, Clone)]
pub struct SpectraComparison {
    pub multiset_mismatch: f64,
    /// max |M2^T - D^{-1} M1 D|
    pub similarity_m2: f64,
    /// max |M_hyb^T - D^{-1/2} M2 D^{1/2}|
    pub similarity_m_hyb: f64,
}

/// Verify that M1, M2, M_hyb share eigenvalues and satisfy the similarity
/// identities M2^T = D^{-1} M1 D and M_hyb^T = D^{-1/2} M2 D^{1/2}.
pub fn verify_spectra_equal(
    m1: &TransitionMatrix,
    m2: &TransitionMatrix,
    m_hyb: &TransitionMatrix,
    pi: &[f64],
) -> Result<SpectraComparison> {
    if let Some(state) = pi.iter().position(|&p| p <= 0.0) {
        return Err(Error::SingularPi { state });
    }
    let s1 = rank_resolved_eigenvalues(m1)?;
    let s2 = rank_resolved_eigenvalues(m2)?;
    let sh = rank_resolved_eigenvalues(m_hyb)?;
    let multiset_mismatch = eigenvalue_multiset_distance(&s1, &s2)
        .max(eigenvalue_multiset_distance(&s1, &sh))
        .max(eigenvalue_multiset_distance(&s2, &sh));

    let n = m1.dim();
    let mut similarity_m2 = 0.0f64;
    let mut similarity_m_hyb = 0.0f64;
    for y in 0..n {
        for x in 0..n {
            // (M2^T)[y][x] = M2[x][y]; (D^{-1} M1 D)[y][x] = M1[y][x] pi[x] / pi[y]
            let lhs = m2.entries[[x, y]];
            let rhs = m1.entries[[y, x]] * pi[x] / pi[y];
            similarity_m2 = similarity_m2.max((lhs - rhs).abs());
            // (M_hyb^T)[y][x] = M_hyb[x][y];
            // (D^{-1/2} M2 D^{1/2})[y][x] = M2[y][x] sqrt(pi[x]/pi[y])
            let lhs = m_hyb.entries[[x, y]];
            let rhs = m2.entries[[y, x]] * (pi[x] / pi[y]).sqrt();
            similarity_m_hyb = similarity_m_hyb.max((lhs - rhs).abs());
        }
    }
    Ok(SpectraComparison {
        multiset_mismatch,
        similarity_m2,
        similarity_m_hyb,
    })
}

/// One classical Gibbs sweep: resample every node in index order from its
/// full conditional. The single-step output distribution equals column x of
/// `build_m1`.
pub fn classical_gibbs_step<R: Rng + ?Sized>(
    net: &BayesianNetwork,
    x: &[usize],
    rng: &mut R,
) -> Result<Assignment> {
    let mut state = x.to_vec();
    for i in 0..net.n_nodes() {
        let cond = net.full_conditional(i, &state)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = cond.len() - 1;
        for (v, &p) in cond.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = v;
                break;
            }
        }
        state[i] = chosen;
    }
    Ok(state)
}
