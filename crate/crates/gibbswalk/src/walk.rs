//! The Szegedy walk operator W = U (-1)^pi_check U^dagger (-1)^pi_hat and
//! its spectral structure.
//!
//! The two reflections mark the R1 = 0 sector (pi_hat) and the R2 = 0 sector
//! (pi_check). On the busy subspace — the span of the R1 = 0 sector and its
//! image under U * SWAP — W rotates each invariant plane by twice the phase
//! angle of the corresponding hybrid-kernel eigenvalue; on the orthogonal
//! complement W is the identity. The walk is applied matrix-free with an
//! exact application counter, with a dense route kept alongside as a
//! cross-check.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::bayesnet::BayesianNetwork;
use crate::chains::{self, SpectralData};
use crate::embedding::{build_u, build_u1, build_u2, Completion, Embedding};
use crate::error::{Error, Result};
use crate::state::{phase_flip_sector, RegisterLayout, Statevector};

/// Flip the sign of every amplitude whose R1 register is zero. With a
/// nonzero `ctrl_mask` (probe bits), only amplitudes with those bits set are
/// affected.
pub fn reflect_pihat(sv: &mut Statevector, ctrl_mask: usize) {
    let layout = RegisterLayout::new(sv.n_bits);
    let r1_mask = (layout.n_states() - 1) << layout.n_bits;
    phase_flip_sector(&mut sv.amps, r1_mask | ctrl_mask, ctrl_mask);
}

/// Flip the sign of every amplitude whose R2 register is zero.
pub fn reflect_picheck(sv: &mut Statevector, ctrl_mask: usize) {
    let layout = RegisterLayout::new(sv.n_bits);
    let r2_mask = layout.n_states() - 1;
    phase_flip_sector(&mut sv.amps, r2_mask | ctrl_mask, ctrl_mask);
}

/// Exchange the contents of R1 and R2 (probe bits untouched).
pub fn swap_registers(sv: &mut Statevector) {
    let layout = RegisterLayout::new(sv.n_bits);
    let walk_dim = layout.walk_dim();
    let blocks = sv.amps.len() / walk_dim;
    let mut scratch = vec![Complex64::new(0.0, 0.0); walk_dim];
    for b in 0..blocks {
        let base = b * walk_dim;
        scratch.copy_from_slice(&sv.amps[base..base + walk_dim]);
        for (w, amp) in scratch.iter().enumerate() {
            sv.amps[base + layout.walk_index(layout.r2_of(w), layout.r1_of(w))] = *amp;
        }
    }
}

/// Matrix-free walk operator with an exact application counter.
pub struct WalkOperator<'a> {
    emb: &'a Embedding,
    count: u64,
}

impl<'a> WalkOperator<'a> {
    pub fn new(emb: &'a Embedding) -> Self {
        Self { emb, count: 0 }
    }

    pub fn embedding(&self) -> &Embedding {
        self.emb
    }

    /// Number of walk applications so far (controlled and inverse
    /// applications count alike).
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset_count(&mut self) {
        self.count = 0;
    }

    /// One application of W: reflect R1 = 0, U^dagger, reflect R2 = 0, U.
    pub fn apply(&mut self, sv: &mut Statevector) -> Result<()> {
        self.apply_controlled(sv, 0, false)
    }

    /// One application of W^dagger.
    pub fn apply_inverse(&mut self, sv: &mut Statevector) -> Result<()> {
        self.apply_controlled(sv, 0, true)
    }

    /// Controlled (inverse) walk application restricted to amplitudes whose
    /// `ctrl_mask` bits are all set; counts as one application.
    pub fn apply_controlled(
        &mut self,
        sv: &mut Statevector,
        ctrl_mask: usize,
        inverse: bool,
    ) -> Result<()> {
        if inverse {
            // W^dagger = U (-1)^pi_check U^dagger (-1)^pi_hat read in the
            // opposite order: the middle reflection chain is self-adjoint.
            self.emb.apply_u_controlled(sv, true, ctrl_mask)?;
            reflect_picheck(sv, ctrl_mask);
            self.emb.apply_u_controlled(sv, false, ctrl_mask)?;
            reflect_pihat(sv, ctrl_mask);
        } else {
            reflect_pihat(sv, ctrl_mask);
            self.emb.apply_u_controlled(sv, true, ctrl_mask)?;
            reflect_picheck(sv, ctrl_mask);
            self.emb.apply_u_controlled(sv, false, ctrl_mask)?;
        }
        self.count += 1;
        Ok(())
    }
}

/// Dense walk matrix assembled from the dense embedding builders (kept
/// independent of the matrix-free route for cross-checking).
pub fn build_dense_w(net: &BayesianNetwork, completion: Completion) -> Result<Array2<Complex64>> {
    let u1 = build_u1(net, completion)?;
    let u2 = build_u2(net, completion)?;
    let u = build_u(&u1, &u2);
    let layout = RegisterLayout::new(net.n_bits());
    let dim = layout.walk_dim();
    let uh = u.mat.t().mapv(|z| z.conj());
    // W = U * S_check * U^dagger * S_hat with diagonal sign matrices.
    let mut m = uh.clone();
    for idx in 0..dim {
        if layout.r1_of(idx) == 0 {
            for r in 0..dim {
                m[[r, idx]] = -m[[r, idx]];
            }
        }
    }
    for idx in 0..dim {
        if layout.r2_of(idx) == 0 {
            for c in 0..dim {
                m[[idx, c]] = -m[[idx, c]];
            }
        }
    }
    Ok(u.mat.dot(&m))
}

/// One invariant plane of the busy subspace for an eigenvalue
/// m_j = e^{i eta_j} cos(phi_j) with phi_j in (0, pi/2].
#[derive(Debug, Clone)]
pub struct BusyPair {
    pub j: usize,
    pub phi: f64,
    pub eta: f64,
    /// e1 = the eigenvector on R2 with R1 = 0.
    pub e1: Statevector,
    /// e2 completes the orthonormal frame of the plane:
    /// e^{-i eta} U SWAP e1 = cos(phi) e1 + sin(phi) e2.
    pub e2: Statevector,
    /// (e1 - i e2)/sqrt(2); walk eigenvalue e^{+2i phi}.
    pub psi_plus: Statevector,
    /// (e1 + i e2)/sqrt(2); walk eigenvalue e^{-2i phi}.
    pub psi_minus: Statevector,
}

/// Eigenvectors of W on the busy subspace, built from a hybrid-kernel
/// eigenbasis. Exact when that basis is orthonormal; for non-normal kernels
/// the vectors are still constructed and callers inspect the reported
/// residuals instead of asserting them.
#[derive(Debug, Clone)]
pub struct BusyBasis {
    /// Stationary state: the top eigenvector on R2 with R1 = 0.
    pub psi0: Statevector,
    pub pairs: Vec<BusyPair>,
}

/// The stationary walk state: sqrt(pi) on R2 with R1 = 0.
pub fn stationary_state(net: &BayesianNetwork) -> Statevector {
    let layout = RegisterLayout::new(net.n_bits());
    let mut sv = Statevector::zeros(net.n_bits(), 0);
    for (y, p) in net.stationary_distribution().iter().enumerate() {
        sv.amps[layout.walk_index(0, y)] = Complex64::new(p.sqrt(), 0.0);
    }
    sv
}

/// Place an N_S-dimensional vector on R2 with R1 = 0.
fn lift_r2(layout: RegisterLayout, v: ndarray::ArrayView1<Complex64>) -> Statevector {
    let mut sv = Statevector::zeros(layout.n_bits, 0);
    for (y, amp) in v.iter().enumerate() {
        sv.amps[layout.walk_index(0, y)] = *amp;
    }
    sv
}

/// Place an N_S-dimensional vector on R1 with R2 = 0.
fn lift_r1(layout: RegisterLayout, v: ndarray::ArrayView1<Complex64>) -> Statevector {
    let mut sv = Statevector::zeros(layout.n_bits, 0);
    for (x, amp) in v.iter().enumerate() {
        sv.amps[layout.walk_index(x, 0)] = *amp;
    }
    sv
}

/// Construct the busy-subspace eigenvector candidates from a spectral
/// decomposition of the hybrid kernel.
pub fn busy_basis(spectral: &SpectralData, emb: &Embedding) -> Result<BusyBasis> {
    let layout = emb.layout();
    let n = spectral.eigenvalues.len();
    let psi0 = lift_r2(layout, spectral.eigenvectors.column(0));
    let mut pairs = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let phi = spectral.phi[j];
        if phi <= 1e-8 {
            return Err(Error::DegeneratePhase { index: j, phi });
        }
        let eta = spectral.eta[j];
        let e1 = lift_r2(layout, spectral.eigenvectors.column(j));
        // U SWAP e1 = U applied to the same vector lifted onto R1.
        let mut b = lift_r1(layout, spectral.eigenvectors.column(j));
        emb.apply_u(&mut b, false)?;
        let phase = Complex64::from_polar(1.0, -eta);
        let (sin_phi, cos_phi) = phi.sin_cos();
        let mut e2 = Statevector::zeros(layout.n_bits, 0);
        for (i, out) in e2.amps.iter_mut().enumerate() {
            *out = (phase * b.amps[i] - cos_phi * e1.amps[i]) / sin_phi;
        }
        let mut psi_plus = Statevector::zeros(layout.n_bits, 0);
        let mut psi_minus = Statevector::zeros(layout.n_bits, 0);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let i_unit = Complex64::new(0.0, 1.0);
        for idx in 0..psi_plus.amps.len() {
            psi_plus.amps[idx] = (e1.amps[idx] - i_unit * e2.amps[idx]) * inv_sqrt2;
            psi_minus.amps[idx] = (e1.amps[idx] + i_unit * e2.amps[idx]) * inv_sqrt2;
        }
        pairs.push(BusyPair {
            j,
            phi,
            eta,
            e1,
            e2,
            psi_plus,
            psi_minus,
        });
    }
    Ok(BusyBasis { psi0, pairs })
}

/// Orthonormal spanning set of the busy subspace V_A + V_B, where V_A is the
/// R1 = 0 sector and V_B = U SWAP V_A. Optionally seeded with a first vector
/// (kept exactly, e.g. the stationary state). Works for any network because
/// it never touches the eigenbasis.
pub fn busy_subspace_basis(
    emb: &Embedding,
    first: Option<&Statevector>,
) -> Result<Vec<Statevector>> {
    let layout = emb.layout();
    let ns = layout.n_states();
    let mut raw: Vec<Statevector> = Vec::with_capacity(2 * ns + 1);
    if let Some(f) = first {
        raw.push(f.clone());
    }
    for y in 0..ns {
        let mut sv = Statevector::zeros(layout.n_bits, 0);
        sv.amps[layout.walk_index(0, y)] = Complex64::new(1.0, 0.0);
        raw.push(sv);
    }
    for x in 0..ns {
        let mut sv = Statevector::zeros(layout.n_bits, 0);
        sv.amps[layout.walk_index(x, 0)] = Complex64::new(1.0, 0.0);
        emb.apply_u(&mut sv, false)?;
        raw.push(sv);
    }
    let mut basis: Vec<Statevector> = Vec::new();
    for mut v in raw {
        for b in &basis {
            let overlap = b.inner(&v);
            for (vi, bi) in v.amps.iter_mut().zip(&b.amps) {
                *vi -= overlap * bi;
            }
        }
        let norm = v.norm();
        if norm > 1e-10 {
            for a in &mut v.amps {
                *a /= norm;
            }
            basis.push(v);
        }
    }
    Ok(basis)
}

/// Project `sv` onto the orthogonal complement of an orthonormal basis.
pub fn project_out(sv: &mut Statevector, basis: &[Statevector]) {
    for b in basis {
        let overlap = b.inner(sv);
        for (vi, bi) in sv.amps.iter_mut().zip(&b.amps) {
            *vi -= overlap * bi;
        }
    }
}

/// Full spectral diagnostic of the walk operator on one network.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WalkSpectrumReport {
    pub n_bits: usize,
    pub walk_dim: usize,
    /// Orthonormality residual of the hybrid-kernel eigenbasis; identities
    /// that depend on it are asserted only when this is < 1e-6.
    pub orthonormality_residual: f64,
    /// || W psi0 - psi0 ||.
    pub fixed_point_residual: f64,
    /// || U SWAP psi0 - psi0 ||.
    pub u_swap_fixed_residual: f64,
    /// max_j || proj_{R1=0} (U SWAP) |m_j 0> - m_j |m_j 0> ||; holds for any
    /// right eigenbasis.
    pub projector_forward_residual: f64,
    /// max_j || proj_{R1=0} (SWAP U^dagger) |m_j 0> - m_j^* |m_j 0> ||;
    /// requires a normal kernel.
    pub projector_adjoint_residual: f64,
    /// max over pairs of || W psi_{+-j} - e^{+-2i phi_j} psi_{+-j} ||.
    pub pair_residual: f64,
    /// max | Gram(busy basis) - I |.
    pub gram_residual: f64,
    /// Dense W spectrum vs {1} + {e^{+-2i phi_j}} + {1 x (N_S-1)^2}, phases
    /// from hybrid-kernel eigenvalues.
    pub eigenvalue_multiset_mismatch: f64,
    /// Same comparison with phases from hybrid-kernel singular values; this
    /// is the prediction that holds for every network.
    pub singular_multiset_mismatch: f64,
    /// Dense eigenvalues within 1e-9 of +1.
    pub unit_eigenvalue_multiplicity: usize,
    /// max over sampled vectors of || W v - v || for v in the orthogonal
    /// complement of the busy subspace.
    pub perp_identity_residual: f64,
}

const MAX_DENSE_WALK_BITS: usize = 4;

/// Build everything, measure every identity, return the report. Assertions
/// are the caller's business; only prerequisite failures (eigensolver,
/// budget) surface as errors.
pub fn verify_walk_spectrum(net: &BayesianNetwork) -> Result<WalkSpectrumReport> {
    if net.n_bits() > MAX_DENSE_WALK_BITS {
        return Err(Error::BudgetExceeded {
            required: net.n_bits(),
            cap: MAX_DENSE_WALK_BITS,
        });
    }
    let layout = RegisterLayout::new(net.n_bits());
    let ns = layout.n_states();
    let m1 = chains::build_m1(net)?;
    let m2 = chains::build_m2(net)?;
    let mh = chains::build_m_hyb(&m1, &m2);
    let spectral = chains::spectrum(&mh)?;
    let emb = Embedding::new(net, Completion::DescendingBasis)?;
    let mut walk = WalkOperator::new(&emb);
    let basis = busy_basis(&spectral, &emb)?;

    // Stationary state.
    let mut w_psi0 = basis.psi0.clone();
    walk.apply(&mut w_psi0)?;
    let fixed_point_residual = diff_norm(&w_psi0, &basis.psi0);
    let mut us_psi0 = basis.psi0.clone();
    swap_registers(&mut us_psi0);
    emb.apply_u(&mut us_psi0, false)?;
    let u_swap_fixed_residual = diff_norm(&us_psi0, &basis.psi0);

    // Projector identities on every eigenvector.
    let mut projector_forward_residual = 0.0f64;
    let mut projector_adjoint_residual = 0.0f64;
    for j in 0..ns {
        let m_j = spectral.eigenvalues[j];
        let lifted = lift_r2(layout, spectral.eigenvectors.column(j));
        let mut fwd = lift_r1(layout, spectral.eigenvectors.column(j));
        emb.apply_u(&mut fwd, false)?;
        project_r1_zero(layout, &mut fwd);
        projector_forward_residual =
            projector_forward_residual.max(scaled_diff_norm(&fwd, &lifted, m_j));
        let mut adj = lifted.clone();
        emb.apply_u(&mut adj, true)?;
        swap_registers(&mut adj);
        project_r1_zero(layout, &mut adj);
        projector_adjoint_residual =
            projector_adjoint_residual.max(scaled_diff_norm(&adj, &lifted, m_j.conj()));
    }

    // Rotation-pair eigenvector residuals and the busy Gram matrix.
    let mut pair_residual = 0.0f64;
    for pair in &basis.pairs {
        for (vec, sign) in [(&pair.psi_plus, 1.0), (&pair.psi_minus, -1.0)] {
            let mut out = vec.clone();
            walk.apply(&mut out)?;
            let expect = Complex64::from_polar(1.0, sign * 2.0 * pair.phi);
            let mut acc = 0.0f64;
            for (a, b) in out.amps.iter().zip(&vec.amps) {
                acc += (a - expect * b).norm_sqr();
            }
            pair_residual = pair_residual.max(acc.sqrt());
        }
    }
    let mut gram_vectors: Vec<&Statevector> = vec![&basis.psi0];
    for pair in &basis.pairs {
        gram_vectors.push(&pair.psi_plus);
        gram_vectors.push(&pair.psi_minus);
    }
    let mut gram_residual = 0.0f64;
    for (i, a) in gram_vectors.iter().enumerate() {
        for (k, b) in gram_vectors.iter().enumerate() {
            let g = a.inner(b);
            let target = if i == k { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((g - target).norm());
        }
    }

    // Dense spectrum against both phase predictions.
    let dense = build_dense_w(net, Completion::DescendingBasis)?;
    let (dense_eigs, _) = dense
        .eig()
        .map_err(|e| Error::Eigensolver(format!("dense walk eigendecomposition: {e}")))?;
    let dense_eigs: Vec<Complex64> = dense_eigs.to_vec();
    let from_eigenvalues = predicted_spectrum(&spectral.phi);
    let singular_phis = singular_phases(&mh.entries)?;
    let from_singulars = predicted_spectrum(&singular_phis);
    let eigenvalue_multiset_mismatch =
        chains::eigenvalue_multiset_distance(&dense_eigs, &from_eigenvalues);
    let singular_multiset_mismatch =
        chains::eigenvalue_multiset_distance(&dense_eigs, &from_singulars);
    let unit_eigenvalue_multiplicity = dense_eigs
        .iter()
        .filter(|z| (*z - Complex64::new(1.0, 0.0)).norm() < 1e-9)
        .count();

    // Identity on the busy-orthogonal complement, sampled.
    use rand::Rng;
    use rand::SeedableRng;
    let span = busy_subspace_basis(&emb, None)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
    let mut perp_identity_residual = 0.0f64;
    for _ in 0..20 {
        let mut v = Statevector::zeros(net.n_bits(), 0);
        for a in &mut v.amps {
            *a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        project_out(&mut v, &span);
        let norm = v.norm();
        if norm < 1e-6 {
            continue; // busy subspace fills the whole space (tiny nets)
        }
        for a in &mut v.amps {
            *a /= norm;
        }
        let before = v.clone();
        walk.apply(&mut v)?;
        perp_identity_residual = perp_identity_residual.max(diff_norm(&v, &before));
    }

    Ok(WalkSpectrumReport {
        n_bits: net.n_bits(),
        walk_dim: layout.walk_dim(),
        orthonormality_residual: spectral.orthonormality_residual,
        fixed_point_residual,
        u_swap_fixed_residual,
        projector_forward_residual,
        projector_adjoint_residual,
        pair_residual,
        gram_residual,
        eigenvalue_multiset_mismatch,
        singular_multiset_mismatch,
        unit_eigenvalue_multiplicity,
        perp_identity_residual,
    })
}

fn diff_norm(a: &Statevector, b: &Statevector) -> f64 {
    a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn scaled_diff_norm(a: &Statevector, b: &Statevector, scale: Complex64) -> f64 {
    a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| (x - scale * y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn project_r1_zero(layout: RegisterLayout, sv: &mut Statevector) {
    for idx in 0..sv.amps.len() {
        if layout.r1_of(idx) != 0 {
            sv.amps[idx] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Expected walk spectrum from phase angles phi_j (j = 1..N_S-1): the
/// stationary 1, a conjugate pair per phase, and (N_S-1)^2 further 1s on the
/// busy-orthogonal complement.
fn predicted_spectrum(phis: &[f64]) -> Vec<Complex64> {
    let ns = phis.len();
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for &phi in &phis[1..] {
        out.push(Complex64::from_polar(1.0, 2.0 * phi));
        out.push(Complex64::from_polar(1.0, -2.0 * phi));
    }
    out.extend(std::iter::repeat_n(
        Complex64::new(1.0, 0.0),
        (ns - 1) * (ns - 1),
    ));
    out
}

/// Phase angles arccos(sigma_l) from the singular values of the hybrid
/// kernel, sorted descending; sigma_0 = 1 exactly.
fn singular_phases(m_hyb: &Array2<f64>) -> Result<Vec<f64>> {
    use ndarray_linalg::SVD;
    let (_, s, _): (Option<Array2<f64>>, Array1<f64>, Option<Array2<f64>>) = m_hyb
        .svd(false, false)
        .map_err(|e| Error::Eigensolver(format!("hybrid kernel SVD: {e}")))?;
    let mut sigmas: Vec<f64> = s.to_vec();
    sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sigmas
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0).acos())
        .collect())
}
