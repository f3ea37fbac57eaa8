//! Statevectors over the two walk registers plus optional probe qubits, and
//! the matrix-free kernels everything else is built from.
//!
//! Bit layout of a basis index, least significant first:
//!
//! ```text
//!   [0, nb)            R2  (resampled / sample register)
//!   [nb, 2nb)          R1  (conditioning register)
//!   [2nb, 2nb + ac)    probe blocks, block k at [2nb + a*k, 2nb + a*(k+1))
//! ```
//!
//! so a walk basis state |r1, r2> sits at index r1 * N_S + r2, matching the
//! dense matrix convention. Within a register, node 0 occupies the most
//! significant bit group (same packing as `BayesianNetwork::pack`).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Placement of the two nb-qubit walk registers in a statevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub n_bits: usize,
}

impl RegisterLayout {
    pub fn new(n_bits: usize) -> Self {
        Self { n_bits }
    }

    /// States per register.
    pub fn n_states(&self) -> usize {
        1 << self.n_bits
    }

    /// Dimension of the walk space (both registers, no probes).
    pub fn walk_dim(&self) -> usize {
        1 << (2 * self.n_bits)
    }

    /// Index of the walk basis state |r1, r2>.
    pub fn walk_index(&self, r1: usize, r2: usize) -> usize {
        r1 * self.n_states() + r2
    }

    pub fn r2_of(&self, idx: usize) -> usize {
        idx & (self.n_states() - 1)
    }

    pub fn r1_of(&self, idx: usize) -> usize {
        (idx >> self.n_bits) & (self.n_states() - 1)
    }
}

/// Dense complex amplitude vector with its register map.
#[derive(Debug, Clone)]
pub struct Statevector {
    pub amps: Vec<Complex64>,
    pub n_bits: usize,
    pub probe_bits: usize,
}

impl Statevector {
    pub fn dim(n_bits: usize, probe_bits: usize) -> usize {
        1 << (2 * n_bits + probe_bits)
    }

    /// The all-zero-amplitude vector (for accumulation).
    pub fn zeros(n_bits: usize, probe_bits: usize) -> Self {
        Self {
            amps: vec![Complex64::new(0.0, 0.0); Self::dim(n_bits, probe_bits)],
            n_bits,
            probe_bits,
        }
    }

    /// Basis state |idx>.
    pub fn basis(n_bits: usize, probe_bits: usize, idx: usize) -> Self {
        let mut sv = Self::zeros(n_bits, probe_bits);
        sv.amps[idx] = Complex64::new(1.0, 0.0);
        sv
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::new(self.n_bits)
    }

    pub fn check_dim(&self) -> Result<()> {
        let expected = Self::dim(self.n_bits, self.probe_bits);
        if self.amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.amps.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// <self | other>.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability distribution over the R2 register (marginal over R1 and
    /// probes) — this is what measuring the sample register yields.
    pub fn r2_marginal(&self) -> Vec<f64> {
        let ns = 1 << self.n_bits;
        let mut out = vec![0.0; ns];
        for (idx, amp) in self.amps.iter().enumerate() {
            out[idx & (ns - 1)] += amp.norm_sqr();
        }
        out
    }
}

/// Flip the sign of every amplitude whose index matches `value` on the bits
/// selected by `mask` — the building block for all sector reflections.
pub fn phase_flip_sector(amps: &mut [Complex64], mask: usize, value: usize) {
    for (idx, amp) in amps.iter_mut().enumerate() {
        if idx & mask == value {
            *amp = -*amp;
        }
    }
}

/// Apply a multiplexed real block to the target bit group `[target_lo,
/// target_lo + t_bits)`. For every base index with zeroed target bits (and
/// with all `ctrl_mask` bits set, when a control mask is given), `select`
/// chooses the small matrix applied to the 2^t_bits amplitudes reached by
/// varying the target bits. `select` receives the base index so it can read
/// conditioning values from the untouched bits.
pub fn apply_multiplexed_real<'a, F>(
    amps: &mut [Complex64],
    target_lo: usize,
    t_bits: usize,
    ctrl_mask: usize,
    mut select: F,
) where
    F: FnMut(usize) -> &'a Array2<f64>,
{
    let dim = amps.len();
    let span = 1usize << t_bits;
    let low_mask = (1usize << target_lo) - 1;
    let mut scratch = vec![Complex64::new(0.0, 0.0); span];
    for m in 0..dim >> t_bits {
        let base = ((m >> target_lo) << (target_lo + t_bits)) | (m & low_mask);
        if base & ctrl_mask != ctrl_mask {
            continue;
        }
        let block = select(base);
        for (b, slot) in scratch.iter_mut().enumerate() {
            *slot = amps[base | (b << target_lo)];
        }
        for b in 0..span {
            let mut acc = Complex64::new(0.0, 0.0);
            for bp in 0..span {
                let w = block[[b, bp]];
                if w != 0.0 {
                    acc += w * scratch[bp];
                }
            }
            amps[base | (b << target_lo)] = acc;
        }
    }
}

/// Complex-matrix counterpart of [`apply_multiplexed_real`] with a fixed
/// block (used for the Fourier step on probe blocks).
pub fn apply_block_complex(
    amps: &mut [Complex64],
    target_lo: usize,
    t_bits: usize,
    ctrl_mask: usize,
    block: &Array2<Complex64>,
) {
    let dim = amps.len();
    let span = 1usize << t_bits;
    let low_mask = (1usize << target_lo) - 1;
    let mut scratch = vec![Complex64::new(0.0, 0.0); span];
    for m in 0..dim >> t_bits {
        let base = ((m >> target_lo) << (target_lo + t_bits)) | (m & low_mask);
        if base & ctrl_mask != ctrl_mask {
            continue;
        }
        for (b, slot) in scratch.iter_mut().enumerate() {
            *slot = amps[base | (b << target_lo)];
        }
        for b in 0..span {
            let mut acc = Complex64::new(0.0, 0.0);
            for bp in 0..span {
                acc += block[[b, bp]] * scratch[bp];
            }
            amps[base | (b << target_lo)] = acc;
        }
    }
}
