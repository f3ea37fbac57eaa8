//! Simulator and verification library for quantum Gibbs sampling of
//! discrete Bayesian networks via Szegedy walk operators.
//!
//! The pipeline, bottom to top:
//!
//! - [`bayesnet`]: directed acyclic networks of finite-cardinality nodes
//!   with conditional probability tables, packing of joint assignments into
//!   qubit registers, and the exact stationary (joint) distribution.
//! - [`chains`]: the two single-sweep Gibbs transition matrices (forward and
//!   swapped node order), their entrywise-geometric-mean hybrid, pair
//!   detailed balance, and the hybrid's spectral data (phases, gap).
//! - [`state`]: dense statevectors over the two walk registers plus probe
//!   qubits, with masked sector kernels shared by every operator here.
//! - [`embedding`]: the unitary pair U1, U2 built node by node from the
//!   conditional tables, their product U = U2^dagger U1 whose top-left
//!   sector reproduces the hybrid chain, and a multiplexed-rotation gate
//!   decomposition for binary nodes.
//! - [`walk`]: the Szegedy walk W from U, the register swap, the two sector
//!   reflections, its exact stationary eigenvector, and a spectrum report
//!   checking the predicted eigenphase multiset.
//! - [`reflection`]: phase-estimation probe blocks that convert W into an
//!   approximate reflection about the stationary state, with probe-size
//!   selection under a hard qubit budget.
//! - [`sampler`]: amplitude amplification on top of the approximate
//!   reflection, multinomial measurement, the classical Gibbs baseline, and
//!   the quantum-vs-classical cost comparison.
//!
//! Everything is dense and double-precision; the point is verification of
//! the construction on small networks, not scale.

pub mod bayesnet;
pub mod chains;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod reflection;
pub mod sampler;
pub mod state;
pub mod walk;

pub use bayesnet::{Assignment, BayesianNetwork, NodeSpec};
pub use error::{Error, Result};
