//! Error types shared across the library.

use thiserror::Error;

/// All failure modes surfaced by network construction, spectral analysis,
/// operator building, and sampling.
#[derive(Debug, Error)]
pub enum Error {
    /// A network definition violates a structural rule (bad CPT row, cycle,
    /// name collision, non-power-of-two cardinality, ...).
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// Conditioning on an event of probability zero while evaluating a full
    /// conditional; carries the node and the packed configuration that
    /// triggered it.
    #[error("conditioning event has probability zero at node {node} (configuration {config})")]
    ZeroConditioningEvent { node: usize, config: usize },

    /// Two eigenvalues have modulus within 1e-9 of 1: the chain is reducible
    /// or periodic, outside the assumptions of the spectral machinery.
    #[error("degenerate top eigenvalue: |m_0| = {top}, |m_1| = {second}")]
    DegenerateTopEigenvalue { top: f64, second: f64 },

    /// The stationary distribution has a zero entry, so diag(pi) is singular.
    #[error("stationary distribution has a zero entry at state {state}")]
    SingularPi { state: usize },

    /// A nonzero eigenvalue phase collapsed to ~0 for j >= 1, so the paired
    /// busy-space vectors are not defined (sin(phi) in a denominator).
    #[error("degenerate phase phi_{index} = {phi:.3e}; busy pair undefined")]
    DegeneratePhase { index: usize, phi: f64 },

    /// Requested registers exceed the simulator qubit budget.
    #[error("qubit budget exceeded: need {required}, cap is {cap}")]
    BudgetExceeded { required: usize, cap: usize },

    /// A statevector length does not match the register layout.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two distributions passed to a comparison have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Gate emission only supports single-qubit targets; larger nodes fall
    /// back to a flagged dense block.
    #[error("node {node} has cardinality {cardinality}; gate emission supports binary nodes")]
    UnsupportedCardinality { node: usize, cardinality: usize },

    /// Underlying LAPACK/eigensolver failure.
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    /// I/O or serialization failure while reading/writing reports.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// JSON parse failure for network files or reports.
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
