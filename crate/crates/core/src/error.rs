use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty vertex subset")]
    EmptySubset,

    #[error("invalid vertex subset: {0}")]
    InvalidSubset(String),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite phase value")]
    NonFinite,

    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("configuration is not balanced (order parameter modulus {0:e})")]
    NotBalanced(f64),

    #[error("configuration is not an equilibrium (residual {0:e})")]
    NotEquilibrium(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("spectrum has no zero eigenvalue; the phase-shift direction was lost numerically")]
    NoZeroEigenvalue,

    #[error("enumeration guard exceeded: n = {n} > {max}")]
    TooLarge { n: usize, max: usize },

    #[error("integration produced a non-finite state at t = {0}")]
    Diverged(f64),

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::EmptySubset => "empty_subset",
            Error::InvalidSubset(_) => "invalid_subset",
            Error::SelfLoop(_) => "self_loop",
            Error::DuplicateEdge(..) => "duplicate_edge",
            Error::Parse { .. } => "parse",
            Error::NonFinite => "non_finite",
            Error::Asymmetric(_) => "asymmetric",
            Error::NotSquare { .. } => "not_square",
            Error::NotBalanced(_) => "not_balanced",
            Error::NotEquilibrium(_) => "not_equilibrium",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::NoZeroEigenvalue => "no_zero_eigenvalue",
            Error::TooLarge { .. } => "too_large",
            Error::Diverged(_) => "diverged",
            Error::Unsupported(_) => "unsupported",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
