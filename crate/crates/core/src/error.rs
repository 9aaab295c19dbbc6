use thiserror::Error;

/// Crate-wide error type. Variants are grouped by failure class: input
/// validation, numerical breakdown, and optimizer budget exhaustion. The CLI
/// maps these classes onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^H| element = {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix dimension {dim} is not a power of two within the supported register sizes")]
    InvalidDimension { dim: usize },

    #[error("site index {site} out of range for a {n_qubits}-qubit register (sites are 1-based)")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("register must have between {min} and {max} qubits, got {n_qubits}")]
    RegisterSize { n_qubits: usize, min: usize, max: usize },

    #[error("invalid purity parameters: {detail}")]
    InvalidPurity { detail: String },

    #[error("polar angle must lie in [0, pi], got {theta0}")]
    InvalidAngle { theta0: f64 },

    #[error("trace must be 1, got {trace:.17e}")]
    NonUnitTrace { trace: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "Fisher information diverges: outcome {outcome} has probability {prob:.3e} \
         but probability derivative {dprob:.3e}"
    )]
    DivergentFisher { outcome: f64, prob: f64, dprob: f64 },

    #[error(
        "quantum Fisher information routes disagree: Tr[rho L^2] = {trace_form:.17e}, \
         eigen expansion = {eigen_form:.17e}"
    )]
    QfiRouteMismatch { trace_form: f64, eigen_form: f64 },

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error(
        "constraint matrix is rank deficient: rank {rank} of 3, condition number {cond:.3e}"
    )]
    RankDeficient { rank: usize, cond: f64 },

    #[error(
        "sampled values are not angle independent: relative spread {spread:.3e} \
         exceeds {limit:.3e} at N = {n_qubits}"
    )]
    SpreadViolation { n_qubits: usize, spread: f64, limit: f64 },

    #[error("purity-doubling ratio {ratio:.17e} deviates from 4 by more than {tol:.1e}")]
    DoublingViolation { ratio: f64, tol: f64 },

    #[error("computed values break an expected law: {0}")]
    LawViolation(String),

    #[error(
        "optimizer budget exhausted without reaching a rank-3 constraint matrix: \
         best fitness {best_fitness:.3e}, rank {best_rank}, condition number {best_cond:.3e}"
    )]
    OptimizerBudget { best_fitness: f64, best_rank: usize, best_cond: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 4 when the
    /// optimizer exhausts its budget, 3 for every numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidAngle { .. }
            | Error::InvalidPurity { .. }
            | Error::RegisterSize { .. }
            | Error::SiteOutOfRange { .. }
            | Error::Io(_)
            | Error::Serde(_) => 2,
            Error::OptimizerBudget { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
