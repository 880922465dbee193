//! Error type shared by every module.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("Lamb-Dicke parameter {eta:.4}{} is not below 0.5", axis_suffix(.axis))]
    LambDickeViolation { axis: Option<char>, eta: f64 },
    #[error("level {n} exceeds the trap depth {depth}")]
    IndexAboveTrapDepth { n: usize, depth: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("integration step too large: {0}")]
    StepTooLarge(String),
    #[error("population {population:.3e} at the top Fock level exceeds 1e-3")]
    TruncationOverflow { population: f64 },
    #[error("steady state is not unique")]
    NonUniqueSteadyState,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("heating outruns cooling: population {top_population:.3e} reaches the trap depth")]
    HeatingDivergence { top_population: f64 },
    #[error("singular balance matrix")]
    SingularBalanceMatrix,
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("singular normal matrix: {0}")]
    SingularNormalMatrix(String),
    #[error("parameter {name} = {value} outside bounds [{lower}, {upper}]")]
    BoundsViolation { name: String, value: f64, lower: f64, upper: f64 },
    #[error("non-physical sidebands: S- = {s_minus}, S+ = {s_plus}")]
    NonPhysicalSidebands { s_minus: f64, s_plus: f64 },
    #[error("grid step {step} Hz too coarse for minimum width {min_width} Hz")]
    GridTooCoarse { step: f64, min_width: f64 },
    #[error("modulation depths sum to {total:.4} > 1")]
    ModulationOverflow { total: f64 },
    #[error("record of {duration} s shorter than two windows of {window} s")]
    WindowTooLong { duration: f64, window: f64 },
    #[error("frequency grids differ")]
    GridMismatch,
    #[error("fit not converged")]
    NotConverged,
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

fn axis_suffix(axis: &Option<char>) -> String {
    axis.map(|a| format!(" on axis {a}")).unwrap_or_default()
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::LambDickeViolation { .. } => "lamb_dicke_violation",
            Error::IndexAboveTrapDepth { .. } => "index_above_trap_depth",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::StepTooLarge(_) => "step_too_large",
            Error::TruncationOverflow { .. } => "truncation_overflow",
            Error::NonUniqueSteadyState => "non_unique_steady_state",
            Error::NoConvergence(_) => "no_convergence",
            Error::HeatingDivergence { .. } => "heating_divergence",
            Error::SingularBalanceMatrix => "singular_balance_matrix",
            Error::FitDiverged(_) => "fit_diverged",
            Error::SingularNormalMatrix(_) => "singular_normal_matrix",
            Error::BoundsViolation { .. } => "bounds_violation",
            Error::NonPhysicalSidebands { .. } => "non_physical_sidebands",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::ModulationOverflow { .. } => "modulation_overflow",
            Error::WindowTooLong { .. } => "window_too_long",
            Error::GridMismatch => "grid_mismatch",
            Error::NotConverged => "not_converged",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
