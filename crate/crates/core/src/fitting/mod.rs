//! Nonlinear least squares and the spectrum fit.

pub mod lm;
mod spectrum_fit;

pub use lm::{
    check_bounds, covariance, levenberg_marquardt, normal_matrix_conditioning, numerical_jacobian,
    LeastSquaresProblem, LmOptions, LmOutcome,
};
pub use spectrum_fit::{
    fit_report, fit_spectrum, fit_spectrum_multistart, initial_guess, model_jacobian, AxisReport, FitBounds, FitModelParams,
    FitOptions, FitReport, FitResult, FixedInputs, OccupationParameterization,
};
