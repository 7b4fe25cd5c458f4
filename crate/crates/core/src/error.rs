use thiserror::Error;

/// Errors produced by the trap, QND, propagator and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input parameter violates its precondition.
    #[error("{0}")]
    Validation(String),

    /// The reference trajectory vanishes inside the window, so `-m xdot / x` diverges.
    #[error("reference trajectory has zeros of x in the window at t = {}", format_times(.times))]
    SingularWindow { times: Vec<f64> },

    /// Evaluation time outside the trajectory window.
    #[error("time {t} outside window [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    /// Integration produced non-finite values.
    #[error("numeric range exceeded at t = {t}")]
    NumericRange { t: f64 },

    /// The lattice quadratic form is (numerically) singular, e.g. at a caustic.
    #[error("degenerate Gaussian integral: {0}")]
    Degenerate(String),

    /// Two algebraically equivalent evaluation routes disagree.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// Malformed configuration text.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

fn format_times(times: &[f64]) -> String {
    times
        .iter()
        .map(|t| format!("{t:.10}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
