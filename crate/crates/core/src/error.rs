use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: |omega| = {omega:e} rad/s outside tabulated range [{min:e}, {max:e}]")]
    Range { omega: f64, min: f64, max: f64 },

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("pole: Bose occupation is singular at omega = 0 for T = {temperature} K")]
    Pole { temperature: f64 },

    #[error("regime guard violated: {guard} = {value:.4e} must stay below {limit} (use the regime-guard override to proceed)")]
    Regime { guard: &'static str, value: f64, limit: f64 },

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("accuracy: quadrature did not converge after {panels} panels (partial = {partial:e}, error estimate = {error:e})")]
    Accuracy { partial: f64, error: f64, panels: usize },

    #[error("internal consistency: {what}: {lhs:e} vs {rhs:e} (relative difference {rel:.3e}, limit {limit:e})")]
    Consistency { what: &'static str, lhs: f64, rhs: f64, rel: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("empty channel set")]
    EmptySet,

    #[error("stiffness: step size underflow at t = {t:e} s (h = {step:e} s)")]
    Stiffness { t: f64, step: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for reports and exit diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range { .. } => "range",
            Error::Singularity(_) => "singularity",
            Error::Pole { .. } => "pole",
            Error::Regime { .. } => "regime",
            Error::UnsupportedChannel(_) => "unsupported_channel",
            Error::Accuracy { .. } => "accuracy",
            Error::Consistency { .. } => "consistency",
            Error::Parse(_) => "parse",
            Error::EmptySet => "empty_set",
            Error::Stiffness { .. } => "stiffness",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Io(_) => "io",
        }
    }

    /// Whether this error comes from a physics precondition (regime, accuracy,
    /// singularity) rather than from malformed input.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::Regime { .. }
                | Error::Accuracy { .. }
                | Error::Consistency { .. }
                | Error::Singularity(_)
                | Error::Pole { .. }
                | Error::Range { .. }
                | Error::Stiffness { .. }
                | Error::Domain(_)
                | Error::UnsupportedChannel(_)
        )
    }
}

pub(crate) fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
