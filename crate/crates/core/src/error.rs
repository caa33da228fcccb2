use thiserror::Error;

/// Errors produced by the numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spherical basis is undefined on the polar axis (theta = {theta})")]
    PoleSingularity { theta: f64 },

    #[error("point is not a fixed point: |f(x0)| = {residual:e} exceeds tolerance {tol:e}")]
    NotFixedPoint { residual: f64, tol: f64 },

    #[error("nonhyperbolic fixed point: eigenvalue with |Re| = {re:e} below tolerance")]
    Nonhyperbolic { re: f64 },

    #[error("spectrum does not match a saddle with a two-dimensional manifold: {0}")]
    NotASaddle(String),

    #[error("spectrum case mismatch: {0}")]
    SpectrumMismatch(String),

    #[error("trajectory blew up at t = {t}: |x| = {norm:e}")]
    BlowUp { t: f64, norm: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("time {t} is outside the integrated interval [{start}, {end}]")]
    OutsideTrajectory { t: f64, start: f64, end: f64 },

    #[error("degenerate manifold normal |f ^ x_alpha| = {norm:e} at p = {p}, alpha = {alpha}")]
    DegenerateNormal { p: f64, alpha: f64, norm: f64 },

    #[error("foliation failure: {0}")]
    Foliation(String),

    #[error("trajectory from seed {index} never reached the calibration section")]
    SectionNotReached { index: usize },

    #[error("point (p = {p}, alpha = {alpha}) lies outside the chart domain [{p_min}, {p_max}]")]
    OutsideChart {
        p: f64,
        alpha: f64,
        p_min: f64,
        p_max: f64,
    },

    #[error("chart kind {kind} does not support this operation: {op}")]
    WrongChartKind { kind: String, op: String },

    #[error("integrand has not decayed at truncation radius {radius} (envelope {envelope:e})")]
    NonDecaying { radius: f64, envelope: f64 },

    #[error("quadrature failed to converge after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureNonConvergence { subdivisions: usize, error: f64 },

    #[error("unknown {what}: {name}")]
    Unknown { what: String, name: String },

    #[error("output failed: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Unknown { .. }
                | Error::WrongChartKind { .. }
                | Error::SpectrumMismatch(_)
                | Error::OutsideChart { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
