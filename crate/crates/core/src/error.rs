use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("trajectory left the admissible region at t = {t}: {state:?}")]
    DomainExit { t: f64, state: Vec<f64> },

    #[error("orbit did not return to the section before t = {0}")]
    NoReturn(f64),

    #[error("resonant debt equation: Floquet multiplier {0} is too close to 1")]
    Resonance(f64),

    #[error("phase/amplitude frame is degenerate at node {node} (condition number {cond:e})")]
    FrameDegenerate { node: usize, cond: f64 },

    #[error("no sign change of {0} in the scanned window")]
    NoSignChange(&'static str),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate periodic orbit: {0}")]
    DegenerateOrbit(String),

    #[error("quadrature did not reach tolerance on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("Floquet analysis failed: {0}")]
    Floquet(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl Error {
    /// Short machine-readable class name, used in manifests and CSV failure records.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Calibration(_) => "calibration",
            Error::NoRoot(_) => "no_root",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::MaxSteps(_) => "max_steps",
            Error::DomainExit { .. } => "domain_exit",
            Error::NoReturn(_) => "no_return",
            Error::Resonance(_) => "resonance",
            Error::FrameDegenerate { .. } => "frame_degenerate",
            Error::NoSignChange(_) => "no_sign_change",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DegenerateOrbit(_) => "degenerate_orbit",
            Error::Quadrature { .. } => "quadrature",
            Error::Floquet(_) => "floquet",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Csv(_))
    }
}
