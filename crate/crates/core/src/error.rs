use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (have {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("ion {ion} has {levels} levels; transition {transition} needs level {needed}")]
    MissingLevel {
        ion: usize,
        levels: usize,
        transition: &'static str,
        needed: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is in the {state} frame but the operation expects the {expected} frame")]
    FrameMismatch {
        state: &'static str,
        expected: &'static str,
    },

    #[error("resonance condition violated: dressed Rabi frequency {actual} but mode {mode} requires {required} (bare Rabi frequency {required_rabi})")]
    ResonanceViolated {
        mode: usize,
        actual: f64,
        required: f64,
        required_rabi: f64,
    },

    #[error("carrier resonance required (detuning must be 0, got {0})")]
    DetuningNotZero(f64),

    #[error("red-sideband drive requires detuning {required}, got {actual}")]
    NotRedSideband { required: f64, actual: f64 },

    #[error("modes {p} and {q} are degenerate")]
    DegenerateModes { p: usize, q: usize },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("Fock truncation n_max = {n_max} too small for mode {mode}: operator exponential defect {defect:e}")]
    TruncationTooSmall { mode: usize, n_max: usize, defect: f64 },

    #[error("amplitude {amplitude:e} in top Fock level of mode {mode} exceeds bound {bound:e}{}", at_time(*.time))]
    TruncationLeak {
        mode: usize,
        amplitude: f64,
        bound: f64,
        /// `None` when the bound covers all times.
        time: Option<f64>,
    },

    #[error("norm drifted to {norm} (tolerance {tol:e}) at t = {time}")]
    NormDrift { norm: f64, tol: f64, time: f64 },

    #[error("step-halving check failed: difference {diff:e} exceeds {tol:e}")]
    NotConverged { diff: f64, tol: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("fidelity window contains no samples")]
    EmptyWindow,

    #[error("invalid input state: {0}")]
    InvalidInput(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn at_time(t: Option<f64>) -> String {
    t.map_or(String::new(), |t| format!(" at t = {t}"))
}
