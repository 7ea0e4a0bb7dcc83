use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("aging trajectory through (x={x}, t={t}) became non-finite at s={s}")]
    NonFiniteTrajectory { x: f64, t: f64, s: f64 },

    #[error("invalid aging rule: {0}")]
    InvalidRule(String),

    #[error("declared Lipschitz constant {declared} violated: |f(x1,t)-f(x2,t)|/|x1-x2| = {observed} at x1={x1}, x2={x2}, t={t}")]
    LipschitzViolated {
        declared: f64,
        observed: f64,
        x1: f64,
        x2: f64,
        t: f64,
    },

    #[error("time {t} lies outside the path horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("arrival data is not nondecreasing in t at level x'={level} between t={t_prev} and t={t}")]
    NotMonotone { level: f64, t_prev: f64, t: f64 },

    #[error("levels must be sorted ascending (index {index})")]
    LevelOrder { index: usize },

    #[error("fluid arrival data has an atom near x={x} at t={t} (jump {jump})")]
    AtomicFluidData { t: f64, x: f64, jump: f64 },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimated error {error})")]
    QuadratureFailure { a: f64, b: f64, error: f64 },

    #[error("{what} is outside its closed-form domain: {detail}")]
    DomainError { what: &'static str, detail: String },

    #[error("no branch of the {what} display matched (t={t}, x={x})")]
    BranchGap { what: &'static str, t: f64, x: f64 },

    #[error("invalid service profile: {0}")]
    InvalidService(String),

    #[error("invalid simulation input: {0}")]
    InvalidSimulation(String),
}

/// A model invariant that failed a run-time check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl Violation {
    pub fn new(invariant: &'static str, detail: impl Into<String>) -> Self {
        Self {
            invariant,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}
