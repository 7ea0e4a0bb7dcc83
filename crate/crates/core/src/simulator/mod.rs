//! Discrete-event simulation of the N-th pre-limit SJFA queue.

mod arrivals;
mod empirical;
mod experiment;
mod scheduler;

pub use arrivals::{generate_arrivals, SizeTable, CUTOFF_FACTOR, SIZE_CELLS, TAIL_FRACTION};
pub use empirical::{empirical_processes, Empirical, EmpiricalPaths};
pub use experiment::{convergence_experiment, ConvergenceTable, DistanceRow, ExperimentSettings, NSummary};
pub use scheduler::{run_sjfa, EventLog, ServerState};

use crate::aging::AgingRule;
use crate::error::{Error, Result};
use crate::fluid::{InstantaneousArrival, ServiceProfile};

/// One job of the pre-limit system.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub index: usize,
    pub tau: f64,
    pub size: f64,
    /// `S' = g(0)` for the trajectory through `(size, tau)`.
    pub prime_priority: f64,
    /// Admission to service.
    pub theta: Option<f64>,
    /// Service completion.
    pub completion: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum ArrivalSource {
    /// Poisson work arrivals driven by `pi`, scaled by N.
    Model(InstantaneousArrival),
    /// Explicit `(tau, size)` pairs.
    Trace(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_scale: u64,
    pub arrival: ArrivalSource,
    /// Unscaled rate `m`; the N-th system serves at `N m`.
    pub service: ServiceProfile,
    pub rule: AgingRule,
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scale == 0 {
            return Err(Error::InvalidSimulation("n_scale must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidSimulation(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.service.floor() > 0.0) {
            return Err(Error::InvalidSimulation(format!(
                "service rate floor must be positive, got {}",
                self.service.floor()
            )));
        }
        Ok(())
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self {
            n_scale: n,
            ..self.clone()
        }
    }
}

/// Generates arrivals for `replication` and runs the scheduler.
pub fn simulate(cfg: &SimConfig, replication: u64) -> Result<EventLog> {
    cfg.validate()?;
    let jobs = generate_arrivals(cfg, replication)?;
    run_sjfa(jobs, &cfg.service.scaled(cfg.n_scale as f64), cfg.horizon)
}
