//! Measure-valued processes read off an event log.
//!
//! Priorities are compared on the prime plane: `g_i(t) <= x` exactly when
//! `S'_i <= x'`, so each atom sits at `g_(S'_i, 0)(t)` and slices are built
//! from jobs pre-sorted by `S'`.

use std::io::{self, Write};

use super::scheduler::EventLog;
use super::Job;
use crate::aging::{AgingRule, PlanePoint};
use crate::error::{Result, Violation};
use crate::measures::{fmt17, AtomicMeasure, Cdf, MeasurePath, TimeGrid};
use crate::skorokhod::SampledPath;

/// Lazy view of `alpha^N`, `beta^N`, `xi^N` and `iota^N`, optionally
/// scaled by `1/N`.
#[derive(Debug, Clone)]
pub struct Empirical<'a> {
    log: &'a EventLog,
    rule: AgingRule,
    by_prime: Vec<usize>,
    factor: f64,
}

impl<'a> Empirical<'a> {
    pub fn new(log: &'a EventLog, rule: &AgingRule) -> Self {
        let jobs = log.jobs();
        let mut by_prime: Vec<usize> = (0..jobs.len()).collect();
        by_prime.sort_by(|&a, &b| {
            jobs[a]
                .prime_priority
                .total_cmp(&jobs[b].prime_priority)
                .then(a.cmp(&b))
        });
        Self {
            log,
            rule: rule.clone(),
            by_prime,
            factor: 1.0,
        }
    }

    /// Divides every mass and `iota` by `n`.
    pub fn scale(mut self, n: f64) -> Self {
        self.factor = 1.0 / n;
        self
    }

    fn slice(&self, t: f64, keep: impl Fn(&Job) -> bool) -> Result<AtomicMeasure> {
        let jobs = self.log.jobs();
        let mut atoms = Vec::new();
        let mut sorted = true;
        let mut last = f64::NEG_INFINITY;
        for &i in &self.by_prime {
            let job = &jobs[i];
            if !keep(job) {
                continue;
            }
            let x = self.rule.from_prime(PlanePoint::new(job.prime_priority, t))?.x;
            sorted &= x >= last;
            last = x;
            atoms.push((x, job.size * self.factor));
        }
        if sorted {
            Ok(AtomicMeasure::from_sorted_unchecked(atoms))
        } else {
            AtomicMeasure::new(atoms)
        }
    }

    /// Arrived work at current priority values.
    pub fn alpha(&self, t: f64) -> Result<AtomicMeasure> {
        self.slice(t, |j| j.tau <= t)
    }

    /// Work of jobs admitted by `t`.
    pub fn beta(&self, t: f64) -> Result<AtomicMeasure> {
        self.slice(t, |j| j.theta.is_some_and(|th| th <= t))
    }

    /// Work waiting for admission.
    pub fn xi(&self, t: f64) -> Result<AtomicMeasure> {
        self.slice(t, |j| j.tau <= t && j.theta.is_none_or(|th| th > t))
    }

    pub fn iota(&self, t: f64) -> f64 {
        self.log.idle_loss_at(t) * self.factor
    }

    /// `xi = alpha - beta` at every `(t, x)` probe.
    pub fn check_conservation(&self, times: &[f64], xs: &[f64]) -> Result<Vec<Violation>> {
        let mut out = Vec::new();
        for &t in times {
            let (a, b, q) = (self.alpha(t)?, self.beta(t)?, self.xi(t)?);
            for &x in xs.iter().chain([f64::INFINITY].iter()) {
                let (av, bv, qv) = (a.cdf(x), b.cdf(x), q.cdf(x));
                if (qv - (av - bv)).abs() > 1e-9 * (1.0 + av) {
                    out.push(Violation::new(
                        "conservation",
                        format!("xi={qv} but alpha-beta={} at t={t}, x={x}", av - bv),
                    ));
                }
            }
        }
        Ok(out)
    }
}

/// The sampled paths on a time grid.
#[derive(Debug, Clone)]
pub struct EmpiricalPaths {
    pub alpha: MeasurePath,
    pub beta: MeasurePath,
    pub xi: MeasurePath,
    pub iota: SampledPath,
}

/// Unscaled `alpha^N`, `beta^N`, `xi^N`, `iota^N` on `tgrid`.
pub fn empirical_processes(log: &EventLog, rule: &AgingRule, tgrid: &TimeGrid) -> Result<EmpiricalPaths> {
    Empirical::new(log, rule).paths(tgrid)
}

impl Empirical<'_> {
    pub fn paths(&self, tgrid: &TimeGrid) -> Result<EmpiricalPaths> {
        let times = tgrid.points();
        let collect = |f: &dyn Fn(f64) -> Result<AtomicMeasure>| -> Result<MeasurePath> {
            let ms = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
            MeasurePath::sampled(tgrid.clone(), ms)
        };
        Ok(EmpiricalPaths {
            alpha: collect(&|t| self.alpha(t))?,
            beta: collect(&|t| self.beta(t))?,
            xi: collect(&|t| self.xi(t))?,
            iota: SampledPath::new(tgrid.clone(), times.iter().map(|&t| self.iota(t)).collect())?,
        })
    }

    /// Rows `t,x,alpha,beta,xi,iota` on the grid, time outer.
    pub fn write_csv<W: Write>(&self, mut out: W, tgrid: &TimeGrid, xs: &[f64]) -> io::Result<()> {
        let invalid = |e: crate::Error| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
        writeln!(out, "t,x,alpha,beta,xi,iota")?;
        for &t in tgrid.points() {
            let a = self.alpha(t).map_err(invalid)?;
            let b = self.beta(t).map_err(invalid)?;
            let q = self.xi(t).map_err(invalid)?;
            let iota = self.iota(t);
            for &x in xs {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt17(t),
                    fmt17(x),
                    fmt17(a.cdf(x)),
                    fmt17(b.cdf(x)),
                    fmt17(q.cdf(x)),
                    fmt17(iota)
                )?;
            }
        }
        Ok(())
    }
}

impl EmpiricalPaths {
    /// Divides masses and `iota` by `n`.
    pub fn scale(&self, n: f64) -> Result<Self> {
        let f = 1.0 / n;
        let rescale = |p: &MeasurePath| -> Result<MeasurePath> {
            match p.kind() {
                crate::measures::PathKind::Sampled { grid, measures } => {
                    MeasurePath::sampled(grid.clone(), measures.iter().map(|m| m.scaled(f)).collect())
                }
                crate::measures::PathKind::Analytic(_) => unreachable!("empirical paths are sampled"),
            }
        };
        Ok(Self {
            alpha: rescale(&self.alpha)?,
            beta: rescale(&self.beta)?,
            xi: rescale(&self.xi)?,
            iota: self.iota.scaled(f),
        })
    }
}
