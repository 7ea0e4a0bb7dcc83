//! Distances between scaled simulations and a fluid solution.

use std::io::{self, Write};

use rayon::prelude::*;

use super::empirical::Empirical;
use super::{simulate, SimConfig};
use crate::error::{Error, Result};
use crate::fluid::FluidSolution;
use crate::measures::{fmt17, levy_distance, AtomicMeasure, CdfSlice, TimeGrid};

#[derive(Debug, Clone)]
pub struct ExperimentSettings {
    pub n_list: Vec<u64>,
    pub replications: u64,
    /// Probe times; each must be a node of the fluid t-grid.
    pub probe: TimeGrid,
    /// `beta` is compared at every `beta_stride`-th probe time only; its
    /// slices hold every admitted job and dominate the cost.
    pub beta_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub n: u64,
    pub replication: u64,
    pub sup_levy_xi: f64,
    pub sup_levy_beta: f64,
    /// `sup_t |iota^N(t)/N - iota(t)|` over the probe times.
    pub iota_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NSummary {
    pub n: u64,
    pub mean_xi: f64,
    pub max_xi: f64,
    pub mean_beta: f64,
    pub max_iota_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<DistanceRow>,
}

impl ConvergenceTable {
    /// Mean and max per N, in the order N first appears.
    pub fn summary(&self) -> Vec<NSummary> {
        let mut ns: Vec<u64> = Vec::new();
        for r in &self.rows {
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
        ns.into_iter()
            .map(|n| {
                let rows: Vec<&DistanceRow> = self.rows.iter().filter(|r| r.n == n).collect();
                let k = rows.len() as f64;
                NSummary {
                    n,
                    mean_xi: rows.iter().map(|r| r.sup_levy_xi).sum::<f64>() / k,
                    max_xi: rows.iter().map(|r| r.sup_levy_xi).fold(0.0, f64::max),
                    mean_beta: rows.iter().map(|r| r.sup_levy_beta).sum::<f64>() / k,
                    max_iota_gap: rows.iter().map(|r| r.iota_gap).fold(0.0, f64::max),
                }
            })
            .collect()
    }

    /// `distances.csv`: `N,replication,sup_levy_xi,sup_levy_beta,iota_gap`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "N,replication,sup_levy_xi,sup_levy_beta,iota_gap")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                r.replication,
                fmt17(r.sup_levy_xi),
                fmt17(r.sup_levy_beta),
                fmt17(r.iota_gap)
            )?;
        }
        Ok(())
    }
}

/// The fluid slices only know `(-inf, x]` for `x` in the x-window, so the
/// empirical measure is read the same way: mass left of the window sits at
/// its left end and mass right of it is dropped.
fn windowed(m: &AtomicMeasure, lo: f64, hi: f64) -> Result<AtomicMeasure> {
    AtomicMeasure::new(
        m.atoms()
            .iter()
            .filter(|a| a.location <= hi)
            .map(|a| (a.location.max(lo), a.mass)),
    )
}

struct FluidProbe {
    t: f64,
    iota: f64,
    xi: CdfSlice,
    beta: Option<CdfSlice>,
}

/// Runs `replications` scaled simulations for every N and measures the
/// sup-over-probe Lévy distance of `xi^N/N` and `beta^N/N` to the fluid
/// solution on the x-window of its grid. Replication `r` uses RNG stream `r`
/// of `base.seed`. Every event log is checked against the policy invariants
/// first.
pub fn convergence_experiment(
    base: &SimConfig,
    settings: &ExperimentSettings,
    fluid: &FluidSolution,
) -> Result<ConvergenceTable> {
    let tgrid = fluid.tgrid();
    let (lo, hi) = (fluid.xgrid()[0], *fluid.xgrid().last().expect("nonempty x-grid"));
    let stride = settings.beta_stride.max(1);
    let probes = settings
        .probe
        .points()
        .iter()
        .enumerate()
        .map(|(p, &t)| {
            let k = tgrid.snap_left(t);
            if (tgrid.points()[k] - t).abs() > 1e-9 || t > tgrid.horizon() + 1e-12 {
                return Err(Error::InvalidGrid(format!(
                    "probe time {t} is not a node of the fluid grid"
                )));
            }
            let beta = if p % stride == 0 {
                Some(fluid.beta_lower_slice(k)?)
            } else {
                None
            };
            Ok(FluidProbe {
                t,
                iota: fluid.iota(k),
                xi: fluid.xi_slice(k)?,
                beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if settings.probe.horizon() > base.horizon + 1e-12 {
        return Err(Error::InvalidGrid("probe grid extends beyond the horizon".into()));
    }

    let runs: Vec<(u64, u64)> = settings
        .n_list
        .iter()
        .flat_map(|&n| (0..settings.replications).map(move |r| (n, r)))
        .collect();
    let rows = runs
        .par_iter()
        .map(|&(n, replication)| {
            let cfg = base.with_n(n);
            let log = simulate(&cfg, replication)?;
            if let Some(v) = log.check_invariants().into_iter().next() {
                return Err(Error::InvalidSimulation(format!(
                    "N={n}, replication {replication}: {v}"
                )));
            }
            let emp = Empirical::new(&log, &cfg.rule).scale(n as f64);
            let mut row = DistanceRow {
                n,
                replication,
                sup_levy_xi: 0.0,
                sup_levy_beta: 0.0,
                iota_gap: 0.0,
            };
            for probe in &probes {
                let xi = windowed(&emp.xi(probe.t)?, lo, hi)?;
                row.sup_levy_xi = row.sup_levy_xi.max(levy_distance(&xi, &probe.xi));
                if let Some(fb) = &probe.beta {
                    let beta = windowed(&emp.beta(probe.t)?, lo, hi)?;
                    row.sup_levy_beta = row.sup_levy_beta.max(levy_distance(&beta, fb));
                }
                row.iota_gap = row.iota_gap.max((emp.iota(probe.t) - probe.iota).abs());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { rows })
}
