use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use super::config::Resolved;
use crate::error::Violation;
use crate::fluid::{solve_fluid, FluidSolution};
use crate::simulator::{convergence_experiment, simulate, ConvergenceTable, Empirical, ExperimentSettings};

/// Invariant tolerance when the arrival path is exact.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Invariant tolerance when the arrival path comes from quadrature.
pub const QUADRATURE_TOL: f64 = 1e-6;

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn fail_on(violations: Vec<Violation>, what: &str) -> anyhow::Result<()> {
    if let Some(v) = violations.first() {
        bail!(
            "{what}: invariant violated ({} violation(s)); first: {v}",
            violations.len()
        );
    }
    Ok(())
}

fn write_manifest(run: &Resolved, out: &Path) -> anyhow::Result<()> {
    let mut w = create(out, "manifest.toml")?;
    w.write_all(run.config.to_manifest()?.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Solves the fluid model and checks its invariants.
pub fn fluid_solution(run: &Resolved) -> anyhow::Result<FluidSolution> {
    let (alpha, exact) = run.alpha()?;
    let sol = solve_fluid(&alpha, &run.service, &run.rule, &run.tgrid, &run.xgrid).context("fluid solve")?;
    let tol = if exact { CLOSED_FORM_TOL } else { QUADRATURE_TOL };
    fail_on(sol.check_invariants(tol), "fluid solution")?;
    Ok(sol)
}

/// Writes `fluid.csv`, `alpha.csv` and `manifest.toml`.
pub fn cmd_fluid(run: &Resolved, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let sol = fluid_solution(run)?;
    fs::create_dir_all(out)?;
    let mut w = create(out, "fluid.csv")?;
    sol.write_csv(&mut w)?;
    w.flush()?;
    let (alpha, _) = run.alpha()?;
    let mut w = create(out, "alpha.csv")?;
    alpha.write_csv(&mut w, run.tgrid.points(), &run.xgrid)?;
    w.flush()?;
    write_manifest(run, out)?;
    Ok(["fluid.csv", "alpha.csv", "manifest.toml"]
        .iter()
        .map(|f| out.join(f))
        .collect())
}

/// One run at `n_scale`: `events.csv` and `empirical.csv` (masses and
/// `iota` divided by N).
pub fn cmd_simulate(run: &Resolved, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = run.sim_config()?;
    let log = simulate(&cfg, 0).context("simulation")?;
    fail_on(log.check_invariants(), "event log")?;
    let emp = Empirical::new(&log, &run.rule);
    fail_on(
        emp.check_conservation(run.tgrid.points(), &run.xgrid)?,
        "empirical processes",
    )?;
    fs::create_dir_all(out)?;
    let mut w = create(out, "events.csv")?;
    log.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out, "empirical.csv")?;
    emp.scale(cfg.n_scale as f64)
        .write_csv(&mut w, &run.tgrid, &run.xgrid)?;
    w.flush()?;
    write_manifest(run, out)?;
    Ok(["events.csv", "empirical.csv", "manifest.toml"]
        .iter()
        .map(|f| out.join(f))
        .collect())
}

/// Convergence experiment against the fluid solution; writes
/// `distances.csv`.
pub fn cmd_compare(run: &Resolved, out: &Path) -> anyhow::Result<(ConvergenceTable, Vec<PathBuf>)> {
    let Some(compare) = &run.config.compare else {
        bail!("compare: missing [compare] section with n_list");
    };
    // a trace has no fluid reference; fail before simulating anything
    run.alpha()?;
    let fluid = fluid_solution(run)?;
    let settings = ExperimentSettings {
        n_list: compare.n_list.clone(),
        replications: compare.replications,
        probe: run.tgrid.thinned(compare.probe_stride),
        beta_stride: compare.beta_stride,
    };
    let table = convergence_experiment(&run.sim_config()?, &settings, &fluid)?;
    fs::create_dir_all(out)?;
    let mut w = create(out, "distances.csv")?;
    table.write_csv(&mut w)?;
    w.flush()?;
    write_manifest(run, out)?;
    Ok((table, vec![out.join("distances.csv"), out.join("manifest.toml")]))
}
