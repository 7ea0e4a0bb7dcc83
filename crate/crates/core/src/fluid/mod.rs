//! Fluid arrival data, the fluid solution on the original plane and the
//! overload guess on the prime plane.

pub mod quadrature;
pub mod service;

use std::cell::Cell;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::aging::{AgingRule, PlanePoint};
use crate::error::{Error, Result, Violation};
use crate::measures::{fmt17, CdfSlice, Direction, Interpolation, MeasurePath, TimeGrid};
use crate::skorokhod::{self, MvspSolution};

pub use quadrature::adaptive_simpson;
pub use service::ServiceProfile;

/// Relative tolerance used when building `alpha` from `pi` by quadrature.
pub const ALPHA_REL_TOL: f64 = 1e-8;

/// Jumps larger than this inside a shrunken x-cell flag an atom.
pub const ATOM_JUMP: f64 = 1e-6;

type PiFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Instantaneous workload arrival distribution in cumulative form
/// `pi(s, x) = pi_s[0, x]`.
#[derive(Clone)]
pub struct InstantaneousArrival {
    pi: PiFn,
    time_invariant: bool,
    label: String,
}

impl fmt::Debug for InstantaneousArrival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InstantaneousArrival")
            .field("label", &self.label)
            .field("time_invariant", &self.time_invariant)
            .finish()
    }
}

impl InstantaneousArrival {
    pub fn custom<F>(label: impl Into<String>, time_invariant: bool, pi: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            pi: Arc::new(pi),
            time_invariant,
            label: label.into(),
        }
    }

    /// Unit-rate uniform workload on `[0, 1]`: `pi_s[0,x] = 1 ^ (x v 0)`.
    pub fn uniform() -> Self {
        Self::custom("uniform", true, |_, x| x.clamp(0.0, 1.0))
    }

    /// Uniform workload on `[0, a(s)]` with `a` the triangular wave.
    pub fn triangular() -> Self {
        Self::custom("triangular", false, |s, x| {
            crate::oracles::triangle_wave(s).min(x.max(0.0))
        })
    }

    /// Pareto workload with scale 1 and shape `eta`: `(1 - x^-eta) 1{x >= 1}`.
    pub fn pareto(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 1.0) {
            return Err(Error::DomainError {
                what: "pareto arrival",
                detail: format!("eta must exceed 1, got {eta}"),
            });
        }
        Ok(Self::custom(format!("pareto(eta={eta})"), true, move |_, x| {
            if x >= 1.0 {
                1.0 - x.powf(-eta)
            } else {
                0.0
            }
        }))
    }

    pub fn empty() -> Self {
        Self::custom("empty", true, |_, _| 0.0)
    }

    /// Time-invariant histogram: `rates[k]` units of work per unit time arrive
    /// with sizes spread uniformly over `[edges[k], edges[k+1])`.
    pub fn table(edges: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if edges.len() != rates.len() + 1 || rates.is_empty() {
            return Err(Error::InvalidMeasure(
                "arrival table needs one more edge than rates".into(),
            ));
        }
        if edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) || !edges.iter().all(|e| e.is_finite())
        {
            return Err(Error::InvalidMeasure(
                "arrival table edges must be finite, nonnegative and increasing".into(),
            ));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidMeasure("arrival table rates must be >= 0".into()));
        }
        let mut cumulative = vec![0.0];
        for r in &rates {
            cumulative.push(cumulative.last().unwrap() + r);
        }
        Ok(Self::custom("table", true, move |_, x| {
            let n = edges.partition_point(|&e| e <= x);
            if n == 0 {
                0.0
            } else if n == edges.len() {
                cumulative[n - 1]
            } else {
                let k = n - 1;
                let w = (x - edges[k]) / (edges[k + 1] - edges[k]);
                cumulative[k] + w * rates[k]
            }
        }))
    }

    pub fn pi(&self, s: f64, x: f64) -> f64 {
        (self.pi)(s, x)
    }

    /// Work arrival rate `pi_s[0, inf)`.
    pub fn total_rate(&self, s: f64) -> f64 {
        self.pi(s, f64::INFINITY)
    }

    pub fn is_time_invariant(&self) -> bool {
        self.time_invariant
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `alpha_t(-inf, x] = int_0^t pi_s[0, g_(x,t)(s)] ds` by adaptive Simpson.
pub fn alpha_from_pi(arr: &InstantaneousArrival, rule: &AgingRule, t: f64, x: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let failure: Cell<Option<Error>> = Cell::new(None);
    let value = adaptive_simpson(
        |s| match rule.trajectory(x, t, s) {
            Ok(g) => arr.pi(s, g),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        0.0,
        t,
        ALPHA_REL_TOL,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// The arrival path `alpha` built lazily from `pi` by quadrature.
pub fn alpha_path(arr: &InstantaneousArrival, rule: &AgingRule, horizon: f64) -> MeasurePath {
    let arr = arr.clone();
    let rule = rule.clone();
    MeasurePath::analytic(horizon, move |t, x| {
        alpha_from_pi(&arr, &rule, t, x).unwrap_or(f64::NAN)
    })
}

/// `Xi(t, x') = alpha_t(-inf, g_(x',0)(t)]`.
pub fn big_xi(alpha: &MeasurePath, rule: &AgingRule, t: f64, x_prime: f64) -> Result<f64> {
    alpha.cumulative(t, rule.trajectory(x_prime, 0.0, t)?)
}

/// Fluid solution sampled on `tgrid x xgrid` (row-major, time outer).
#[derive(Debug, Clone)]
pub struct FluidSolution {
    tgrid: TimeGrid,
    xgrid: Vec<f64>,
    x_prime: Vec<f64>,
    xi: Vec<f64>,
    beta_upper: Vec<f64>,
    big_xi: Vec<f64>,
    gamma2: Vec<f64>,
    iota: Vec<f64>,
    mu: Vec<f64>,
    total_arrived: Vec<f64>,
}

struct Column {
    x_prime: Vec<f64>,
    xi: Vec<f64>,
    big_xi: Vec<f64>,
    gamma2: Vec<f64>,
}

fn validate_xgrid(xgrid: &[f64]) -> Result<()> {
    if xgrid.is_empty() {
        return Err(Error::InvalidGrid("x grid is empty".into()));
    }
    if xgrid.iter().any(|x| !x.is_finite()) || xgrid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(
            "x grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn monotone_slack(v: f64) -> f64 {
    1e-7 * (1.0 + v.abs())
}

/// Looks for atoms in a few slices of `alpha`: a jump that does not shrink
/// when the probing cell shrinks from `h/4` to `h/16`.
fn probe_atoms(alpha: &MeasurePath, tgrid: &TimeGrid, xgrid: &[f64]) -> Result<()> {
    if xgrid.len() < 2 {
        return Ok(());
    }
    let h = xgrid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let pts = tgrid.points();
    let probes = [pts[pts.len() / 2], pts[pts.len() - 1]];
    for &t in &probes {
        for &x in xgrid {
            let jump =
                |r: f64| -> Result<f64> { Ok(alpha.cumulative(t, x + r)? - alpha.cumulative(t, x - r)?) };
            let j16 = jump(h / 32.0)?;
            if j16 > ATOM_JUMP && j16 > 0.5 * jump(h / 8.0)? {
                return Err(Error::AtomicFluidData { t, x, jump: j16 });
            }
        }
    }
    Ok(())
}

/// The fluid solution evaluated node by node: for every `(t, x)` the prime level
/// `x' = g_(x,t)(0)` is reflected along `s -> Xi(s, x') - mu(s)` on the
/// t-grid up to `t`.
pub fn solve_fluid(
    alpha: &MeasurePath,
    mu: &ServiceProfile,
    rule: &AgingRule,
    tgrid: &TimeGrid,
    xgrid: &[f64],
) -> Result<FluidSolution> {
    validate_xgrid(xgrid)?;
    probe_atoms(alpha, tgrid, xgrid)?;
    let times = tgrid.points();
    let nt = times.len();
    let (mu_values, total_arrived, iota) = sentinel(alpha, mu, tgrid)?;

    let columns = xgrid
        .par_iter()
        .map(|&x| {
            let mut col = Column {
                x_prime: Vec::with_capacity(nt),
                xi: Vec::with_capacity(nt),
                big_xi: Vec::with_capacity(nt),
                gamma2: Vec::with_capacity(nt),
            };
            for (k, &t) in times.iter().enumerate() {
                let xp = rule.to_prime(PlanePoint::new(x, t))?.x;
                let mut running_min = 0.0f64;
                let mut prev = f64::NEG_INFINITY;
                let mut last = 0.0;
                for j in 0..=k {
                    let v = big_xi(alpha, rule, times[j], xp)?;
                    if v < prev - monotone_slack(prev) {
                        return Err(Error::NotMonotone {
                            level: xp,
                            t_prev: times[j - 1],
                            t: times[j],
                        });
                    }
                    prev = v;
                    last = v;
                    running_min = running_min.min(v - mu_values[j]);
                }
                let g2 = 0.0 - running_min;
                col.x_prime.push(xp);
                col.big_xi.push(last);
                col.gamma2.push(g2);
                col.xi.push(last - mu_values[k] + g2);
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;

    let nx = xgrid.len();
    let mut sol = FluidSolution::zeroed(tgrid, xgrid, mu_values, total_arrived, iota);
    for (i, col) in columns.into_iter().enumerate() {
        for k in 0..nt {
            let idx = k * nx + i;
            sol.x_prime[idx] = col.x_prime[k];
            sol.xi[idx] = col.xi[k];
            sol.big_xi[idx] = col.big_xi[k];
            sol.gamma2[idx] = col.gamma2[k];
            sol.beta_upper[idx] = (col.gamma2[k] - sol.iota[k]).max(0.0);
        }
    }
    Ok(sol)
}

/// Total arrivals, `mu` and `iota` from the level at `x' = +inf`.
fn sentinel(
    alpha: &MeasurePath,
    mu: &ServiceProfile,
    tgrid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let times = tgrid.points();
    let mu_values: Vec<f64> = times.iter().map(|&t| mu.cumulative(t)).collect();
    let total = times
        .iter()
        .map(|&t| alpha.total_mass(t))
        .collect::<Result<Vec<_>>>()?;
    let psi: Vec<f64> = total.iter().zip(&mu_values).map(|(a, m)| a - m).collect();
    let (_, iota) = skorokhod::reflect_values(&psi);
    Ok((mu_values, total, iota))
}

/// The same fluid solution obtained by running the measure-valued map on the
/// prime plane at every node's level and reading it back.
pub fn solve_fluid_via_mvsm(
    alpha: &MeasurePath,
    mu: &ServiceProfile,
    rule: &AgingRule,
    tgrid: &TimeGrid,
    xgrid: &[f64],
) -> Result<FluidSolution> {
    validate_xgrid(xgrid)?;
    probe_atoms(alpha, tgrid, xgrid)?;
    let times = tgrid.points();
    let mut node_levels = Vec::with_capacity(times.len() * xgrid.len());
    for &t in times {
        for &x in xgrid {
            node_levels.push(rule.to_prime(PlanePoint::new(x, t))?.x);
        }
    }
    let mut levels = node_levels.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let alpha_prime = alpha.transport(rule, Direction::Forward)?;
    let prime = skorokhod::mvsm(&alpha_prime, mu, &levels, tgrid)?;
    let (mu_values, total_arrived, iota) = sentinel(alpha, mu, tgrid)?;

    let nx = xgrid.len();
    let mut sol = FluidSolution::zeroed(tgrid, xgrid, mu_values, total_arrived, iota);
    for k in 0..times.len() {
        for i in 0..nx {
            let idx = k * nx + i;
            let xp = node_levels[idx];
            let li = levels.partition_point(|&l| l < xp);
            sol.x_prime[idx] = xp;
            sol.xi[idx] = prime.xi_prime(k, li);
            sol.big_xi[idx] = prime.alpha_prime(k, li);
            sol.beta_upper[idx] = prime.beta_prime_upper(k, li);
            sol.gamma2[idx] = sol.xi[idx] - sol.big_xi[idx] + sol.mu[k];
        }
    }
    Ok(sol)
}

impl FluidSolution {
    fn zeroed(
        tgrid: &TimeGrid,
        xgrid: &[f64],
        mu: Vec<f64>,
        total_arrived: Vec<f64>,
        iota: Vec<f64>,
    ) -> Self {
        let n = tgrid.len() * xgrid.len();
        Self {
            tgrid: tgrid.clone(),
            xgrid: xgrid.to_vec(),
            x_prime: vec![0.0; n],
            xi: vec![0.0; n],
            beta_upper: vec![0.0; n],
            big_xi: vec![0.0; n],
            gamma2: vec![0.0; n],
            iota,
            mu,
            total_arrived,
        }
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn xgrid(&self) -> &[f64] {
        &self.xgrid
    }

    fn idx(&self, ti: usize, xi: usize) -> usize {
        ti * self.xgrid.len() + xi
    }

    /// `xi_t(-inf, x]`.
    pub fn xi(&self, ti: usize, xi: usize) -> f64 {
        self.xi[self.idx(ti, xi)]
    }

    /// `beta_t(x, inf)`.
    pub fn beta_upper(&self, ti: usize, xi: usize) -> f64 {
        self.beta_upper[self.idx(ti, xi)]
    }

    /// `beta_t(-inf, x] = beta_t(R) - beta_t(x, inf)` with `beta_t(R) = mu - iota`.
    pub fn beta_lower(&self, ti: usize, xi: usize) -> f64 {
        self.mu[ti] - self.iota[ti] - self.beta_upper(ti, xi)
    }

    pub fn big_xi(&self, ti: usize, xi: usize) -> f64 {
        self.big_xi[self.idx(ti, xi)]
    }

    pub fn x_prime(&self, ti: usize, xi: usize) -> f64 {
        self.x_prime[self.idx(ti, xi)]
    }

    pub fn iota(&self, ti: usize) -> f64 {
        self.iota[ti]
    }

    pub fn mu(&self, ti: usize) -> f64 {
        self.mu[ti]
    }

    pub fn total_arrived(&self, ti: usize) -> f64 {
        self.total_arrived[ti]
    }

    /// `xi_t(R) = alpha_t(R) - mu(t) + iota(t)`.
    pub fn xi_total(&self, ti: usize) -> f64 {
        self.total_arrived[ti] - self.mu[ti] + self.iota[ti]
    }

    /// Largest nodewise difference in `xi`, `beta_upper` and `iota`.
    pub fn max_abs_diff(&self, other: &FluidSolution) -> f64 {
        let a = self.xi.iter().zip(&other.xi);
        let b = self.beta_upper.iter().zip(&other.beta_upper);
        let c = self.iota.iter().zip(&other.iota);
        a.chain(b)
            .chain(c)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// `x -> xi_t(-inf, x]` at node `ti`, interpolated linearly.
    pub fn xi_slice(&self, ti: usize) -> Result<CdfSlice> {
        let row = self.xgrid.len();
        let values = self.xi[ti * row..(ti + 1) * row].to_vec();
        CdfSlice::new(self.xgrid.clone(), values, Interpolation::Linear)
    }

    /// `x -> beta_t(-inf, x]` at node `ti`, interpolated linearly.
    pub fn beta_lower_slice(&self, ti: usize) -> Result<CdfSlice> {
        let values = (0..self.xgrid.len()).map(|i| self.beta_lower(ti, i)).collect();
        CdfSlice::new(self.xgrid.clone(), values, Interpolation::Linear)
    }

    /// Rows `t,x,xi,beta_upper,iota`, time outer.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,xi,beta_upper,iota")?;
        for (k, &t) in self.tgrid.points().iter().enumerate() {
            for (i, &x) in self.xgrid.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt17(t),
                    fmt17(x),
                    fmt17(self.xi(k, i)),
                    fmt17(self.beta_upper(k, i)),
                    fmt17(self.iota[k])
                )?;
            }
        }
        Ok(())
    }

    /// Nodewise checks of the fluid equations; `tol` absorbs round-off and,
    /// for quadrature-built data, quadrature error.
    pub fn check_invariants(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let nx = self.xgrid.len();
        for (k, &t) in self.tgrid.points().iter().enumerate() {
            if self.iota[k] < -tol || (k > 0 && self.iota[k] < self.iota[k - 1] - tol) {
                out.push(Violation::new(
                    "iota-monotone",
                    format!("iota={} at t={t}", self.iota[k]),
                ));
            }
            let xi_total = self.xi_total(k);
            for i in 0..nx {
                let x = self.xgrid[i];
                let xi = self.xi(k, i);
                let residual = xi - (self.big_xi(k, i) - self.mu[k] + self.gamma2[self.idx(k, i)]);
                if residual.abs() > tol {
                    out.push(Violation::new(
                        "fluid-conservation",
                        format!("residual {residual:e} at t={t}, x={x}"),
                    ));
                }
                if xi < -tol || self.beta_upper(k, i) < -tol {
                    out.push(Violation::new(
                        "fluid-nonnegative",
                        format!(
                            "xi={xi:e}, beta_upper={:e} at t={t}, x={x}",
                            self.beta_upper(k, i)
                        ),
                    ));
                }
                if xi > xi_total + tol {
                    out.push(Violation::new(
                        "fluid-mass-budget",
                        format!("xi={xi} exceeds arrived-minus-served {xi_total} at t={t}, x={x}"),
                    ));
                }
                if i > 0 {
                    if xi < self.xi(k, i - 1) - tol {
                        out.push(Violation::new(
                            "xi-monotone-in-x",
                            format!("xi decreases at t={t}, x={x}"),
                        ));
                    }
                    if self.beta_upper(k, i) > self.beta_upper(k, i - 1) + tol {
                        out.push(Violation::new(
                            "beta-monotone-in-x",
                            format!("beta(-inf,x] decreases at t={t}, x={x}"),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// The overload guess `beta' = alpha' ^ mu`, `xi' = (alpha' - mu)^+`,
/// `iota = 0`, and whether it is valid: `(mu - alpha'[0,x'])^+` must be
/// nondecreasing in t at every level, and arrivals must cover `mu`.
pub fn guess_solution(
    alpha_prime: &MeasurePath,
    mu: &ServiceProfile,
    levels: &[f64],
    tgrid: &TimeGrid,
) -> Result<(MvspSolution, bool)> {
    if let Some(i) = levels.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::LevelOrder { index: i + 1 });
    }
    let times = tgrid.points();
    let nl = levels.len();
    let mu_values: Vec<f64> = times.iter().map(|&t| mu.cumulative(t)).collect();
    let total = times
        .iter()
        .map(|&t| alpha_prime.total_mass(t))
        .collect::<Result<Vec<_>>>()?;
    let mut alpha = vec![0.0; times.len() * nl];
    let mut xi = vec![0.0; times.len() * nl];
    let mut beta = vec![0.0; times.len() * nl];
    let mut valid = true;
    const SLACK: f64 = 1e-12;
    for (k, &t) in times.iter().enumerate() {
        if total[k] < mu_values[k] - SLACK {
            valid = false;
        }
        for (li, &level) in levels.iter().enumerate() {
            let a = alpha_prime.cumulative(t, level)?;
            let idx = k * nl + li;
            alpha[idx] = a;
            xi[idx] = (a - mu_values[k]).max(0.0);
            beta[idx] = (mu_values[k] - a).max(0.0);
            if k > 0 && beta[idx] < beta[idx - nl] - SLACK {
                valid = false;
            }
        }
    }
    let iota = vec![0.0; times.len()];
    let sol = skorokhod::assemble(tgrid, levels, alpha, xi, beta, mu_values, iota, total)?;
    Ok((sol, valid))
}

/// `x*(t) = inf{x : alpha'_t[0,x] >= mu(t)}` by bisection to `1e-9`.
/// With `mu(t) = 0` this is the left end of the support. Returns `+inf`
/// when the arrivals never reach `mu(t)`.
pub fn x_star(alpha_prime: &MeasurePath, mu: &ServiceProfile, t: f64) -> Result<f64> {
    const RESOLUTION: f64 = 1e-9;
    let target = mu.cumulative(t);
    let reached = |x: f64| -> Result<bool> {
        let a = alpha_prime.cumulative(t, x)?;
        Ok(if target > 0.0 { a >= target } else { a > 0.0 })
    };
    if !reached(f64::INFINITY)? {
        return Ok(f64::INFINITY);
    }
    let mut hi = 1.0f64;
    while !reached(hi)? {
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = hi - 1.0;
    let mut step = 1.0f64;
    while reached(lo)? {
        step *= 2.0;
        lo = hi - step;
        if !lo.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
    }
    while hi - lo > RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if reached(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
