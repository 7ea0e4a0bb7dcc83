//! The one-dimensional Skorokhod reflection map and its level-by-level
//! measure-valued extension on the prime plane.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fluid::ServiceProfile;
use crate::measures::{MeasurePath, TimeGrid};

/// Real values on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} grid nodes but {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("path values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the last node at or before `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.values[self.grid.snap_left(t)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Running-infimum reflection of a sampled sequence:
/// `gamma2[k] = -min_{j<=k} (psi[j] ^ 0)`, `gamma1 = psi + gamma2`.
pub fn reflect_values(psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gamma1 = Vec::with_capacity(psi.len());
    let mut gamma2 = Vec::with_capacity(psi.len());
    let mut running_min = 0.0f64;
    for &p in psi {
        running_min = running_min.min(p);
        let push = 0.0 - running_min;
        gamma2.push(push);
        gamma1.push(p + push);
    }
    (gamma1, gamma2)
}

/// `Gamma(psi) = (Gamma1(psi), Gamma2(psi))`.
pub fn reflect(psi: &SampledPath) -> (SampledPath, SampledPath) {
    let (g1, g2) = reflect_values(psi.values());
    (
        SampledPath {
            grid: psi.grid.clone(),
            values: g1,
        },
        SampledPath {
            grid: psi.grid.clone(),
            values: g2,
        },
    )
}

/// Solution of the measure-valued Skorokhod problem sampled on
/// `grid x levels`. All surfaces are row-major: time outer, level inner.
#[derive(Debug, Clone)]
pub struct MvspSolution {
    grid: TimeGrid,
    levels: Vec<f64>,
    alpha_prime: Vec<f64>,
    xi_prime: Vec<f64>,
    beta_prime_upper: Vec<f64>,
    mu: Vec<f64>,
    iota: SampledPath,
    total_arrived: Vec<f64>,
}

impl MvspSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn idx(&self, ti: usize, li: usize) -> usize {
        ti * self.levels.len() + li
    }

    /// `alpha'_t[0, x']`.
    pub fn alpha_prime(&self, ti: usize, li: usize) -> f64 {
        self.alpha_prime[self.idx(ti, li)]
    }

    /// `xi'_t[0, x']`.
    pub fn xi_prime(&self, ti: usize, li: usize) -> f64 {
        self.xi_prime[self.idx(ti, li)]
    }

    /// `beta'_t(x', inf)`.
    pub fn beta_prime_upper(&self, ti: usize, li: usize) -> f64 {
        self.beta_prime_upper[self.idx(ti, li)]
    }

    /// `beta'_t[0, x'] = alpha'_t[0, x'] - xi'_t[0, x']`.
    pub fn beta_prime_lower(&self, ti: usize, li: usize) -> f64 {
        self.alpha_prime(ti, li) - self.xi_prime(ti, li)
    }

    pub fn iota(&self) -> &SampledPath {
        &self.iota
    }

    pub fn mu(&self, ti: usize) -> f64 {
        self.mu[ti]
    }

    /// `alpha'_t[0, inf)` at the sentinel level.
    pub fn total_arrived(&self, ti: usize) -> f64 {
        self.total_arrived[ti]
    }

    /// `beta'_t[0, inf) = alpha'_t[0, inf) - xi'_t[0, inf)`.
    pub fn beta_prime_total(&self, ti: usize) -> f64 {
        let total = self.total_arrived[ti];
        let (xi_total, _) = reflect_one(&self.total_arrived, &self.mu, ti);
        total - xi_total
    }

    /// Linear interpolation of `xi'_t[0, x']` across levels at node `ti`.
    pub fn xi_prime_at(&self, ti: usize, x_prime: f64) -> f64 {
        let row = &self.xi_prime[ti * self.levels.len()..(ti + 1) * self.levels.len()];
        interpolate(&self.levels, row, x_prime)
    }

    /// Checks the problem's conditions on the grid: the service budget
    /// `beta'[0,inf) + iota = mu`, `xi' = alpha' - beta'`, nonnegativity,
    /// monotonicity, and complementarity. `budget_tol` bounds the equality
    /// residuals; `comp_tol` bounds `xi'` wherever `beta'(x', inf)` or `iota`
    /// increases.
    pub fn check(&self, budget_tol: f64, comp_tol: f64) -> Vec<crate::Violation> {
        use crate::Violation;
        let mut out = Vec::new();
        let nl = self.levels.len();
        let iota = self.iota.values();
        for ti in 0..self.grid.len() {
            let t = self.grid.points()[ti];
            let budget = self.beta_prime_total(ti) + iota[ti] - self.mu[ti];
            if budget.abs() > budget_tol {
                out.push(Violation::new(
                    "mvsp-budget",
                    format!("beta'[0,inf)+iota-mu = {budget:e} at t={t}"),
                ));
            }
            if ti > 0 && iota[ti] < iota[ti - 1] {
                out.push(Violation::new(
                    "iota-monotone",
                    format!("iota decreases at t={t}"),
                ));
            }
            for li in 0..nl {
                let xi = self.xi_prime(ti, li);
                let level = self.levels[li];
                let cons =
                    xi - (self.alpha_prime(ti, li) - self.mu[ti] + self.beta_prime_upper(ti, li) + iota[ti]);
                if cons.abs() > budget_tol {
                    out.push(Violation::new(
                        "mvsp-conservation",
                        format!("residual {cons:e} at t={t}, x'={level}"),
                    ));
                }
                if xi < -budget_tol {
                    out.push(Violation::new(
                        "xi-nonnegative",
                        format!("xi'={xi:e} at t={t}, x'={level}"),
                    ));
                }
                if ti > 0 {
                    let d_beta = self.beta_prime_upper(ti, li) - self.beta_prime_upper(ti - 1, li);
                    let d_iota = iota[ti] - iota[ti - 1];
                    if d_beta < -budget_tol {
                        out.push(Violation::new(
                            "beta-upper-monotone",
                            format!("beta'(x',inf) decreases by {d_beta:e} at t={t}, x'={level}"),
                        ));
                    }
                    if (d_beta > budget_tol || d_iota > budget_tol) && xi > comp_tol {
                        out.push(Violation::new(
                            "mvsp-complementarity",
                            format!("xi'={xi:e} while pushing at t={t}, x'={level}"),
                        ));
                    }
                }
                if li > 0 {
                    if xi < self.xi_prime(ti, li - 1) - budget_tol {
                        out.push(Violation::new(
                            "xi-level-monotone",
                            format!("xi' decreases in level at t={t}, x'={level}"),
                        ));
                    }
                    if self.beta_prime_lower(ti, li) < self.beta_prime_lower(ti, li - 1) - budget_tol {
                        out.push(Violation::new(
                            "beta-level-monotone",
                            format!("beta'[0,x'] decreases in level at t={t}, x'={level}"),
                        ));
                    }
                }
            }
        }
        out
    }
}

fn reflect_one(alpha: &[f64], mu: &[f64], upto: usize) -> (f64, f64) {
    let mut running_min = 0.0f64;
    let mut last = 0.0;
    for k in 0..=upto {
        last = alpha[k] - mu[k];
        running_min = running_min.min(last);
    }
    (last - running_min, -running_min)
}

pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.partition_point(|&p| p <= x);
    if n == 0 {
        return ys[0];
    }
    if n == xs.len() {
        return ys[n - 1];
    }
    let w = (x - xs[n - 1]) / (xs[n] - xs[n - 1]);
    ys[n - 1] + w * (ys[n] - ys[n - 1])
}

/// Measure-valued Skorokhod map on the prime plane.
///
/// Each level is reflected independently; idleness is read off the sentinel
/// level `x' = +inf` (the total mass), and `beta'(x', inf)` is obtained by
/// subtracting it.
pub fn mvsm(
    alpha_prime: &MeasurePath,
    mu: &ServiceProfile,
    levels: &[f64],
    grid: &TimeGrid,
) -> Result<MvspSolution> {
    if let Some(i) = levels.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::LevelOrder { index: i + 1 });
    }
    let times = grid.points();
    let mu_values: Vec<f64> = times.iter().map(|&t| mu.cumulative(t)).collect();

    let total_arrived = times
        .iter()
        .map(|&t| alpha_prime.total_mass(t))
        .collect::<Result<Vec<_>>>()?;
    let sentinel_psi: Vec<f64> = total_arrived.iter().zip(&mu_values).map(|(a, m)| a - m).collect();
    let (_, iota_values) = reflect_values(&sentinel_psi);

    // phase one: independent per-level reflections
    let columns = levels
        .par_iter()
        .map(|&level| {
            let mut alpha_col = Vec::with_capacity(times.len());
            for (k, &t) in times.iter().enumerate() {
                let a = alpha_prime.cumulative(t, level)?;
                if k > 0 && a < alpha_col[k - 1] - 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::NotMonotone {
                        level,
                        t_prev: times[k - 1],
                        t,
                    });
                }
                alpha_col.push(a);
            }
            let psi: Vec<f64> = alpha_col.iter().zip(&mu_values).map(|(a, m)| a - m).collect();
            let (g1, g2) = reflect_values(&psi);
            Ok((alpha_col, g1, g2))
        })
        .collect::<Result<Vec<_>>>()?;

    // phase two: subtract the sentinel idleness
    let nl = levels.len();
    let nt = times.len();
    let mut alpha_grid = vec![0.0; nt * nl];
    let mut xi_grid = vec![0.0; nt * nl];
    let mut beta_grid = vec![0.0; nt * nl];
    for (li, (alpha_col, g1, g2)) in columns.into_iter().enumerate() {
        for k in 0..nt {
            let idx = k * nl + li;
            alpha_grid[idx] = alpha_col[k];
            xi_grid[idx] = g1[k];
            beta_grid[idx] = (g2[k] - iota_values[k]).max(0.0);
        }
    }
    Ok(MvspSolution {
        grid: grid.clone(),
        levels: levels.to_vec(),
        alpha_prime: alpha_grid,
        xi_prime: xi_grid,
        beta_prime_upper: beta_grid,
        mu: mu_values,
        iota: SampledPath::new(grid.clone(), iota_values)?,
        total_arrived,
    })
}

/// Builds an [`MvspSolution`] from precomputed surfaces (used by the overload guess).
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    grid: &TimeGrid,
    levels: &[f64],
    alpha_prime: Vec<f64>,
    xi_prime: Vec<f64>,
    beta_prime_upper: Vec<f64>,
    mu: Vec<f64>,
    iota: Vec<f64>,
    total_arrived: Vec<f64>,
) -> Result<MvspSolution> {
    Ok(MvspSolution {
        grid: grid.clone(),
        levels: levels.to_vec(),
        alpha_prime,
        xi_prime,
        beta_prime_upper,
        mu,
        iota: SampledPath::new(grid.clone(), iota)?,
        total_arrived,
    })
}
