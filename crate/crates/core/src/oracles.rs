//! Closed-form fluid quantities for the uniform, triangular-wave and Pareto
//! workloads, plus the registry of named examples.

use crate::aging::AgingRule;
use crate::error::{Error, Result};
use crate::fluid::{alpha_path, InstantaneousArrival};
use crate::measures::{Direction, MeasurePath};

/// Which cumulative quantity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `alpha_t(-inf, x]`
    Alpha,
    /// `alpha'_t[0, x']`
    AlphaPrime,
    /// `beta'_t[0, x']`
    BetaPrime,
    /// `xi'_t[0, x']`
    XiPrime,
    /// `xi_t(-inf, x]`
    Xi,
}

/// A closed-form value together with the index of the display branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub value: f64,
    pub branch: usize,
}

fn branch(value: f64, branch: usize) -> Result<Branch> {
    Ok(Branch { value, branch })
}

/// Uniform workload on `[0,1]`, linear aging with `c = 1`, and for the
/// solution quantities `mu(t) = t/2` with `t > 1`.
pub fn uniform_linear(t: f64, x: f64, which: Quantity) -> Result<f64> {
    uniform_linear_branch(t, x, which).map(|b| b.value)
}

pub fn uniform_linear_branch(t: f64, x: f64, which: Quantity) -> Result<Branch> {
    if !(t >= 0.0) || x.is_nan() {
        return Err(Error::DomainError {
            what: "uniform_linear",
            detail: format!("needs t >= 0 and a number x, got t={t}, x={x}"),
        });
    }
    let solution = matches!(which, Quantity::BetaPrime | Quantity::XiPrime | Quantity::Xi);
    if solution && !(t > 1.0) {
        return Err(Error::DomainError {
            what: "uniform_linear",
            detail: format!("solution closed forms hold for t > 1 with mu(t) = t/2, got t={t}"),
        });
    }
    match which {
        Quantity::Alpha => {
            if x > 1.0 {
                branch(t, 0)
            } else if x > 0.0 {
                if x > 1.0 - t {
                    branch(t + x - x * x / 2.0 - 0.5, 1)
                } else {
                    branch(x * t + t * t / 2.0, 2)
                }
            } else if x > 1.0 - t {
                branch(x + t - 0.5, 3)
            } else if x <= -t {
                branch(0.0, 4)
            } else {
                branch((x + t) * (x + t) / 2.0, 5)
            }
        }
        Quantity::AlphaPrime => {
            if x > 1.0 + t {
                branch(t, 0)
            } else if x > t {
                if x > 1.0 {
                    branch(x - (x - t) * (x - t) / 2.0 - 0.5, 1)
                } else {
                    branch(x * t - t * t / 2.0, 2)
                }
            } else if x > 1.0 {
                branch(x - 0.5, 3)
            } else if x <= 0.0 {
                branch(0.0, 4)
            } else {
                branch(x * x / 2.0, 5)
            }
        }
        Quantity::BetaPrime => {
            if x > (1.0 + t) / 2.0 {
                branch(t / 2.0, 0)
            } else if x > 1.0 {
                branch(x - 0.5, 1)
            } else if x <= 0.0 {
                branch(0.0, 2)
            } else {
                branch(x * x / 2.0, 3)
            }
        }
        Quantity::XiPrime => {
            if x > 1.0 + t {
                branch(t / 2.0, 0)
            } else if x > t {
                branch(x - (x - t) * (x - t) / 2.0 - 0.5 - t / 2.0, 1)
            } else if x > (t + 1.0) / 2.0 {
                branch(x - (1.0 + t) / 2.0, 2)
            } else {
                branch(0.0, 3)
            }
        }
        Quantity::Xi => {
            if x > 1.0 {
                branch(t / 2.0, 0)
            } else if x > 0.0 {
                branch(x + t - x * x / 2.0 - 0.5 - t / 2.0, 1)
            } else if x > (1.0 - t) / 2.0 {
                branch(x + (t - 1.0) / 2.0, 2)
            } else {
                branch(0.0, 3)
            }
        }
    }
}

/// Number of branches per quantity in the uniform/linear displays.
pub fn uniform_linear_branch_count(which: Quantity) -> usize {
    match which {
        Quantity::Alpha | Quantity::AlphaPrime => 6,
        _ => 4,
    }
}

/// The periodic support bound `a(s)`: rises from 1/2 to 1 on `[0,1]`,
/// falls back on `[1,2]`, period 2.
pub fn triangle_wave(s: f64) -> f64 {
    let r = s.rem_euclid(2.0);
    if r <= 1.0 {
        0.5 + r / 2.0
    } else {
        1.0 - (r - 1.0) / 2.0
    }
}

/// `int_0^s a(r) dr`.
fn triangle_integral(s: f64) -> f64 {
    let f = s.floor();
    let r = s - f;
    if (f as i64) % 2 != 0 {
        0.75 * f + r - r * r / 4.0
    } else {
        0.75 * f + r / 2.0 + r * r / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    D1,
    D2,
}

/// The helper quantities of the triangular-wave display at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularHelpers {
    pub n: f64,
    pub a1: f64,
    pub s1: f64,
    pub a2: f64,
    pub s2: f64,
    pub region: Region,
}

impl TriangularHelpers {
    pub fn new(x: f64, t: f64) -> Self {
        let u = x + t;
        let n = 2.0 * (u / 2.0).floor();
        let a1 = (1.0 + u.floor()) / 2.0;
        let s1 = 2.0 * (u - a1);
        let a2 = 0.5 - (u / 2.0).floor();
        let s2 = 2.0 * (u - a2) / 3.0;
        let region = if u >= n && u < n + 0.5 {
            Region::D1
        } else {
            Region::D2
        };
        Self {
            n,
            a1,
            s1,
            a2,
            s2,
            region,
        }
    }

    /// `s1*` in `D1`, `s2*` in `D2`.
    pub fn s_star(&self) -> f64 {
        match self.region {
            Region::D1 => self.s1,
            Region::D2 => self.s2,
        }
    }
}

pub const TRIANGULAR_BRANCHES: usize = 9;

/// `alpha_t(-inf, x]` for the triangular-wave workload with linear aging.
pub fn triangular_alpha(t: f64, x: f64) -> Result<f64> {
    triangular_alpha_branch(t, x).map(|b| b.value)
}

/// Branches are numbered in display order: 0/1 `t <= s*` (odd/even floor),
/// 2/3 `s* < t <= x+t` (D1/D2), 4 and 5 `s* < 0`, 6/7 `s* < x+t < t`
/// (D1/D2), 8 `x+t < 0`.
pub fn triangular_alpha_branch(t: f64, x: f64) -> Result<Branch> {
    if !(t >= 0.0) || x.is_nan() {
        return Err(Error::DomainError {
            what: "triangular_alpha",
            detail: format!("needs t >= 0 and a number x, got t={t}, x={x}"),
        });
    }
    let even_floor = |s: f64| (s.floor() as i64) % 2 == 0;
    if x == f64::INFINITY {
        return branch(triangle_integral(t), if even_floor(t) { 1 } else { 0 });
    }
    let u = x + t;
    if u < 0.0 {
        return branch(0.0, 8);
    }
    let h = TriangularHelpers::new(x, t);
    let s = h.s_star();
    let d1 = h.region == Region::D1;
    if t <= s {
        return branch(triangle_integral(t), if even_floor(t) { 1 } else { 0 });
    }
    if s < 0.0 {
        return if t <= u {
            branch(x * t + t * t / 2.0, 4)
        } else {
            branch(u * u / 2.0, 5)
        };
    }
    if t <= u {
        let v = triangle_integral(s) + u * (t - s) - (t * t - s * s) / 2.0;
        return branch(v, if d1 { 2 } else { 3 });
    }
    if s < u {
        let v = triangle_integral(s) + u * (u - s) - (u * u - s * s) / 2.0;
        return branch(v, if d1 { 6 } else { 7 });
    }
    Err(Error::BranchGap {
        what: "triangular alpha",
        t,
        x,
    })
}

fn check_pareto(eta: f64, t: f64, x: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 1.0) {
        return Err(Error::DomainError {
            what: "pareto",
            detail: format!("eta must exceed 1 (finite mean), got {eta}"),
        });
    }
    if !(t >= 0.0) || x.is_nan() {
        return Err(Error::DomainError {
            what: "pareto",
            detail: format!("needs t >= 0 and a number x, got t={t}, x={x}"),
        });
    }
    Ok(())
}

/// Pareto(1, eta) workload, linear aging with `c = 1`.
pub fn pareto_linear(t: f64, x: f64, which: Quantity, eta: f64) -> Result<f64> {
    pareto_linear_branch(t, x, which, eta).map(|b| b.value)
}

pub fn pareto_linear_branch(t: f64, x: f64, which: Quantity, eta: f64) -> Result<Branch> {
    check_pareto(eta, t, x)?;
    let p = 1.0 - eta;
    let d = eta - 1.0;
    match which {
        Quantity::Alpha => {
            if x < 1.0 - t {
                branch(0.0, 0)
            } else if x <= 1.0 {
                branch(x + t - 1.0 + ((x + t).powf(p) - 1.0) / d, 1)
            } else {
                branch(t + ((x + t).powf(p) - x.powf(p)) / d, 2)
            }
        }
        Quantity::AlphaPrime => {
            if x < 1.0 {
                branch(0.0, 0)
            } else if x <= 1.0 + t {
                branch(x - 1.0 + (x.powf(p) - 1.0) / d, 1)
            } else {
                branch(t + (x.powf(p) - (x - t).powf(p)) / d, 2)
            }
        }
        _ => Err(Error::DomainError {
            what: "pareto_linear",
            detail: "only alpha and alpha' have closed forms".into(),
        }),
    }
}

/// Pareto(1, eta) workload, exponential aging with rate `lambda`.
pub fn pareto_exponential(t: f64, x: f64, which: Quantity, eta: f64, lambda: f64) -> Result<f64> {
    pareto_exponential_branch(t, x, which, eta, lambda).map(|b| b.value)
}

pub fn pareto_exponential_branch(t: f64, x: f64, which: Quantity, eta: f64, lambda: f64) -> Result<Branch> {
    check_pareto(eta, t, x)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::DomainError {
            what: "pareto_exponential",
            detail: format!("lambda must be positive, got {lambda}"),
        });
    }
    let le = lambda * eta;
    match which {
        Quantity::Alpha => {
            if x <= (-lambda * t).exp() {
                branch(0.0, 0)
            } else if x < 1.0 {
                let v = t + x.ln() / lambda - x.powf(-eta) / le * (x.powf(eta) - (-le * t).exp());
                branch(v, 1)
            } else {
                branch(t - x.powf(-eta) / le * (1.0 - (-le * t).exp()), 2)
            }
        }
        Quantity::AlphaPrime => {
            if x <= 1.0 {
                branch(0.0, 0)
            } else if x < (lambda * t).exp() {
                branch(x.ln() / lambda - (1.0 - x.powf(-eta)) / le, 1)
            } else {
                branch(t - x.powf(-eta) / le * ((le * t).exp() - 1.0), 2)
            }
        }
        _ => Err(Error::DomainError {
            what: "pareto_exponential",
            detail: "only alpha and alpha' have closed forms".into(),
        }),
    }
}

/// Registry keys accepted in run configurations.
pub const EXAMPLE_KEYS: [&str; 4] = [
    "uniform_linear",
    "triangular_linear",
    "pareto_linear",
    "pareto_exponential",
];

type ClosedForm = Box<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

/// A configured example: its workload, its aging rule and, when one exists,
/// its closed-form arrival path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedExample {
    UniformLinear { c: f64 },
    TriangularLinear { c: f64 },
    ParetoLinear { eta: f64, c: f64 },
    ParetoExponential { eta: f64, lambda: f64 },
}

impl NamedExample {
    /// Parameters not given default to `c = 1`, `eta = 1.2`, `lambda = 0.1`.
    pub fn from_key(key: &str, eta: Option<f64>, lambda: Option<f64>, c: Option<f64>) -> Result<Self> {
        let c = c.unwrap_or(1.0);
        let eta = eta.unwrap_or(1.2);
        let lambda = lambda.unwrap_or(0.1);
        let ex = match key {
            "uniform_linear" => Self::UniformLinear { c },
            "triangular_linear" => Self::TriangularLinear { c },
            "pareto_linear" => Self::ParetoLinear { eta, c },
            "pareto_exponential" => Self::ParetoExponential { eta, lambda },
            other => {
                return Err(Error::DomainError {
                    what: "example registry",
                    detail: format!("unknown example {other:?}; expected one of {EXAMPLE_KEYS:?}"),
                })
            }
        };
        ex.rule()?;
        ex.arrival()?;
        Ok(ex)
    }

    pub fn key(&self) -> &'static str {
        match self {
            Self::UniformLinear { .. } => EXAMPLE_KEYS[0],
            Self::TriangularLinear { .. } => EXAMPLE_KEYS[1],
            Self::ParetoLinear { .. } => EXAMPLE_KEYS[2],
            Self::ParetoExponential { .. } => EXAMPLE_KEYS[3],
        }
    }

    pub fn arrival(&self) -> Result<InstantaneousArrival> {
        match *self {
            Self::UniformLinear { .. } => Ok(InstantaneousArrival::uniform()),
            Self::TriangularLinear { .. } => Ok(InstantaneousArrival::triangular()),
            Self::ParetoLinear { eta, .. } | Self::ParetoExponential { eta, .. } => {
                InstantaneousArrival::pareto(eta)
            }
        }
    }

    pub fn rule(&self) -> Result<AgingRule> {
        match *self {
            Self::UniformLinear { c } | Self::TriangularLinear { c } | Self::ParetoLinear { c, .. } => {
                AgingRule::linear(c)
            }
            Self::ParetoExponential { lambda, .. } => AgingRule::exponential(lambda),
        }
    }

    /// Whether closed forms apply; linear examples have them only for `c = 1`.
    pub fn has_closed_form(&self) -> bool {
        match *self {
            Self::UniformLinear { c } | Self::TriangularLinear { c } | Self::ParetoLinear { c, .. } => {
                c == 1.0
            }
            Self::ParetoExponential { .. } => true,
        }
    }

    /// `alpha` on `[0, horizon]`: closed form when available, quadrature otherwise.
    pub fn alpha(&self, horizon: f64) -> Result<MeasurePath> {
        if !self.has_closed_form() {
            return Ok(alpha_path(&self.arrival()?, &self.rule()?, horizon));
        }
        let eval: ClosedForm = match *self {
            Self::UniformLinear { .. } => Box::new(|t, x| uniform_linear(t, x, Quantity::Alpha)),
            Self::TriangularLinear { .. } => Box::new(triangular_alpha),
            Self::ParetoLinear { eta, .. } => Box::new(move |t, x| pareto_linear(t, x, Quantity::Alpha, eta)),
            Self::ParetoExponential { eta, lambda } => {
                Box::new(move |t, x| pareto_exponential(t, x, Quantity::Alpha, eta, lambda))
            }
        };
        Ok(MeasurePath::analytic(horizon, move |t, x| {
            eval(t, x).unwrap_or(f64::NAN)
        }))
    }

    /// `alpha'` on `[0, horizon]`: the closed form where the example has one,
    /// else the transported `alpha`.
    pub fn alpha_prime(&self, horizon: f64) -> Result<MeasurePath> {
        let closed: Option<ClosedForm> = match *self {
            _ if !self.has_closed_form() => None,
            Self::UniformLinear { .. } => Some(Box::new(|t, x| uniform_linear(t, x, Quantity::AlphaPrime))),
            Self::TriangularLinear { .. } => None,
            Self::ParetoLinear { eta, .. } => Some(Box::new(move |t, x| {
                pareto_linear(t, x, Quantity::AlphaPrime, eta)
            })),
            Self::ParetoExponential { eta, lambda } => Some(Box::new(move |t, x| {
                pareto_exponential(t, x, Quantity::AlphaPrime, eta, lambda)
            })),
        };
        match closed {
            Some(eval) => Ok(MeasurePath::analytic(horizon, move |t, x| {
                eval(t, x).unwrap_or(f64::NAN)
            })),
            None => self.alpha(horizon)?.transport(&self.rule()?, Direction::Forward),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::alpha_from_pi;

    #[test]
    fn uniform_linear_display_points() {
        assert_eq!(uniform_linear(2.0, 0.5, Quantity::Alpha).unwrap(), 1.875);
        assert_eq!(uniform_linear(2.0, 2.0, Quantity::Alpha).unwrap(), 2.0);
        assert_eq!(uniform_linear(2.0, 2.0, Quantity::Xi).unwrap(), 1.0);
        assert_eq!(uniform_linear(2.0, -0.6, Quantity::Xi).unwrap(), 0.0);
        assert_eq!(uniform_linear(2.0, -0.25, Quantity::Xi).unwrap(), 0.25);
        assert_eq!(uniform_linear(2.0, 0.5, Quantity::AlphaPrime).unwrap(), 0.125);
        assert_eq!(uniform_linear(2.0, 1.25, Quantity::BetaPrime).unwrap(), 0.75);
        assert_eq!(uniform_linear(2.0, 1.25, Quantity::XiPrime).unwrap(), 0.0);
        assert!(matches!(
            uniform_linear(0.5, 0.0, Quantity::Xi),
            Err(Error::DomainError { .. })
        ));
    }

    /// Independent derivation: with `G(u) = int_0^u (1 ^ (v v 0)) dv`,
    /// `alpha = G(x+t) - G(x)` and `alpha' = G(x') - G(x'-t)`.
    fn g(u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else if u <= 1.0 {
            u * u / 2.0
        } else {
            u - 0.5
        }
    }

    #[test]
    fn uniform_linear_matches_derivation_and_covers_branches() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..60 {
            let t = 0.05 + i as f64 * 0.1;
            for j in 0..=120 {
                let x = -4.0 + j as f64 * 0.09;
                let a = uniform_linear_branch(t, x, Quantity::Alpha).unwrap();
                assert!((a.value - (g(x + t) - g(x))).abs() < 1e-12, "alpha t={t} x={x}");
                let ap = uniform_linear_branch(t, x + 2.0, Quantity::AlphaPrime).unwrap();
                assert!((ap.value - (g(x + 2.0) - g(x + 2.0 - t))).abs() < 1e-12);
                seen.insert((Quantity::Alpha, a.branch));
                seen.insert((Quantity::AlphaPrime, ap.branch));
                if t > 1.0 {
                    let mu = t / 2.0;
                    let xp = x + t;
                    for (q, arg, want) in [
                        (Quantity::Xi, x, (g(x + t) - g(x) - mu).max(0.0)),
                        (
                            Quantity::XiPrime,
                            x + 2.0,
                            (g(x + 2.0) - g(x + 2.0 - t) - mu).max(0.0),
                        ),
                        (Quantity::BetaPrime, xp, (g(xp) - g(xp - t)).min(mu)),
                    ] {
                        let b = uniform_linear_branch(t, arg, q).unwrap();
                        assert!((b.value - want).abs() < 1e-12, "{q:?} t={t} x={arg}");
                        seen.insert((q, b.branch));
                    }
                }
            }
        }
        for q in [
            Quantity::Alpha,
            Quantity::AlphaPrime,
            Quantity::BetaPrime,
            Quantity::XiPrime,
            Quantity::Xi,
        ] {
            for b in 0..uniform_linear_branch_count(q) {
                assert!(seen.contains(&(q, b)), "branch {b} of {q:?} never hit");
            }
        }
    }

    #[test]
    fn triangle_wave_shape() {
        assert_eq!(triangle_wave(0.0), 0.5);
        assert_eq!(triangle_wave(1.0), 1.0);
        assert_eq!(triangle_wave(2.0), 0.5);
        assert_eq!(triangle_wave(2.5), 0.75);
        assert!((triangle_integral(2.0) - 1.5).abs() < 1e-15);
        assert!((triangle_integral(1.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn triangular_alpha_matches_quadrature() {
        let rule = AgingRule::linear(1.0).unwrap();
        let arr = InstantaneousArrival::triangular();
        let v = triangular_alpha(1.3, 0.4).unwrap();
        let q = alpha_from_pi(&arr, &rule, 1.3, 0.4).unwrap();
        assert!((v - q).abs() < 1e-6);
        assert!((v - 0.885).abs() < 1e-9, "{v}");
        assert_eq!(triangular_alpha(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(triangular_alpha(1.0, -1.5).unwrap(), 0.0);
    }

    #[test]
    fn triangular_branches_all_reachable() {
        let mut seen = [false; TRIANGULAR_BRANCHES];
        for i in 0..=60 {
            let t = i as f64 * 0.1;
            for j in 0..=60 {
                let x = -3.0 + j as f64 * 0.1;
                seen[triangular_alpha_branch(t, x).unwrap().branch] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "{seen:?}");
    }

    #[test]
    fn pareto_values() {
        let v = pareto_linear(1.0, 2.0, Quantity::Alpha, 1.2).unwrap();
        assert!((v - 0.660_954_992_320_532_7).abs() < 1e-12, "{v}");
        assert_eq!(pareto_linear(1.0, -0.5, Quantity::Alpha, 1.2).unwrap(), 0.0);
        assert_eq!(pareto_linear(1.0, 1.0, Quantity::AlphaPrime, 1.2).unwrap(), 0.0);
        let v = pareto_exponential(1.0, 2.0, Quantity::Alpha, 1.2, 0.1).unwrap();
        assert!((v - 0.589_827_177_028_507_3).abs() < 1e-12, "{v}");
        assert_eq!(
            pareto_exponential(1.0, 0.9, Quantity::Alpha, 1.2, 0.1).unwrap(),
            0.0
        );
        assert_eq!(
            pareto_exponential(1.0, 1.0, Quantity::AlphaPrime, 1.2, 0.1).unwrap(),
            0.0
        );
        assert!(pareto_linear(1.0, 2.0, Quantity::Alpha, 1.0).is_err());
        assert!(pareto_exponential(1.0, 2.0, Quantity::Xi, 1.2, 0.1).is_err());
    }

    #[test]
    fn pareto_branches_are_continuous() {
        let eta = 1.2;
        let lambda = 0.1;
        for t in [0.5, 1.0, 3.0] {
            for (q, b) in [
                (Quantity::Alpha, 1.0 - t),
                (Quantity::Alpha, 1.0),
                (Quantity::AlphaPrime, 1.0),
                (Quantity::AlphaPrime, 1.0 + t),
            ] {
                let l = pareto_linear(t, b - 1e-12, q, eta).unwrap();
                let r = pareto_linear(t, b + 1e-12, q, eta).unwrap();
                assert!((l - r).abs() < 1e-9);
            }
            for (q, b) in [
                (Quantity::Alpha, (-lambda * t).exp()),
                (Quantity::Alpha, 1.0),
                (Quantity::AlphaPrime, 1.0),
                (Quantity::AlphaPrime, (lambda * t).exp()),
            ] {
                let l = pareto_exponential(t, b * (1.0 - 1e-13), q, eta, lambda).unwrap();
                let r = pareto_exponential(t, b * (1.0 + 1e-13), q, eta, lambda).unwrap();
                assert!((l - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn registry_round_trip() {
        for key in EXAMPLE_KEYS {
            let ex = NamedExample::from_key(key, None, None, None).unwrap();
            assert_eq!(ex.key(), key);
            assert!(ex.has_closed_form());
        }
        assert!(NamedExample::from_key("nope", None, None, None).is_err());
        assert!(NamedExample::from_key("pareto_linear", Some(0.9), None, None).is_err());
        let slow = NamedExample::from_key("uniform_linear", None, None, Some(2.0)).unwrap();
        assert!(!slow.has_closed_form());
        let a = slow.alpha(2.0).unwrap();
        // alpha = (G(x + 2t) - G(x)) / 2 for c = 2
        let want = (g(0.3 + 2.0) - g(0.3)) / 2.0;
        assert!((a.cumulative(1.0, 0.3).unwrap() - want).abs() < 1e-8);
    }
}
