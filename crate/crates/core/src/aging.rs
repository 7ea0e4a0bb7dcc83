//! ODE-defined aging rules and the coordinate transform to the prime plane.
//!
//! A job entering at time `t` with size `x` carries the priority value
//! `g_(x,t)(s)`, the solution of `dg/ds = f(g, s)` through `(x, t)`. Because
//! `f` is Lipschitz in `g`, trajectories never cross, so every point of the
//! time–priority plane can be labelled by where its trajectory sits at time
//! zero. That label `x' = g_(x,t)(0)` is time invariant, which turns SJFA into
//! a static-priority discipline.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fixed RK4 step for rules without a closed-form trajectory.
pub const RK4_STEP: f64 = 1e-3;

type Rhs = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Trajectory = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgingKind {
    /// `f(g, s) = -c`.
    Linear {
        c: f64,
    },
    /// `f(g, s) = -lambda * g`.
    Exponential {
        lambda: f64,
    },
    Custom,
}

/// A point `(x, t)` on the time–priority plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub t: f64,
}

impl PlanePoint {
    pub fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }
}

/// Box of `(x, t)` values sampled when validating a declared Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBox {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone)]
pub struct AgingRule {
    kind: AgingKind,
    rhs: Rhs,
    lipschitz: f64,
    analytic: Option<Trajectory>,
}

impl fmt::Debug for AgingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgingRule")
            .field("kind", &self.kind)
            .field("lipschitz", &self.lipschitz)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl AgingRule {
    /// Linear aging. `c = 0` is accepted and reduces SJFA to plain SJF.
    pub fn linear(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidRule(format!("linear aging needs c >= 0, got {c}")));
        }
        Ok(Self {
            kind: AgingKind::Linear { c },
            rhs: Arc::new(move |_, _| -c),
            lipschitz: 0.0,
            analytic: Some(Arc::new(move |x, t, s| x - c * (s - t))),
        })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidRule(format!(
                "exponential aging needs lambda > 0, got {lambda}"
            )));
        }
        Ok(Self {
            kind: AgingKind::Exponential { lambda },
            rhs: Arc::new(move |g, _| -lambda * g),
            lipschitz: lambda,
            analytic: Some(Arc::new(move |x, t, s| x * (-lambda * (s - t)).exp())),
        })
    }

    /// A rule given only by its right-hand side; trajectories are integrated
    /// numerically. The Lipschitz constant is trusted until
    /// [`AgingRule::validate_lipschitz`] is called.
    pub fn custom<F>(rhs: F, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::InvalidRule(format!(
                "Lipschitz constant must be finite and >= 0, got {lipschitz}"
            )));
        }
        Ok(Self {
            kind: AgingKind::Custom,
            rhs: Arc::new(rhs),
            lipschitz,
            analytic: None,
        })
    }

    /// Builds a custom rule and rejects it if sampling finds the declared
    /// Lipschitz constant violated anywhere in `probe`.
    pub fn custom_validated<F>(rhs: F, lipschitz: f64, probe: ProbeBox, seed: u64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let rule = Self::custom(rhs, lipschitz)?;
        rule.validate_lipschitz(probe, 10_000, seed)?;
        Ok(rule)
    }

    /// Attaches a closed-form trajectory `(x, t, s) -> g_(x,t)(s)`.
    pub fn with_analytic_trajectory<F>(mut self, trajectory: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.analytic = Some(Arc::new(trajectory));
        self
    }

    pub fn kind(&self) -> AgingKind {
        self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn has_analytic_trajectory(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn rhs(&self, g: f64, s: f64) -> f64 {
        (self.rhs)(g, s)
    }

    /// Error budget for trajectory evaluations on `[0, horizon]`: round-off
    /// for closed forms, `O(h^4 e^{LT})` for RK4.
    pub fn tolerance(&self, horizon: f64) -> f64 {
        if self.analytic.is_some() {
            1e-12
        } else {
            (1e2 * RK4_STEP.powi(4) * (self.lipschitz * horizon).exp()).max(1e-10)
        }
    }

    /// Samples `samples` pairs in `probe` and fails if any difference quotient
    /// exceeds the declared constant by more than `1e-9`.
    pub fn validate_lipschitz(&self, probe: ProbeBox, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x1 = rng.gen_range(probe.x_min..=probe.x_max);
            let x2 = rng.gen_range(probe.x_min..=probe.x_max);
            let t = rng.gen_range(probe.t_min..=probe.t_max);
            if x1 == x2 {
                continue;
            }
            let diff = (self.rhs(x1, t) - self.rhs(x2, t)).abs();
            if diff > self.lipschitz * (x1 - x2).abs() + 1e-9 {
                return Err(Error::LipschitzViolated {
                    declared: self.lipschitz,
                    observed: diff / (x1 - x2).abs(),
                    x1,
                    x2,
                    t,
                });
            }
        }
        Ok(())
    }

    /// `g_(x,t)(s)`: the trajectory through `(x, t)` evaluated at `s`
    /// (forward or backward in time).
    pub fn trajectory(&self, x: f64, t: f64, s: f64) -> Result<f64> {
        if s == t || x.is_infinite() {
            return Ok(x);
        }
        let g = match &self.analytic {
            Some(traj) => traj(x, t, s),
            None => self.integrate(x, t, s),
        };
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::NonFiniteTrajectory { x, t, s })
        }
    }

    fn integrate(&self, x: f64, t: f64, s: f64) -> f64 {
        let steps = ((s - t).abs() / RK4_STEP).ceil().max(1.0) as usize;
        let h = (s - t) / steps as f64;
        let f = &self.rhs;
        let mut g = x;
        for k in 0..steps {
            let u = t + k as f64 * h;
            let k1 = f(g, u);
            let k2 = f(g + 0.5 * h * k1, u + 0.5 * h);
            let k3 = f(g + 0.5 * h * k2, u + 0.5 * h);
            let k4 = f(g + h * k3, u + h);
            g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !g.is_finite() {
                break;
            }
        }
        g
    }

    /// `(x, t) -> (g_(x,t)(0), t)`.
    pub fn to_prime(&self, p: PlanePoint) -> Result<PlanePoint> {
        Ok(PlanePoint::new(self.trajectory(p.x, p.t, 0.0)?, p.t))
    }

    /// `(x', t') -> (g_(x',0)(t'), t')`.
    pub fn from_prime(&self, p: PlanePoint) -> Result<PlanePoint> {
        Ok(PlanePoint::new(self.trajectory(p.x, 0.0, p.t)?, p.t))
    }

    /// Checks the Gronwall separation bound
    /// `|g_(x2,t)(s) - g_(x1,t)(s)| <= |x2 - x1| e^{L|s-t|}`.
    pub fn separation_bound(&self, x1: f64, x2: f64, t: f64, s: f64) -> bool {
        let (Ok(g1), Ok(g2)) = (self.trajectory(x1, t, s), self.trajectory(x2, t, s)) else {
            return false;
        };
        let bound = (x2 - x1).abs() * (self.lipschitz * (s - t).abs()).exp();
        (g2 - g1).abs() <= bound + self.tolerance((s - t).abs()) * (1.0 + x1.abs() + x2.abs())
    }
}
