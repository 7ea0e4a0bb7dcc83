//! Service capacity `m(s)` and its cumulative `mu(t)`.

use std::fmt;
use std::sync::Arc;

use super::quadrature::adaptive_simpson;
use crate::error::{Error, Result};

type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Rate {
    Constant(f64),
    /// `rates[k]` applies on `[times[k], times[k+1])`; the last rate extends to infinity.
    Piecewise {
        times: Vec<f64>,
        rates: Vec<f64>,
        /// `mu(times[k])`
        cumulative: Vec<f64>,
    },
    Custom(RateFn),
}

/// Rate function with floor `m0` and cumulative `mu(t) = int_0^t m(s) ds`.
#[derive(Clone)]
pub struct ServiceProfile {
    rate: Rate,
    floor: f64,
}

impl fmt::Debug for ServiceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rate {
            Rate::Constant(m) => write!(f, "ServiceProfile::Constant({m})"),
            Rate::Piecewise { times, rates, .. } => f
                .debug_struct("ServiceProfile::Piecewise")
                .field("times", times)
                .field("rates", rates)
                .finish(),
            Rate::Custom(_) => write!(f, "ServiceProfile::Custom(floor={})", self.floor),
        }
    }
}

impl ServiceProfile {
    /// Constant rate. Zero is allowed here (no capacity); simulations reject it.
    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidService(format!(
                "constant rate must be finite and >= 0, got {rate}"
            )));
        }
        Ok(Self {
            rate: Rate::Constant(rate),
            floor: rate,
        })
    }

    /// Piecewise-constant rate table; `times` must start at 0 and increase.
    pub fn piecewise(times: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != rates.len() {
            return Err(Error::InvalidService(
                "rate table needs equally many times and rates".into(),
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidService(
                "rate table times must start at 0 and strictly increase".into(),
            ));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidService("rates must be finite and >= 0".into()));
        }
        let mut cumulative = vec![0.0; times.len()];
        for k in 1..times.len() {
            cumulative[k] = cumulative[k - 1] + rates[k - 1] * (times[k] - times[k - 1]);
        }
        let floor = rates.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            rate: Rate::Piecewise {
                times,
                rates,
                cumulative,
            },
            floor,
        })
    }

    /// Arbitrary rate function with a declared floor; `mu` is integrated numerically.
    pub fn custom<F>(rate: F, floor: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::InvalidService(format!("floor must be > 0, got {floor}")));
        }
        Ok(Self {
            rate: Rate::Custom(Arc::new(rate)),
            floor,
        })
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn rate(&self, s: f64) -> f64 {
        match &self.rate {
            Rate::Constant(m) => *m,
            Rate::Piecewise { times, rates, .. } => {
                rates[times.partition_point(|&u| u <= s).saturating_sub(1)]
            }
            Rate::Custom(f) => f(s),
        }
    }

    /// Upper bound on the rate over `[0, horizon]` (sampled for custom rates).
    pub fn max_rate(&self, horizon: f64) -> f64 {
        match &self.rate {
            Rate::Constant(m) => *m,
            Rate::Piecewise { times, rates, .. } => times
                .iter()
                .zip(rates)
                .filter(|(t, _)| **t <= horizon)
                .map(|(_, r)| *r)
                .fold(0.0, f64::max),
            Rate::Custom(f) => (0..=1024)
                .map(|k| f(horizon * k as f64 / 1024.0))
                .fold(0.0, f64::max),
        }
    }

    /// `mu(t)`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.rate {
            Rate::Constant(m) => m * t,
            Rate::Piecewise {
                times,
                rates,
                cumulative,
            } => {
                let k = times.partition_point(|&u| u <= t) - 1;
                cumulative[k] + rates[k] * (t - times[k])
            }
            Rate::Custom(f) => adaptive_simpson(|s| f(s), 0.0, t, 1e-12).unwrap_or_else(|_| {
                // fall back to a fine composite rule
                let n = 1 << 16;
                let h = t / n as f64;
                (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
            }),
        }
    }

    /// Earliest `end >= start` with `mu(end) - mu(start) = work`.
    pub fn time_to_serve(&self, start: f64, work: f64) -> Result<f64> {
        if work <= 0.0 {
            return Ok(start);
        }
        match &self.rate {
            Rate::Constant(m) => {
                if *m <= 0.0 {
                    return Err(Error::InvalidService("zero service rate".into()));
                }
                Ok(start + work / m)
            }
            Rate::Piecewise {
                times,
                rates,
                cumulative,
            } => {
                let target = self.cumulative(start) + work;
                let k0 = times.partition_point(|&u| u <= start) - 1;
                for k in k0..times.len() {
                    let end_mu = if k + 1 < times.len() {
                        cumulative[k + 1]
                    } else {
                        f64::INFINITY
                    };
                    if target <= end_mu {
                        if rates[k] <= 0.0 {
                            continue;
                        }
                        return Ok(times[k] + (target - cumulative[k]) / rates[k]);
                    }
                }
                Err(Error::InvalidService(
                    "work cannot be completed: trailing rate is zero".into(),
                ))
            }
            Rate::Custom(_) => {
                let base = self.cumulative(start);
                let target = base + work;
                let mut lo = start;
                let mut hi = start + work / self.floor;
                while self.cumulative(hi) < target {
                    hi += work / self.floor;
                }
                while hi - lo > 1e-12 * (1.0 + hi.abs()) {
                    let mid = 0.5 * (lo + hi);
                    if self.cumulative(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(hi)
            }
        }
    }

    /// Capacity of the `n`-th system: rate multiplied by `n`.
    pub fn scaled(&self, n: f64) -> Self {
        let rate = match &self.rate {
            Rate::Constant(m) => Rate::Constant(m * n),
            Rate::Piecewise {
                times,
                rates,
                cumulative,
            } => Rate::Piecewise {
                times: times.clone(),
                rates: rates.iter().map(|r| r * n).collect(),
                cumulative: cumulative.iter().map(|c| c * n).collect(),
            },
            Rate::Custom(f) => {
                let f = Arc::clone(f);
                Rate::Custom(Arc::new(move |s| n * f(s)))
            }
        };
        Self {
            rate,
            floor: self.floor * n,
        }
    }
}
