//! Poisson work arrivals for the N-th system.
//!
//! Work of size in `dy` arrives at rate `N pi_s(dy)`, so jobs of size `y`
//! arrive at rate `N pi_s(dy) / y`. Sizes below `delta = CUTOFF_FACTOR / N`
//! are lumped into jobs of size exactly `delta`. Every cell of the size table
//! carries exactly the work of `pi` in it, so `E[alpha^N] / N = alpha` up to
//! the tail truncation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::{ArrivalSource, Job, SimConfig};
use crate::aging::PlanePoint;
use crate::error::{Error, Result};
use crate::fluid::InstantaneousArrival;

pub const SIZE_CELLS: usize = 4096;
pub const CUTOFF_FACTOR: f64 = 1e-2;
/// Work beyond the largest table edge is at most this fraction of the rate.
pub const TAIL_FRACTION: f64 = 1e-9;
const RATE_PROBES: usize = 1024;
const DOMINATION_MARGIN: f64 = 1.1;

/// Job-rate table of `pi_s` at one instant. Cell 0 is the lump of small work.
#[derive(Debug, Clone)]
pub struct SizeTable {
    cumulative: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SizeTable {
    pub fn build(arr: &InstantaneousArrival, s: f64, n: f64) -> Result<Self> {
        let delta = CUTOFF_FACTOR / n;
        let total = arr.total_rate(s);
        if !(total.is_finite() && total >= 0.0) {
            return Err(Error::InvalidSimulation(format!(
                "arrival rate at s={s} is {total}"
            )));
        }
        let mut table = Self {
            cumulative: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        };
        if total == 0.0 {
            return Ok(table);
        }
        let lump = arr.pi(s, delta).max(0.0);
        table.push(n * lump / delta, delta, delta);

        let mut x_max = 2.0 * delta;
        while arr.pi(s, x_max) < (1.0 - TAIL_FRACTION) * total {
            x_max *= 2.0;
            if !x_max.is_finite() {
                return Err(Error::InvalidSimulation(format!(
                    "arrival distribution at s={s} never reaches its total rate"
                )));
            }
        }
        let log_span = (x_max / delta).ln();
        let edge = |k: usize| {
            if k == SIZE_CELLS {
                x_max
            } else {
                delta * (log_span * k as f64 / SIZE_CELLS as f64).exp()
            }
        };
        let mut a = delta;
        let mut pa = lump;
        for k in 1..=SIZE_CELLS {
            let b = edge(k);
            let pb = arr.pi(s, b);
            let work = (pb - pa).max(0.0);
            table.push(n * work * (b / a).ln() / (b - a), a, b);
            a = b;
            pa = pb;
        }
        Ok(table)
    }

    fn push(&mut self, rate: f64, lo: f64, hi: f64) {
        let acc = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(acc + rate);
        self.lo.push(lo);
        self.hi.push(hi);
    }

    /// Total job arrival rate.
    pub fn rate(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Draws a size: cell by inverse transform on the rates, then
    /// log-uniform within the cell.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u = rng.gen::<f64>() * self.rate();
        let k = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        let (a, b) = (self.lo[k], self.hi[k]);
        if a == b {
            return a;
        }
        let v: f64 = rng.gen();
        (a.ln() + v * (b / a).ln()).exp()
    }
}

fn rng_for(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Jobs on `[0, horizon]`, sorted by arrival time and indexed in that order.
/// Deterministic in `(seed, replication)`.
pub fn generate_arrivals(cfg: &SimConfig, replication: u64) -> Result<Vec<Job>> {
    cfg.validate()?;
    let raw = match &cfg.arrival {
        ArrivalSource::Trace(pairs) => {
            for &(tau, size) in pairs {
                if !(tau.is_finite() && tau >= 0.0 && size.is_finite() && size > 0.0) {
                    return Err(Error::InvalidSimulation(format!(
                        "trace entry (tau={tau}, size={size}) needs tau >= 0 and size > 0"
                    )));
                }
            }
            let mut pairs = pairs.clone();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.retain(|p| p.0 <= cfg.horizon);
            pairs
        }
        ArrivalSource::Model(arr) => poisson(arr, cfg, replication)?,
    };
    raw.into_iter()
        .enumerate()
        .map(|(index, (tau, size))| {
            Ok(Job {
                index,
                tau,
                size,
                prime_priority: cfg.rule.to_prime(PlanePoint::new(size, tau))?.x,
                theta: None,
                completion: None,
            })
        })
        .collect()
}

fn poisson(arr: &InstantaneousArrival, cfg: &SimConfig, replication: u64) -> Result<Vec<(f64, f64)>> {
    let n = cfg.n_scale as f64;
    let mut rng = rng_for(cfg.seed, replication);
    let mut out = Vec::new();
    if arr.is_time_invariant() {
        let table = SizeTable::build(arr, 0.0, n)?;
        if table.rate() == 0.0 {
            return Ok(out);
        }
        let gap = Exp::new(table.rate()).map_err(|e| Error::InvalidSimulation(e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += gap.sample(&mut rng);
            if t > cfg.horizon {
                break;
            }
            out.push((t, table.sample(&mut rng)));
        }
        return Ok(out);
    }

    // thinning against the largest probed rate plus a margin
    let mut bound = 0.0f64;
    for k in 0..=RATE_PROBES {
        let s = cfg.horizon * k as f64 / RATE_PROBES as f64;
        bound = bound.max(SizeTable::build(arr, s, n)?.rate());
    }
    if bound == 0.0 {
        return Ok(out);
    }
    bound *= DOMINATION_MARGIN;
    let gap = Exp::new(bound).map_err(|e| Error::InvalidSimulation(e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t > cfg.horizon {
            break;
        }
        let table = SizeTable::build(arr, t, n)?;
        if rng.gen::<f64>() * bound < table.rate() {
            out.push((t, table.sample(&mut rng)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aging::AgingRule;
    use crate::fluid::ServiceProfile;

    fn config(arrival: ArrivalSource, n: u64, horizon: f64) -> SimConfig {
        SimConfig {
            n_scale: n,
            arrival,
            service: ServiceProfile::constant(0.5).unwrap(),
            rule: AgingRule::linear(1.0).unwrap(),
            horizon,
            seed: 7,
        }
    }

    #[test]
    fn table_carries_the_work_of_pi() {
        let table = SizeTable::build(&InstantaneousArrival::uniform(), 0.0, 100.0).unwrap();
        // expected work rate = sum over cells of rate * mean log-uniform size
        let mut work = 0.0;
        for k in 0..table.lo.len() {
            let rate = table.cumulative[k] - if k == 0 { 0.0 } else { table.cumulative[k - 1] };
            let (a, b) = (table.lo[k], table.hi[k]);
            let mean = if a == b { a } else { (b - a) / (b / a).ln() };
            work += rate * mean;
        }
        assert!((work / 100.0 - 1.0).abs() < 1e-9, "{work}");
    }

    #[test]
    fn trace_passes_through() {
        let cfg = config(ArrivalSource::Trace(vec![(0.0, 1.0)]), 1, 2.0);
        let jobs = generate_arrivals(&cfg, 0).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(
            (jobs[0].tau, jobs[0].size, jobs[0].prime_priority),
            (0.0, 1.0, 1.0)
        );
        let bad = config(ArrivalSource::Trace(vec![(0.0, -1.0)]), 1, 2.0);
        assert!(generate_arrivals(&bad, 0).is_err());
    }

    #[test]
    fn generated_work_matches_fluid_total() {
        let cfg = config(ArrivalSource::Model(InstantaneousArrival::uniform()), 1000, 2.0);
        let jobs = generate_arrivals(&cfg, 0).unwrap();
        let work: f64 = jobs.iter().map(|j| j.size).sum::<f64>() / 1000.0;
        // variance of scaled work is T E[size-weighted y] / N = 2 * 0.5 / 1000
        let se = (2.0 * 0.5 / 1000.0f64).sqrt();
        assert!((work - 2.0).abs() < 3.0 * se, "{work}");
        assert!(jobs.windows(2).all(|w| w[0].tau <= w[1].tau));
        assert!(jobs.iter().all(|j| j.prime_priority == j.size + j.tau));
    }

    #[test]
    fn seeds_are_deterministic() {
        let cfg = config(ArrivalSource::Model(InstantaneousArrival::uniform()), 50, 1.0);
        assert_eq!(
            generate_arrivals(&cfg, 3).unwrap(),
            generate_arrivals(&cfg, 3).unwrap()
        );
        assert_ne!(
            generate_arrivals(&cfg, 3).unwrap(),
            generate_arrivals(&cfg, 4).unwrap()
        );
    }

    #[test]
    fn thinning_follows_the_wave() {
        let cfg = config(ArrivalSource::Model(InstantaneousArrival::triangular()), 20, 2.0);
        let jobs = generate_arrivals(&cfg, 0).unwrap();
        let work: f64 = jobs.iter().map(|j| j.size).sum::<f64>() / 20.0;
        // the work rate is a(s) and int_0^2 a = 1.5
        let se = (2.0 * 0.5 / 20.0f64).sqrt();
        assert!((work - 1.5).abs() < 4.0 * se, "{work}");
        // a size cell may straddle a(s); cells are about 0.3% wide
        assert!(jobs
            .iter()
            .all(|j| j.size <= 1.01 * crate::oracles::triangle_wave(j.tau)));
    }
}
