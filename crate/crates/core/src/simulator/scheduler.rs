//! The non-preemptive SJFA event loop and its event log.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::io::{self, Write};

use super::Job;
use crate::error::{Error, Result, Violation};
use crate::fluid::ServiceProfile;
use crate::measures::fmt17;

/// Relative slack for the floating-point accounting identities.
const ACCOUNTING_TOL: f64 = 1e-9;

/// Waiting-room key: prime priority, then arrival index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    priority: f64,
    index: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Server state right after the events at `time`; it holds until the next
/// recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerState {
    pub time: f64,
    pub busy: bool,
    /// `T(t)`, capacity spent on service.
    pub cumulative_effort: f64,
    /// `iota(t)`, capacity lost while idle.
    pub idle_loss: f64,
    /// `J(t)`, remaining work of the job in service.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EventLog {
    jobs: Vec<Job>,
    service: ServiceProfile,
    horizon: f64,
    states: Vec<ServerState>,
    admissions: Vec<usize>,
}

/// Runs SJFA on `jobs` (sorted by arrival time) with service rate `service`
/// until `horizon`. The waiting job with the smallest prime priority is
/// admitted whenever the server frees up; ties go to the earlier arrival.
/// Arrivals at the instant of a departure join the queue before the next
/// admission.
pub fn run_sjfa(mut jobs: Vec<Job>, service: &ServiceProfile, horizon: f64) -> Result<EventLog> {
    if !(service.floor() > 0.0) {
        return Err(Error::InvalidSimulation(
            "the scheduler needs a positive service rate floor".into(),
        ));
    }
    if jobs.windows(2).any(|w| w[1].tau < w[0].tau) {
        return Err(Error::InvalidSimulation(
            "jobs must be sorted by arrival time".into(),
        ));
    }
    if jobs.iter().enumerate().any(|(i, j)| j.index != i) {
        return Err(Error::InvalidSimulation(
            "job indices must follow arrival order".into(),
        ));
    }

    let mut waiting: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut next_arrival = 0;
    // (job, admission effort mark mu(theta), completion time)
    let mut in_service: Option<(usize, f64, f64)> = None;
    let mut now = 0.0;
    let mut mu_now = service.cumulative(0.0);
    let mut effort = 0.0;
    let mut idle = 0.0;
    let mut states = Vec::new();
    let mut admissions = Vec::new();

    let snapshot = |now: f64,
                    mu_now: f64,
                    effort: f64,
                    idle: f64,
                    in_service: Option<(usize, f64, f64)>,
                    jobs: &[Job]| {
        let residual = in_service
            .map(|(j, mark, _)| (jobs[j].size - (mu_now - mark)).max(0.0))
            .unwrap_or(0.0);
        ServerState {
            time: now,
            busy: in_service.is_some(),
            cumulative_effort: effort,
            idle_loss: idle,
            residual,
        }
    };

    loop {
        let ta = jobs.get(next_arrival).map(|j| j.tau).filter(|&t| t <= horizon);
        let td = in_service.map(|(_, _, end)| end).filter(|&t| t <= horizon);
        let t_next = match (ta, td) {
            (Some(a), Some(d)) => a.min(d),
            (Some(a), None) => a,
            (None, Some(d)) => d,
            (None, None) => break,
        };
        let mu_next = service.cumulative(t_next);
        if in_service.is_some() {
            effort += mu_next - mu_now;
        } else {
            idle += mu_next - mu_now;
        }
        now = t_next;
        mu_now = mu_next;

        while next_arrival < jobs.len() && jobs[next_arrival].tau <= now {
            waiting.push(Reverse(Key {
                priority: jobs[next_arrival].prime_priority,
                index: next_arrival,
            }));
            next_arrival += 1;
        }
        if let Some((j, _, end)) = in_service {
            if end <= now {
                jobs[j].completion = Some(end);
                in_service = None;
            }
        }
        if in_service.is_none() {
            if let Some(Reverse(key)) = waiting.pop() {
                let j = key.index;
                jobs[j].theta = Some(now);
                let end = service.time_to_serve(now, jobs[j].size)?;
                in_service = Some((j, mu_now, end));
                admissions.push(j);
            }
        }
        states.push(snapshot(now, mu_now, effort, idle, in_service, &jobs));
    }

    if now < horizon || states.is_empty() {
        let mu_h = service.cumulative(horizon);
        if in_service.is_some() {
            effort += mu_h - mu_now;
        } else {
            idle += mu_h - mu_now;
        }
        states.push(snapshot(horizon, mu_h, effort, idle, in_service, &jobs));
    }
    if states[0].time > 0.0 {
        states.insert(
            0,
            ServerState {
                time: 0.0,
                busy: false,
                cumulative_effort: 0.0,
                idle_loss: 0.0,
                residual: 0.0,
            },
        );
    }

    Ok(EventLog {
        jobs,
        service: service.clone(),
        horizon,
        states,
        admissions,
    })
}

impl EventLog {
    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn service(&self) -> &ServiceProfile {
        &self.service
    }

    pub fn states(&self) -> &[ServerState] {
        &self.states
    }

    /// Job indices in admission order.
    pub fn admissions(&self) -> &[usize] {
        &self.admissions
    }

    /// Job indices in order of service completion.
    pub fn departures(&self) -> Vec<usize> {
        self.admissions
            .iter()
            .copied()
            .filter(|&j| self.jobs[j].completion.is_some())
            .collect()
    }

    fn state_at(&self, t: f64) -> &ServerState {
        let k = self.states.partition_point(|s| s.time <= t);
        &self.states[k.saturating_sub(1)]
    }

    /// `iota(t)`.
    pub fn idle_loss_at(&self, t: f64) -> f64 {
        let s = self.state_at(t);
        if s.busy {
            s.idle_loss
        } else {
            s.idle_loss + self.service.cumulative(t) - self.service.cumulative(s.time)
        }
    }

    /// `T(t)`.
    pub fn effort_at(&self, t: f64) -> f64 {
        let s = self.state_at(t);
        if s.busy {
            s.cumulative_effort + self.service.cumulative(t) - self.service.cumulative(s.time)
        } else {
            s.cumulative_effort
        }
    }

    /// Event-log CSV: `i,tau,size,prime_priority,theta`; theta is empty for
    /// jobs never admitted before the horizon.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,tau,size,prime_priority,theta")?;
        for j in &self.jobs {
            let theta = j.theta.map(fmt17).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                j.index,
                fmt17(j.tau),
                fmt17(j.size),
                fmt17(j.prime_priority),
                theta
            )?;
        }
        Ok(())
    }

    /// Policy and accounting checks on the whole log.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        self.check_times(&mut out);
        self.check_policy(&mut out);
        self.check_accounting(&mut out);
        self.check_beta_prime(&mut out);
        out
    }

    fn check_times(&self, out: &mut Vec<Violation>) {
        for j in &self.jobs {
            if let Some(theta) = j.theta {
                if theta < j.tau {
                    out.push(Violation::new(
                        "job-times",
                        format!("job {} admitted at {theta} before arriving at {}", j.index, j.tau),
                    ));
                }
                if let Some(c) = j.completion {
                    if c < theta {
                        out.push(Violation::new(
                            "job-times",
                            format!("job {} completes before admission", j.index),
                        ));
                    }
                }
            } else if j.completion.is_some() {
                out.push(Violation::new(
                    "job-times",
                    format!("job {} completes without admission", j.index),
                ));
            }
        }
    }

    /// Priority: every admitted job is the smallest waiting key at its
    /// admission. Non-idling: each admission happens at
    /// `max(previous completion, earliest pending arrival)`, and no job is
    /// left waiting at the horizon behind an idle server.
    fn check_policy(&self, out: &mut Vec<Violation>) {
        let n = self.jobs.len();
        let mut waiting = BTreeSet::new();
        let mut admitted = vec![false; n];
        let mut next_arrival = 0;
        let mut earliest_pending = 0;
        let mut server_free = 0.0f64;
        for &j in &self.admissions {
            let job = &self.jobs[j];
            let Some(theta) = job.theta else {
                out.push(Violation::new(
                    "priority",
                    format!("job {j} in admission list without theta"),
                ));
                continue;
            };
            while earliest_pending < n && admitted[earliest_pending] {
                earliest_pending += 1;
            }
            if earliest_pending < n {
                let expected = server_free.max(self.jobs[earliest_pending].tau);
                if (theta - expected).abs() > 1e-12 * (1.0 + theta.abs()) {
                    out.push(Violation::new(
                        "non-idling",
                        format!("job {j} admitted at {theta}, server available with work at {expected}"),
                    ));
                }
            }
            while next_arrival < n && self.jobs[next_arrival].tau <= theta {
                waiting.insert(Key {
                    priority: self.jobs[next_arrival].prime_priority,
                    index: next_arrival,
                });
                next_arrival += 1;
            }
            let key = Key {
                priority: job.prime_priority,
                index: j,
            };
            match waiting.first() {
                Some(first) if *first == key => {}
                Some(first) => out.push(Violation::new(
                    "priority",
                    format!(
                        "job {j} (S'={}) admitted at {theta} while job {} (S'={}) waited",
                        job.prime_priority, first.index, first.priority
                    ),
                )),
                None => out.push(Violation::new(
                    "priority",
                    format!("job {j} admitted before arriving"),
                )),
            }
            waiting.remove(&key);
            admitted[j] = true;
            server_free = job.completion.unwrap_or(f64::INFINITY);
        }
        if server_free < self.horizon {
            if let Some(p) = (0..n).find(|&i| !admitted[i]) {
                if self.jobs[p].tau < self.horizon {
                    out.push(Violation::new(
                        "non-idling",
                        format!("job {p} never admitted although the server is free from {server_free}"),
                    ));
                }
            }
        }
    }

    /// `mu = T + iota` and `beta[0,inf) = T + J` at every recorded state;
    /// `iota` grows only while idle.
    fn check_accounting(&self, out: &mut Vec<Violation>) {
        let mut admitted_work = 0.0;
        let mut adm = self.admissions.iter().peekable();
        for (k, s) in self.states.iter().enumerate() {
            while let Some(&&j) = adm.peek() {
                match self.jobs[j].theta {
                    Some(theta) if theta <= s.time => {
                        admitted_work += self.jobs[j].size;
                        adm.next();
                    }
                    _ => break,
                }
            }
            let mu = self.service.cumulative(s.time);
            let scale = 1.0 + mu.abs() + admitted_work;
            if (mu - s.cumulative_effort - s.idle_loss).abs() > ACCOUNTING_TOL * scale {
                out.push(Violation::new(
                    "work-accounting",
                    format!(
                        "mu={mu} but T+iota={} at t={}",
                        s.cumulative_effort + s.idle_loss,
                        s.time
                    ),
                ));
            }
            if (admitted_work - s.cumulative_effort - s.residual).abs() > ACCOUNTING_TOL * scale {
                out.push(Violation::new(
                    "work-accounting",
                    format!(
                        "beta[0,inf)={admitted_work} but T+J={} at t={}",
                        s.cumulative_effort + s.residual,
                        s.time
                    ),
                ));
            }
            if k > 0 {
                let prev = &self.states[k - 1];
                if s.idle_loss < prev.idle_loss || (prev.busy && s.idle_loss != prev.idle_loss) {
                    out.push(Violation::new(
                        "idle-monotone",
                        format!(
                            "iota moves from {} to {} over a busy period ending {}",
                            prev.idle_loss, s.idle_loss, s.time
                        ),
                    ));
                }
            }
        }
    }

    /// `t -> beta'_t(x', inf)` is nondecreasing at a handful of levels,
    /// probed at every admission.
    fn check_beta_prime(&self, out: &mut Vec<Violation>) {
        let mut levels: Vec<f64> = self.jobs.iter().map(|j| j.prime_priority).collect();
        levels.sort_by(f64::total_cmp);
        if levels.is_empty() {
            return;
        }
        let probes: Vec<f64> = (0..=8).map(|q| levels[(levels.len() - 1) * q / 8]).collect();
        let mut upper = vec![0.0; probes.len()];
        for &j in &self.admissions {
            let job = &self.jobs[j];
            for (p, &level) in probes.iter().enumerate() {
                let before = upper[p];
                if job.prime_priority > level {
                    upper[p] += job.size;
                }
                if upper[p] < before {
                    out.push(Violation::new(
                        "beta-prime-monotone",
                        format!("beta'(x',inf) decreases at level {level}"),
                    ));
                }
            }
        }
    }
}
