//! Run configuration: a TOML file, resolved into model objects.
//!
//! ```toml
//! horizon = 5.0
//! seed = 1
//! n_scale = 100
//!
//! [arrival]
//! example = "pareto_exponential"   # or kind = "empty" | "table" | "trace"
//! eta = 1.2
//! lambda = 0.1
//!
//! [service]
//! rate = 0.5                       # or rate = { times = [...], rates = [...] }
//!
//! [grid]
//! t_steps = 250
//! x_min = -2.0
//! x_max = 2.0
//! x_points = 201
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use crate::aging::{AgingKind, AgingRule};
use crate::fluid::{alpha_path, InstantaneousArrival, ServiceProfile};
use crate::measures::{MeasurePath, TimeGrid};
use crate::oracles::NamedExample;
use crate::simulator::{ArrivalSource, SimConfig};

/// Identity of the random generator; recorded in every manifest.
pub const RNG_IDENTITY: &str = "ChaCha8Rng; seed_from_u64(seed), stream = replication";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub n_scale: u64,
    #[serde(default = "rng_identity")]
    pub rng: String,
    pub arrival: ArrivalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging: Option<AgingConfig>,
    pub service: ServiceConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

fn one() -> u64 {
    1
}

fn rng_identity() -> String {
    RNG_IDENTITY.to_string()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub rate: RateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateConfig {
    Constant(f64),
    Table { times: Vec<f64>, rates: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_t_steps")]
    pub t_steps: usize,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
}

fn default_t_steps() -> usize {
    250
}
fn default_x_min() -> f64 {
    -2.0
}
fn default_x_max() -> f64 {
    2.0
}
fn default_x_points() -> usize {
    201
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_steps: default_t_steps(),
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub n_list: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    /// Probe every `probe_stride`-th node of the t-grid.
    #[serde(default = "one_usize")]
    pub probe_stride: usize,
    #[serde(default = "default_beta_stride")]
    pub beta_stride: usize,
}

fn default_replications() -> u64 {
    20
}
fn one_usize() -> usize {
    1
}
fn default_beta_stride() -> usize {
    10
}

/// Where the arrivals come from after resolution.
#[derive(Debug, Clone)]
pub enum ResolvedArrival {
    Example(NamedExample),
    Model(InstantaneousArrival),
    Trace(Vec<(f64, f64)>),
}

/// A validated configuration with its model objects built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub arrival: ResolvedArrival,
    pub rule: AgingRule,
    pub service: ServiceProfile,
    pub tgrid: TimeGrid,
    pub xgrid: Vec<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid configuration: {e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading configuration {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_manifest(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Validates every key and builds the model. Relative trace paths are
    /// taken relative to `base_dir` and recorded as absolute paths, and the
    /// example's aging rule and parameters are written out explicitly, so the
    /// resolved config is a self-contained manifest.
    pub fn resolve(mut self, base_dir: &Path) -> anyhow::Result<Resolved> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            bail!("horizon: must be positive, got {}", self.horizon);
        }
        if self.n_scale == 0 {
            bail!("n_scale: must be at least 1");
        }
        if self.rng != RNG_IDENTITY {
            bail!("rng: only {RNG_IDENTITY:?} is supported, got {:?}", self.rng);
        }
        let g = &self.grid;
        if g.t_steps == 0 {
            bail!("grid.t_steps: must be at least 1");
        }
        if g.x_points < 2 || !(g.x_min < g.x_max) || !g.x_min.is_finite() || !g.x_max.is_finite() {
            bail!("grid: need x_points >= 2 and finite x_min < x_max");
        }
        let tgrid = TimeGrid::uniform(self.horizon, g.t_steps).context("grid.t_steps")?;
        let dx = (g.x_max - g.x_min) / (g.x_points - 1) as f64;
        let mut xgrid: Vec<f64> = (0..g.x_points).map(|i| g.x_min + i as f64 * dx).collect();
        xgrid[g.x_points - 1] = g.x_max;

        let service = match &self.service.rate {
            RateConfig::Constant(m) => ServiceProfile::constant(*m),
            RateConfig::Table { times, rates } => ServiceProfile::piecewise(times.clone(), rates.clone()),
        }
        .context("service.rate")?;

        if let Some(c) = &self.compare {
            if c.n_list.is_empty() || c.n_list.contains(&0) {
                bail!("compare.n_list: must be a nonempty list of positive integers");
            }
            if c.replications == 0 || c.probe_stride == 0 || c.beta_stride == 0 {
                bail!("compare: replications, probe_stride and beta_stride must be at least 1");
            }
        }

        let a = &mut self.arrival;
        let (arrival, default_rule) = match (a.example.as_deref(), a.kind.as_deref()) {
            (Some(_), Some(_)) => bail!("arrival: give either `example` or `kind`, not both"),
            (None, None) => bail!("arrival: missing `example` or `kind`"),
            (Some(key), None) => {
                let ex = NamedExample::from_key(key, a.eta, a.lambda, a.c)
                    .with_context(|| format!("arrival.example = {key:?}"))?;
                match ex {
                    NamedExample::UniformLinear { c } | NamedExample::TriangularLinear { c } => {
                        a.c = Some(c);
                        a.eta = None;
                        a.lambda = None;
                    }
                    NamedExample::ParetoLinear { eta, c } => {
                        a.c = Some(c);
                        a.eta = Some(eta);
                        a.lambda = None;
                    }
                    NamedExample::ParetoExponential { eta, lambda } => {
                        a.c = None;
                        a.eta = Some(eta);
                        a.lambda = Some(lambda);
                    }
                }
                (ResolvedArrival::Example(ex), Some(ex.rule()?))
            }
            (None, Some("empty")) => (ResolvedArrival::Model(InstantaneousArrival::empty()), None),
            (None, Some("table")) => {
                let (Some(edges), Some(rates)) = (a.edges.clone(), a.rates.clone()) else {
                    bail!("arrival: kind = \"table\" needs `edges` and `rates`");
                };
                let arr = InstantaneousArrival::table(edges, rates).context("arrival.edges/rates")?;
                (ResolvedArrival::Model(arr), None)
            }
            (None, Some("trace")) => {
                let Some(path) = a.path.clone() else {
                    bail!("arrival: kind = \"trace\" needs `path`");
                };
                let full = absolute(base_dir, &path);
                let pairs = read_trace(&full).with_context(|| format!("arrival.path = {path:?}"))?;
                a.path = Some(full.to_string_lossy().into_owned());
                (ResolvedArrival::Trace(pairs), None)
            }
            (None, Some(other)) => {
                bail!("arrival.kind: expected \"empty\", \"table\" or \"trace\", got {other:?}")
            }
        };

        let rule = match (&self.aging, default_rule) {
            (Some(cfg), _) => build_rule(cfg)?,
            (None, Some(rule)) => rule,
            (None, None) => bail!("aging: required unless arrival names an example"),
        };
        self.aging = Some(match rule.kind() {
            AgingKind::Linear { c } => AgingConfig {
                kind: "linear".into(),
                c: Some(c),
                lambda: None,
            },
            AgingKind::Exponential { lambda } => AgingConfig {
                kind: "exponential".into(),
                c: None,
                lambda: Some(lambda),
            },
            AgingKind::Custom => unreachable!("config files cannot name custom rules"),
        });

        Ok(Resolved {
            config: self,
            arrival,
            rule,
            service,
            tgrid,
            xgrid,
        })
    }
}

fn absolute(base: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    let joined = if p.is_absolute() { p } else { base.join(p) };
    joined.canonicalize().unwrap_or(joined)
}

fn build_rule(cfg: &AgingConfig) -> anyhow::Result<AgingRule> {
    match cfg.kind.as_str() {
        "linear" => {
            if cfg.lambda.is_some() {
                bail!("aging.lambda: not used by linear aging");
            }
            AgingRule::linear(cfg.c.unwrap_or(1.0)).context("aging.c")
        }
        "exponential" => {
            if cfg.c.is_some() {
                bail!("aging.c: not used by exponential aging");
            }
            let Some(lambda) = cfg.lambda else {
                bail!("aging.lambda: required for exponential aging");
            };
            AgingRule::exponential(lambda).context("aging.lambda")
        }
        other => bail!("aging.kind: expected \"linear\" or \"exponential\", got {other:?}"),
    }
}

/// Reads `i,tau,size[,prime_priority]` rows; a header line is skipped.
pub fn read_trace(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('i')) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 3 || cols.len() > 4 {
            bail!("line {}: expected i,tau,size[,prime_priority]", lineno + 1);
        }
        let num = |s: &str| -> anyhow::Result<f64> {
            s.parse::<f64>()
                .map_err(|e| anyhow!("line {}: {s:?}: {e}", lineno + 1))
        };
        out.push((num(cols[1])?, num(cols[2])?));
    }
    Ok(out)
}

impl Resolved {
    /// The fluid arrival path, if the arrivals have one.
    pub fn alpha(&self) -> anyhow::Result<(MeasurePath, bool)> {
        let h = self.config.horizon;
        match &self.arrival {
            ResolvedArrival::Example(ex) => {
                if ex.rule()?.kind() == self.rule.kind() && ex.has_closed_form() {
                    Ok((ex.alpha(h)?, true))
                } else {
                    Ok((alpha_path(&ex.arrival()?, &self.rule, h), false))
                }
            }
            ResolvedArrival::Model(arr) if arr.label() == "empty" => Ok((MeasurePath::empty(h), true)),
            ResolvedArrival::Model(arr) => Ok((alpha_path(arr, &self.rule, h), false)),
            ResolvedArrival::Trace(_) => {
                bail!("arrival: a trace has no fluid reference; use an example, table or empty arrival")
            }
        }
    }

    pub fn sim_config(&self) -> anyhow::Result<SimConfig> {
        let arrival = match &self.arrival {
            ResolvedArrival::Example(ex) => ArrivalSource::Model(ex.arrival()?),
            ResolvedArrival::Model(arr) => ArrivalSource::Model(arr.clone()),
            ResolvedArrival::Trace(pairs) => ArrivalSource::Trace(pairs.clone()),
        };
        Ok(SimConfig {
            n_scale: self.config.n_scale,
            arrival,
            service: self.service.clone(),
            rule: self.rule.clone(),
            horizon: self.config.horizon,
            seed: self.config.seed,
        })
    }
}
