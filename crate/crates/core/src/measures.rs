//! Time-indexed families of finite measures on the real line.
//!
//! Pre-limit processes are sums of atoms and are stored as [`AtomicMeasure`]
//! slices on a [`TimeGrid`]; fluid processes are closed-form or numerically
//! integrated cumulative functions evaluated lazily. Both are reached through
//! [`MeasurePath::cumulative`], which returns `nu_t(-inf, x]`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::aging::{AgingRule, PlanePoint};
use crate::error::{Error, Result};

/// Snap tolerance used when locating a time on a grid.
const GRID_EPS: f64 = 1e-12;

/// Strictly increasing time nodes starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("time grid is empty".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "time grid must start at 0, starts at {}",
                points[0]
            )));
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "time grid not strictly increasing at index {}",
                i + 1
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("time grid has non-finite nodes".into()));
        }
        Ok(Self { points })
    }

    /// `steps + 1` equally spaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs horizon > 0 and steps >= 1 (got {horizon}, {steps})"
            )));
        }
        let dt = horizon / steps as f64;
        let mut points: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        points[steps] = horizon;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("grid is non-empty")
    }

    /// Largest step between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the last node at or before `t` (càdlàg snapping).
    pub fn snap_left(&self, t: f64) -> usize {
        let idx = self.points.partition_point(|&p| p <= t + GRID_EPS);
        idx.saturating_sub(1)
    }

    /// Every `stride`-th node, always keeping the last one.
    pub fn thinned(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut points: Vec<f64> = self.points.iter().copied().step_by(stride).collect();
        if points.last() != self.points.last() {
            points.push(self.horizon());
        }
        Self { points }
    }
}

/// Anything that can be read as a right-continuous cumulative function.
///
/// `knots` lists every location where the function may jump or change slope;
/// between consecutive knots it is constant or affine. This is what makes the
/// Lévy check exact on finitely many points.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
    /// Left limit `F(x-)`.
    fn cdf_left(&self, x: f64) -> f64;
    fn knots(&self) -> Vec<f64>;
    fn total_mass(&self) -> f64;
    /// Smallest and largest knot, if any.
    fn support_hull(&self) -> Option<(f64, f64)> {
        let k = self.knots();
        Some((*k.first()?, *k.last()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A finite sum of point masses with strictly increasing locations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    prefix: Vec<f64>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(location: f64, mass: f64) -> Result<Self> {
        Self::new([(location, mass)])
    }

    /// Sorts, merges coincident locations and drops zero masses.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = atoms.into_iter().collect();
        for &(loc, mass) in &raw {
            if !loc.is_finite() || !mass.is_finite() || mass < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom (location {loc}, mass {mass}) must be finite with nonnegative mass"
                )));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::from_sorted_unchecked(raw))
    }

    /// Builds from atoms already sorted by location (ties allowed).
    pub(crate) fn from_sorted_unchecked(raw: Vec<(f64, f64)>) -> Self {
        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for (location, mass) in raw {
            if mass == 0.0 {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if last.location == location => last.mass += mass,
                _ => atoms.push(Atom { location, mass }),
            }
        }
        let mut prefix = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.mass;
            prefix.push(acc);
        }
        Self { atoms, prefix }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_sorted_unchecked(self.atoms.iter().map(|a| (a.location, a.mass * factor)).collect())
    }

    /// Moves every atom through `map`; masses are unchanged.
    pub fn map_locations(&self, map: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let moved = self
            .atoms
            .iter()
            .map(|a| Ok((map(a.location)?, a.mass)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(moved)
    }
}

impl Cdf for AtomicMeasure {
    fn cdf(&self, x: f64) -> f64 {
        let n = self.atoms.partition_point(|a| a.location <= x);
        if n == 0 {
            0.0
        } else {
            self.prefix[n - 1]
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let n = self.atoms.partition_point(|a| a.location < x);
        if n == 0 {
            0.0
        } else {
            self.prefix[n - 1]
        }
    }

    fn knots(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    fn total_mass(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Right-continuous step at each node.
    Step,
    /// Affine between nodes. Zero left of the first node, constant right of the last.
    Linear,
}

/// A cumulative function sampled on an x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSlice {
    xs: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl CdfSlice {
    pub fn new(xs: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if xs.len() != values.len() || xs.is_empty() {
            return Err(Error::InvalidMeasure(
                "cdf slice needs equally many nodes and values (at least one)".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeasure("cdf slice nodes must increase".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("cdf slice values must be finite".into()));
        }
        Ok(Self {
            xs,
            values,
            interpolation,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Cdf for CdfSlice {
    fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.partition_point(|&p| p <= x);
        if n == 0 {
            return 0.0;
        }
        let i = n - 1;
        match self.interpolation {
            Interpolation::Step => self.values[i],
            Interpolation::Linear => {
                if i + 1 == self.xs.len() {
                    self.values[i]
                } else {
                    let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
                    self.values[i] + w * (self.values[i + 1] - self.values[i])
                }
            }
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let n = self.xs.partition_point(|&p| p < x);
        if n == 0 {
            return 0.0;
        }
        match self.interpolation {
            Interpolation::Step => self.values[n - 1],
            // continuous except at the first node
            Interpolation::Linear => self.cdf(x),
        }
    }

    fn knots(&self) -> Vec<f64> {
        self.xs.clone()
    }

    fn total_mass(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }
}

/// One time slice of a [`MeasurePath`].
#[derive(Debug, Clone, PartialEq)]
pub enum Slice {
    Atomic(AtomicMeasure),
    Sampled(CdfSlice),
}

impl Cdf for Slice {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Slice::Atomic(m) => m.cdf(x),
            Slice::Sampled(c) => c.cdf(x),
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Slice::Atomic(m) => m.cdf_left(x),
            Slice::Sampled(c) => c.cdf_left(x),
        }
    }
    fn knots(&self) -> Vec<f64> {
        match self {
            Slice::Atomic(m) => m.knots(),
            Slice::Sampled(c) => c.knots(),
        }
    }
    fn total_mass(&self) -> f64 {
        match self {
            Slice::Atomic(m) => m.total_mass(),
            Slice::Sampled(c) => c.total_mass(),
        }
    }
}

/// Corners of the completed graph of `F` in coordinates `(s, x)` with
/// `s = x + F(x)`. Along the completed graph `s` never decreases and `x` is
/// piecewise linear in `s`, with these corners as breakpoints.
fn graph_corners<A: Cdf + ?Sized>(a: &A) -> Vec<(f64, f64)> {
    let knots = a.knots();
    let mut out = Vec::with_capacity(2 * knots.len());
    for k in knots {
        let (left, right) = (a.cdf_left(k), a.cdf(k));
        out.push((k + left, k));
        if right != left {
            out.push((k + right, k));
        }
    }
    out
}

/// `x` on the completed graph where it meets the line `x + y = s`. Queries
/// must come in nondecreasing `s`; `cursor` remembers the segment.
fn graph_x(corners: &[(f64, f64)], cursor: &mut usize, s: f64) -> f64 {
    let Some(&(s0, x0)) = corners.first() else {
        return s;
    };
    if s <= s0 {
        // constant F(x0-) to the left
        return s - (s0 - x0);
    }
    let &(sn, xn) = corners.last().expect("nonempty");
    if s >= sn {
        return s - (sn - xn);
    }
    while corners[*cursor + 1].0 < s {
        *cursor += 1;
    }
    let (sa, xa) = corners[*cursor];
    let (sb, xb) = corners[*cursor + 1];
    if sb == sa {
        xb
    } else {
        xa + (xb - xa) * (s - sa) / (sb - sa)
    }
}

/// Lévy distance between two finite measures given by their cumulative
/// functions: the largest horizontal gap between their completed graphs
/// along lines `x + y = s`, which is exact for piecewise-affine functions.
pub fn levy_distance<A: Cdf + ?Sized, B: Cdf + ?Sized>(a: &A, b: &B) -> f64 {
    let ga = graph_corners(a);
    let gb = graph_corners(b);
    let mut ss: Vec<f64> = ga.iter().chain(&gb).map(|c| c.0).collect();
    ss.sort_by(f64::total_cmp);
    let (mut ca, mut cb) = (0, 0);
    let mut worst = (a.total_mass() - b.total_mass()).abs();
    for s in ss {
        let d = (graph_x(&ga, &mut ca, s) - graph_x(&gb, &mut cb, s)).abs();
        worst = worst.max(d);
    }
    worst
}

type Eval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PathKind {
    Sampled {
        grid: TimeGrid,
        measures: Vec<AtomicMeasure>,
    },
    /// `eval(t, x) = nu_t(-inf, x]`; must accept `x = +inf` for the total mass.
    Analytic(Eval),
}

/// A càdlàg path of finite measures on `[0, horizon]`.
#[derive(Clone)]
pub struct MeasurePath {
    kind: PathKind,
    horizon: f64,
}

impl fmt::Debug for MeasurePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            PathKind::Sampled { grid, .. } => format!("Sampled({} nodes)", grid.len()),
            PathKind::Analytic(_) => "Analytic".to_string(),
        };
        f.debug_struct("MeasurePath")
            .field("kind", &kind)
            .field("horizon", &self.horizon)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Original plane to prime plane.
    Forward,
    /// Prime plane back to the original plane.
    Inverse,
}

impl MeasurePath {
    pub fn sampled(grid: TimeGrid, measures: Vec<AtomicMeasure>) -> Result<Self> {
        if grid.len() != measures.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} grid nodes but {} measures",
                grid.len(),
                measures.len()
            )));
        }
        let horizon = grid.horizon();
        Ok(Self {
            kind: PathKind::Sampled { grid, measures },
            horizon,
        })
    }

    pub fn analytic<F>(horizon: f64, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: PathKind::Analytic(Arc::new(eval)),
            horizon,
        }
    }

    /// The zero path.
    pub fn empty(horizon: f64) -> Self {
        Self::analytic(horizon, |_, _| 0.0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < -GRID_EPS || t > self.horizon + GRID_EPS || t.is_nan() {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// `nu_t(-inf, x]`.
    pub fn cumulative(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        let v = match &self.kind {
            PathKind::Sampled { grid, measures } => measures[grid.snap_left(t)].cdf(x),
            PathKind::Analytic(eval) => eval(t.max(0.0), x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidMeasure(format!(
                "cumulative value at (t={t}, x={x}) is not finite"
            )))
        }
    }

    /// `nu_t(R)`.
    pub fn total_mass(&self, t: f64) -> Result<f64> {
        self.cumulative(t, f64::INFINITY)
    }

    /// The slice at `t`: exact atoms for sampled paths, a piecewise-linear
    /// sample on `xgrid` for analytic ones.
    pub fn slice(&self, t: f64, xgrid: &[f64]) -> Result<Slice> {
        self.check_time(t)?;
        match &self.kind {
            PathKind::Sampled { grid, measures } => Ok(Slice::Atomic(measures[grid.snap_left(t)].clone())),
            PathKind::Analytic(_) => {
                let values = xgrid
                    .iter()
                    .map(|&x| self.cumulative(t, x))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Slice::Sampled(CdfSlice::new(
                    xgrid.to_vec(),
                    values,
                    Interpolation::Linear,
                )?))
            }
        }
    }

    /// Probes `t -> nu_t(-inf, x]` for monotonicity at every `x` in `xs`.
    pub fn is_nondecreasing_in_t(&self, times: &[f64], xs: &[f64]) -> Result<bool> {
        for &x in xs {
            let mut prev = f64::NEG_INFINITY;
            for &t in times {
                let v = self.cumulative(t, x)?;
                if v < prev - 1e-12 * (1.0 + prev.abs()) {
                    return Ok(false);
                }
                prev = v;
            }
        }
        Ok(true)
    }

    /// Moves the path between the original and prime planes. Masses are
    /// unchanged; only locations move along aging trajectories.
    pub fn transport(&self, rule: &AgingRule, direction: Direction) -> Result<Self> {
        match &self.kind {
            PathKind::Sampled { grid, measures } => {
                let moved = grid
                    .points()
                    .iter()
                    .zip(measures)
                    .map(|(&t, m)| m.map_locations(|x| map_point(rule, direction.opposite(), x, t)))
                    .collect::<Result<Vec<_>>>()?;
                Self::sampled(grid.clone(), moved)
            }
            PathKind::Analytic(eval) => {
                let eval = Arc::clone(eval);
                let rule = rule.clone();
                // nu'_t[0, x'] = nu_t(-inf, x(x', t)] and its inverse.
                Ok(Self::analytic(self.horizon, move |t, x| {
                    match map_point(&rule, direction, x, t) {
                        Ok(y) => eval(t, y),
                        Err(_) => f64::NAN,
                    }
                }))
            }
        }
    }

    /// Writes `t,x,mass` rows (t outer, x inner) with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, times: &[f64], xs: &[f64]) -> io::Result<()> {
        writeln!(out, "t,x,mass")?;
        for &t in times {
            for &x in xs {
                let m = self
                    .cumulative(t, x)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
                writeln!(out, "{},{},{}", fmt17(t), fmt17(x), fmt17(m))?;
            }
        }
        Ok(())
    }
}

impl Direction {
    fn opposite(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

/// For `Forward` evaluation a prime level `x'` is pulled back to the original
/// plane (`from_prime`); for `Inverse` an original `x` is pushed to `x'`.
fn map_point(rule: &AgingRule, direction: Direction, x: f64, t: f64) -> Result<f64> {
    let p = PlanePoint::new(x, t);
    Ok(match direction {
        Direction::Forward => rule.from_prime(p)?.x,
        Direction::Inverse => rule.to_prime(p)?.x,
    })
}

/// Maximum over `probe` times of the Lévy distance between slices. Uses the
/// identity time change, so it bounds the J1 distance from above.
pub fn path_distance(p1: &MeasurePath, p2: &MeasurePath, probe: &TimeGrid, xgrid: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in probe.points() {
        let a = p1.slice(t, xgrid)?;
        let b = p2.slice(t, xgrid)?;
        worst = worst.max(levy_distance(&a, &b));
    }
    Ok(worst)
}

/// 17 significant digits, the round-trip precision of an f64.
/// Negative zero is written as zero.
pub fn fmt17(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force Lévy distance: scan eps on a grid and test the defining
    /// inequalities on a dense x grid.
    fn levy_scan(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
        let xs: Vec<f64> = (0..=4000).map(|i| -2.0 + i as f64 * 1e-3).collect();
        let mut eps = 0.0;
        loop {
            let ok = xs.iter().all(|&x| {
                a.cdf(x - eps) - eps <= b.cdf(x) + 1e-12 && b.cdf(x) <= a.cdf(x + eps) + eps + 1e-12
            });
            if ok {
                return eps;
            }
            eps += 1e-3;
        }
    }

    /// Bisection on the defining inequalities, checked at every knot shifted
    /// by `eps`, where both sides can change slope, and in the tails.
    fn levy_bisect<A: Cdf, B: Cdf>(a: &A, b: &B) -> f64 {
        let (ka, kb) = (a.knots(), b.knots());
        let holds = |eps: f64| {
            let lower = |x: f64| {
                a.cdf(x - eps) - eps <= b.cdf(x) + 1e-12 && a.cdf_left(x - eps) - eps <= b.cdf_left(x) + 1e-12
            };
            let upper = |x: f64| {
                b.cdf(x) <= a.cdf(x + eps) + eps + 1e-12 && b.cdf_left(x) <= a.cdf_left(x + eps) + eps + 1e-12
            };
            // the tails need eps >= the mass gap
            (a.total_mass() - b.total_mass()).abs() <= eps + 1e-12
                && kb.iter().all(|&x| lower(x) && upper(x))
                && ka.iter().all(|&k| lower(k + eps) && upper(k - eps))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while !holds(hi) {
            hi *= 2.0;
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn levy_agrees_with_bisection() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let atoms = |rng: &mut rand_chacha::ChaCha8Rng| {
                let k = rng.gen_range(0..12);
                AtomicMeasure::new((0..k).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.01..0.6))))
                    .unwrap()
            };
            let a = atoms(&mut rng);
            let b = atoms(&mut rng);
            let d = levy_distance(&a, &b);
            assert!((d - levy_bisect(&a, &b)).abs() < 1e-9, "{d}");
            assert!((d - levy_distance(&b, &a)).abs() < 1e-12);

            let n = rng.gen_range(2..8);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let mut acc = 0.0;
            let vals: Vec<f64> = xs
                .iter()
                .map(|_| {
                    acc += rng.gen_range(0.0..0.5);
                    acc
                })
                .collect();
            let slice = CdfSlice::new(xs, vals, Interpolation::Linear).unwrap();
            let d = levy_distance(&slice, &a);
            assert!((d - levy_bisect(&slice, &a)).abs() < 1e-9, "{d}");
            assert!((d - levy_distance(&a, &slice)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        let g = TimeGrid::uniform(2.0, 4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.snap_left(0.99), 1);
        assert_eq!(g.snap_left(1.0), 2);
        assert_eq!(g.snap_left(7.0), 4);
        assert_eq!(g.thinned(3).points(), &[0.0, 1.5, 2.0]);
    }

    #[test]
    fn empty_path_is_zero() {
        let p = MeasurePath::empty(3.0);
        assert_eq!(p.cumulative(1.2, 5.0).unwrap(), 0.0);
        let s =
            MeasurePath::sampled(TimeGrid::uniform(3.0, 3).unwrap(), vec![AtomicMeasure::zero(); 4]).unwrap();
        assert_eq!(s.cumulative(2.5, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn right_continuity_at_atom() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let d = AtomicMeasure::dirac(1.0, 2.0).unwrap();
        let p = MeasurePath::sampled(grid, vec![d.clone(), d.clone(), d]).unwrap();
        assert_eq!(p.cumulative(0.7, 1.0).unwrap(), 2.0);
        assert_eq!(p.cumulative(0.7, 0.999).unwrap(), 0.0);
    }

    #[test]
    fn out_of_horizon() {
        let p = MeasurePath::empty(1.0);
        assert!(matches!(p.cumulative(1.5, 0.0), Err(Error::OutOfHorizon { .. })));
    }

    #[test]
    fn atoms_merge_and_sort() {
        let m = AtomicMeasure::new([(2.0, 1.0), (1.0, 0.5), (2.0, 0.25), (3.0, 0.0)]).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.cdf(1.5), 0.5);
        assert_eq!(m.cdf(2.0), 1.75);
        assert_eq!(m.cdf_left(2.0), 0.5);
        assert!(AtomicMeasure::new([(0.0, -1.0)]).is_err());
    }

    #[test]
    fn levy_examples() {
        let d0 = AtomicMeasure::dirac(0.0, 1.0).unwrap();
        let d5 = AtomicMeasure::dirac(0.5, 1.0).unwrap();
        let zero = AtomicMeasure::zero();
        assert_eq!(levy_distance(&d0, &d0), 0.0);

        // oracle values from the brute-force scan
        let scan = levy_scan(&d0, &d5);
        assert!((scan - 0.5).abs() <= 1e-3);
        assert!((levy_distance(&d0, &d5) - 0.5).abs() < 1e-8);

        let scan = levy_scan(&d0, &zero);
        assert!((scan - 1.0).abs() <= 1e-3);
        assert!((levy_distance(&d0, &zero) - 1.0).abs() < 1e-8);
        assert!((levy_distance(&zero, &d0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn levy_matches_scan_on_small_measures() {
        let a = AtomicMeasure::new([(-0.3, 0.2), (0.1, 0.4), (0.8, 0.1)]).unwrap();
        let b = AtomicMeasure::new([(-0.1, 0.3), (0.5, 0.35)]).unwrap();
        let exact = levy_distance(&a, &b);
        let scan = levy_scan(&a, &b);
        assert!((exact - scan).abs() <= 1.1e-3, "{exact} vs {scan}");
        assert!((exact - levy_distance(&b, &a)).abs() < 1e-8);
    }

    #[test]
    fn levy_between_atoms_and_linear_slice() {
        // uniform mass 1 on [0, 1] against its own 1000-atom discretisation
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let cdf = CdfSlice::new(xs.clone(), xs.clone(), Interpolation::Linear).unwrap();
        let atoms = AtomicMeasure::new((0..1000).map(|i| ((i as f64 + 0.5) / 1000.0, 1e-3))).unwrap();
        let d = levy_distance(&cdf, &atoms);
        assert!(d > 0.0 && d < 1e-3, "{d}");
    }

    #[test]
    fn single_atom_transport() {
        let rule = AgingRule::linear(1.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 2).unwrap();
        let measures = grid
            .points()
            .iter()
            .map(|&t| AtomicMeasure::dirac(1.0, 1.0 + t).unwrap())
            .collect();
        let path = MeasurePath::sampled(grid.clone(), measures).unwrap();
        let prime = path.transport(&rule, Direction::Forward).unwrap();
        for &t in grid.points() {
            let Slice::Atomic(m) = prime.slice(t, &[]).unwrap() else {
                panic!()
            };
            assert_eq!(m.atoms()[0].location, 1.0 + t);
            assert_eq!(m.atoms()[0].mass, 1.0 + t);
        }
        let back = prime.transport(&rule, Direction::Inverse).unwrap();
        assert_eq!(back.cumulative(2.0, 1.0).unwrap(), 3.0);
        assert_eq!(back.cumulative(2.0, 0.99).unwrap(), 0.0);
    }

    #[test]
    fn analytic_transport_round_trip() {
        let rule = AgingRule::exponential(0.3).unwrap();
        let path = MeasurePath::analytic(2.0, |t, x| t * x.clamp(0.0, 1.0));
        let round = path
            .transport(&rule, Direction::Forward)
            .unwrap()
            .transport(&rule, Direction::Inverse)
            .unwrap();
        for &(t, x) in &[(0.5, 0.2), (1.0, 0.7), (2.0, 3.0), (1.5, -1.0)] {
            let a = path.cumulative(t, x).unwrap();
            let b = round.cumulative(t, x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(round.total_mass(2.0).unwrap(), 2.0);
    }

    #[test]
    fn csv_export_layout() {
        let path = MeasurePath::analytic(1.0, |t, x| t + x);
        let mut buf = Vec::new();
        path.write_csv(&mut buf, &[0.0, 1.0], &[0.5, 2.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,mass");
        assert_eq!(lines.len(), 5);
        assert_eq!(
            lines[2],
            "0.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0"
        );
        assert!(lines[3].starts_with("1.0000000000000000e0,5.0000000000000000e-1"));
    }
}
