//! Experiment configuration.
//!
//! A config is a TOML document with three tables:
//!
//! ```toml
//! [env]
//! preset = "iid"            # adversarial | iid | corrupted | rom | multipass_rom
//!                           # | shift | switch | lb_rademacher | coord_quadratic
//! set = "box"               # ball (center, radius) | box (lo, hi or half_width)
//! dim = 2
//! half_width = 0.7071067811865476
//! mean = [1.0, 0.0]
//! sigma = 1.0
//!
//! [learner]
//! preset = "oftrl"          # oftrl (nu, worst_case, regularizer = plain | doubled) | oftl (mu)
//!                           # | ogd (step_scale, step)
//!
//! [run]
//! horizons = [100, 1000, 10000]
//! seeds = 20                # a count (seeds 0..n) or an explicit list
//! master_seed = 0
//! ```
//!
//! Every key is consumed by exactly one preset; anything left over is an
//! [`Error::UnknownKey`]. Overrides of the form `env.sigma=0.5` are applied
//! after parsing, in order, so the last one wins.
//!
//! Environment keys by preset (all accept `gradient_bound`, which raises the
//! reported almost-sure gradient bound `G`):
//!
//! | preset | keys |
//! |---|---|
//! | `adversarial` | set keys, `pattern` (`sign_flip` or `cycle`), `direction`, `scale`, `gradients` |
//! | `iid` | set keys, `mean`, `curvature`, `sigma` |
//! | `corrupted` | `iid` keys, `budget`, `level`, `direction` |
//! | `rom`, `multipass_rom` | set keys, `mean`, `curvature`, `spread`, `pool_size`, `pool_seed`, `passes` (multi-pass only) |
//! | `shift` | `iid` keys, `epsilon` |
//! | `switch` | set keys, `means`, `switches`, `curvature`, `sigma` |
//! | `lb_rademacher` | `a`, `b`, `scale` |
//! | `coord_quadratic` | `dim` |
//!
//! `curvature = s` turns every loss into `s ||x||^2 / 2 + <b, x>`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use toml::{Table, Value};

use crate::environments::{
    corruption_schedule, AdversarialScript, CoordinateQuadratic, CorruptedIid, EnvConstants, Iid,
    RademacherLowerBound, RandomOrder, Sea, Shift, Switch,
};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::learners::{Learner, Ogd, Oftl, Oftrl, Regularizer, StepRule};
use crate::linalg::{Point, SymMatrix};
use crate::losses::{unit_sphere, DistributionSpec, LossSpec};
use crate::metrics::GdTerm;
use crate::rng::splitmix64;

/// One TOML table being consumed key by key.
struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn new(name: &'static str, root: &mut Table) -> Result<Self> {
        let table = match root.remove(name) {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(_) => return Err(Error::Parse(format!("`{name}` must be a table"))),
        };
        Ok(Section { name, table })
    }

    fn bad(&self, key: &str, want: &str) -> Error {
        Error::config(format!("{}.{key} must be {want}", self.name))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(v) => as_f64(&v).map(Some).ok_or_else(|| self.bad(key, "a number")),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(_) => Err(self.bad(key, "a non-negative integer")),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        Ok(self.usize(key)?.map(|v| v as u64))
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(_) => Err(self.bad(key, "a boolean")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.bad(key, "a string")),
        }
    }

    fn vec(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Array(a)) => {
                a.iter().map(as_f64).collect::<Option<Vec<_>>>().map(Some).ok_or_else(|| self.bad(key, "a list of numbers"))
            }
            Some(_) => Err(self.bad(key, "a list of numbers")),
        }
    }

    fn point(&mut self, key: &str) -> Result<Option<Point>> {
        self.vec(key)?.map(Point::new).transpose()
    }

    fn points(&mut self, key: &str) -> Result<Option<Vec<Point>>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|r| match r {
                    Value::Array(a) => a
                        .iter()
                        .map(as_f64)
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| self.bad(key, "a list of number lists"))
                        .and_then(Point::new),
                    _ => Err(self.bad(key, "a list of number lists")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.bad(key, "a list of number lists")),
        }
    }

    fn usizes(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Some(*i as usize),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| self.bad(key, "a list of non-negative integers")),
            Some(_) => Err(self.bad(key, "a list of non-negative integers")),
        }
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::config(format!("{}.{key} is required", self.name)))
    }

    /// Errors on the first key nobody consumed.
    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(k) => Err(Error::UnknownKey(format!("{}.{k}", self.name))),
            None => Ok(()),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Ball or box, as described by the set keys of an environment table.
fn read_set(s: &mut Section, default_dim: usize) -> Result<FeasibleSet> {
    let kind = s.string("set")?.unwrap_or_else(|| "ball".into());
    let dim = s.usize("dim")?;
    match kind.as_str() {
        "ball" => {
            let center = s.point("center")?;
            let dim = dim.or(center.as_ref().map(Point::dim)).unwrap_or(default_dim);
            let radius = s.f64_or("radius", 1.0)?;
            FeasibleSet::ball(center.unwrap_or_else(|| Point::zeros(dim)), radius)
        }
        "box" => {
            let half = s.f64("half_width")?;
            let (lo, hi) = (s.point("lo")?, s.point("hi")?);
            match (half, lo, hi) {
                (Some(h), None, None) => {
                    let dim = dim.unwrap_or(default_dim);
                    FeasibleSet::cuboid(Point::new(vec![-h; dim])?, Point::new(vec![h; dim])?)
                }
                (None, Some(lo), Some(hi)) => FeasibleSet::cuboid(lo, hi),
                _ => Err(Error::config("a box needs either `half_width` or both `lo` and `hi`")),
            }
        }
        other => Err(Error::config(format!("unknown set kind `{other}`"))),
    }
}

/// `s ||x||^2 / 2 + <b, x>` for `s > 0`, otherwise `<b, x>`.
fn make_loss(b: Point, curvature: f64) -> Result<LossSpec> {
    if !(curvature >= 0.0 && curvature.is_finite()) {
        return Err(Error::config(format!("curvature must be non-negative, got {curvature}")));
    }
    if curvature == 0.0 {
        Ok(LossSpec::linear(b))
    } else {
        LossSpec::quadratic(SymMatrix::scaled_identity(b.dim(), curvature), b)
    }
}

/// Shares one curvature matrix across a pool.
fn make_pool(bs: Vec<Point>, curvature: f64) -> Result<Vec<LossSpec>> {
    if curvature == 0.0 {
        return Ok(bs.into_iter().map(LossSpec::linear).collect());
    }
    let first = make_loss(bs[0].clone(), curvature)?;
    let a = first.curvature().map(|a| Arc::new(a.clone())).expect("positive curvature");
    Ok(bs.into_iter().map(|b| LossSpec::Quadratic { a: Arc::clone(&a), b }).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScriptPattern {
    SignFlip { direction: Point, scale: f64 },
    Cycle(Vec<Point>),
}

/// Parameters of a random-order pool `b_i = mean + spread * u_i`, with
/// `u_i` uniform on the sphere and drawn from `pool_seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolConfig {
    pub size: Option<usize>,
    pub seed: u64,
    pub mean: Point,
    pub spread: f64,
    pub curvature: f64,
}

impl PoolConfig {
    pub fn generate(&self, size: usize) -> Result<Vec<LossSpec>> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed));
        let bs = (0..size)
            .map(|_| {
                let mut b = self.mean.clone();
                b.axpy(self.spread, &unit_sphere(self.mean.dim(), &mut rng));
                b
            })
            .collect();
        make_pool(bs, self.curvature)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvKind {
    Adversarial { pattern: ScriptPattern },
    Iid { base: LossSpec, sigma: f64 },
    Corrupted { base: LossSpec, sigma: f64, budget: f64, level: f64, direction: Point },
    Rom { pool: PoolConfig, passes: usize },
    Shift { base: LossSpec, sigma: f64, epsilon: f64 },
    Switch { dists: Vec<DistributionSpec>, switches: Vec<usize> },
    Rademacher { a: f64, b: f64, scale: f64 },
    CoordQuadratic { dim: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub preset: String,
    pub set: FeasibleSet,
    pub kind: EnvKind,
    pub gradient_bound: Option<f64>,
}

impl EnvConfig {
    fn read(s: &mut Section) -> Result<Self> {
        let preset = s.string("preset")?.ok_or_else(|| Error::config("env.preset is required"))?;
        let gradient_bound = s.f64("gradient_bound")?;
        let (set, kind) = match preset.as_str() {
            "adversarial" => {
                let set = read_set(s, 2)?;
                let pattern = s.string("pattern")?.unwrap_or_else(|| "sign_flip".into());
                let pattern = match pattern.as_str() {
                    "sign_flip" => ScriptPattern::SignFlip {
                        direction: s.point("direction")?.unwrap_or_else(|| Point::basis(set.dim(), 0)),
                        scale: s.f64_or("scale", 1.0)?,
                    },
                    "cycle" => {
                        let g = s.points("gradients")?;
                        ScriptPattern::Cycle(s.require("gradients", g)?)
                    }
                    other => return Err(Error::config(format!("unknown script pattern `{other}`"))),
                };
                (set, EnvKind::Adversarial { pattern })
            }
            "iid" | "corrupted" | "shift" => {
                let set = read_set(s, 2)?;
                let mean = s.point("mean")?.unwrap_or_else(|| Point::basis(set.dim(), 0));
                let base = make_loss(mean, s.f64_or("curvature", 0.0)?)?;
                let sigma = s.f64_or("sigma", 0.0)?;
                let kind = match preset.as_str() {
                    "iid" => EnvKind::Iid { base, sigma },
                    "corrupted" => {
                        let budget = s.f64("budget")?;
                        let default_dir = Point::basis(set.dim(), usize::from(set.dim() > 1));
                        EnvKind::Corrupted {
                            base,
                            sigma,
                            budget: s.require("budget", budget)?,
                            level: s.f64_or("level", 1.0)?,
                            direction: s.point("direction")?.unwrap_or(default_dir),
                        }
                    }
                    _ => {
                        let eps = s.f64("epsilon")?;
                        EnvKind::Shift { base, sigma, epsilon: s.require("epsilon", eps)? }
                    }
                };
                (set, kind)
            }
            "rom" | "multipass_rom" => {
                let set = read_set(s, 2)?;
                let pool = PoolConfig {
                    size: s.usize("pool_size")?,
                    seed: s.u64("pool_seed")?.unwrap_or(0),
                    mean: s.point("mean")?.unwrap_or_else(|| Point::zeros(set.dim())),
                    spread: s.f64_or("spread", 1.0)?,
                    curvature: s.f64_or("curvature", 0.0)?,
                };
                let passes = if preset == "rom" { 1 } else { s.usize("passes")?.unwrap_or(2) };
                (set, EnvKind::Rom { pool, passes })
            }
            "switch" => {
                let set = read_set(s, 2)?;
                let means = s.points("means")?;
                let means = s.require("means", means)?;
                let switches = s.usizes("switches")?;
                let switches = s.require("switches", switches)?;
                let sigma = s.f64_or("sigma", 0.0)?;
                let curvature = s.f64_or("curvature", 0.0)?;
                let dists = means
                    .into_iter()
                    .map(|m| DistributionSpec::sphere_noise(make_loss(m, curvature)?, sigma))
                    .collect::<Result<_>>()?;
                (set, EnvKind::Switch { dists, switches })
            }
            "lb_rademacher" => {
                let a = s.f64_or("a", 1.0)?;
                let b = s.f64_or("b", 2.0)?;
                let scale = s.f64_or("scale", 1.0)?;
                let set = FeasibleSet::cuboid(Point::new(vec![a])?, Point::new(vec![b])?)?;
                (set, EnvKind::Rademacher { a, b, scale })
            }
            "coord_quadratic" => {
                let dim = s.usize("dim")?.unwrap_or(4);
                (FeasibleSet::unit_ball(dim.max(1)), EnvKind::CoordQuadratic { dim })
            }
            other => return Err(Error::config(format!("unknown environment preset `{other}`"))),
        };
        Ok(EnvConfig { preset, set, kind, gradient_bound })
    }

    /// Builds a fresh environment for a trial of the given horizon.
    pub fn build(&self, horizon: usize) -> Result<Box<dyn Sea>> {
        let set = self.set.clone();
        Ok(match &self.kind {
            EnvKind::Adversarial { pattern: ScriptPattern::SignFlip { direction, scale } } => {
                Box::new(AdversarialScript::sign_flip(direction, *scale, horizon, set)?)
            }
            EnvKind::Adversarial { pattern: ScriptPattern::Cycle(gs) } => {
                Box::new(AdversarialScript::cycle(gs, horizon, set)?)
            }
            EnvKind::Iid { base, sigma } => Box::new(Iid::new(DistributionSpec::sphere_noise(base.clone(), *sigma)?, set)?),
            EnvKind::Corrupted { base, sigma, budget, level, direction } => {
                let dist = DistributionSpec::sphere_noise(base.clone(), *sigma)?;
                let schedule = corruption_schedule(*budget, *level, direction)?;
                Box::new(CorruptedIid::new(dist, schedule, *budget, set)?)
            }
            EnvKind::Rom { pool, passes } => {
                let size = pool.size.unwrap_or_else(|| horizon.div_ceil(*passes)).max(1);
                Box::new(RandomOrder::multi_pass(pool.generate(size)?, *passes, set)?)
            }
            EnvKind::Shift { base, sigma, epsilon } => Box::new(Shift::new(base.clone(), *sigma, *epsilon, set)?),
            EnvKind::Switch { dists, switches } => Box::new(Switch::new(dists.clone(), switches.clone(), set)?),
            EnvKind::Rademacher { a, b, scale } => Box::new(RademacherLowerBound::new(*a, *b, *scale)?),
            EnvKind::CoordQuadratic { dim } => Box::new(CoordinateQuadratic::new(*dim)?),
        })
    }

    /// The environment's constants with the configured `gradient_bound`
    /// applied. An override below the computed bound is rejected.
    pub fn constants(&self, env: &dyn Sea) -> Result<EnvConstants> {
        let mut c = env.constants();
        if let Some(g) = self.gradient_bound {
            if g < c.gradient_bound * (1.0 - 1e-12) {
                return Err(Error::config(format!(
                    "env.gradient_bound = {g} is below the environment's bound {}",
                    c.gradient_bound
                )));
            }
            c.gradient_bound = g;
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LearnerConfig {
    Oftrl { nu: Option<f64>, worst_case: bool, regularizer: Regularizer },
    Oftl { mu: Option<f64> },
    Ogd { step_scale: f64, step: Option<f64> },
}

impl LearnerConfig {
    fn read(s: &mut Section) -> Result<Self> {
        let preset = s.string("preset")?.unwrap_or_else(|| "oftrl".into());
        Ok(match preset.as_str() {
            "oftrl" => {
                let regularizer = match s.string("regularizer")?.as_deref() {
                    None | Some("plain") => Regularizer::Plain,
                    Some("doubled") => Regularizer::Doubled,
                    Some(other) => return Err(Error::config(format!("unknown regularizer `{other}`"))),
                };
                LearnerConfig::Oftrl { nu: s.f64("nu")?, worst_case: s.bool("worst_case")?.unwrap_or(false), regularizer }
            }
            "oftl" => LearnerConfig::Oftl { mu: s.f64("mu")? },
            "ogd" => LearnerConfig::Ogd { step_scale: s.f64_or("step_scale", 1.0)?, step: s.f64("step")? },
            other => return Err(Error::config(format!("unknown learner preset `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::Oftrl { .. } => "oftrl",
            LearnerConfig::Oftl { .. } => "oftl",
            LearnerConfig::Ogd { .. } => "ogd",
        }
    }

    /// `nu` actually used: explicit value, else `2DG` in worst-case mode,
    /// else `LD^2 + DG^2`.
    pub fn resolved_nu(&self, set: &FeasibleSet, c: &EnvConstants) -> Option<f64> {
        match self {
            LearnerConfig::Oftrl { nu, worst_case, .. } => {
                let d = set.diameter();
                Some(nu.unwrap_or(if *worst_case {
                    Oftrl::worst_case_nu(d, c.gradient_bound)
                } else {
                    Oftrl::default_nu(d, c.gradient_bound, c.smoothness)
                }))
            }
            _ => None,
        }
    }

    /// `mu` actually used: explicit value, else the environment's strong
    /// convexity.
    pub fn resolved_mu(&self, c: &EnvConstants) -> Option<f64> {
        match self {
            LearnerConfig::Oftl { mu } => Some(mu.unwrap_or(c.strong_convexity)),
            _ => None,
        }
    }

    /// Validates the learner against the environment before any round.
    pub fn build(&self, set: &FeasibleSet, c: &EnvConstants) -> Result<Box<dyn Learner>> {
        Ok(match self {
            LearnerConfig::Oftrl { regularizer, .. } => {
                let nu = self.resolved_nu(set, c).expect("oftrl has nu");
                if nu.is_nan() || nu <= 0.0 {
                    return Err(Error::config(format!(
                        "nu resolved to {nu}; set learner.nu or give the environment a positive gradient bound"
                    )));
                }
                Box::new(Oftrl::new(set.clone(), nu, *regularizer)?)
            }
            LearnerConfig::Oftl { .. } => {
                let mu = self.resolved_mu(c).expect("oftl has mu");
                if mu.is_nan() || mu <= 0.0 {
                    return Err(Error::config("oftl needs a strongly convex environment (mu > 0)"));
                }
                Box::new(Oftl::new(set.clone(), mu)?)
            }
            LearnerConfig::Ogd { step_scale, step } => {
                let rule = match step {
                    Some(s) => StepRule::Constant(*s),
                    None => StepRule::InvSqrt { scale: *step_scale, gradient_bound: c.gradient_bound },
                };
                Box::new(Ogd::new(set.clone(), rule)?)
            }
        })
    }
}

/// Which regret series the harness aggregates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretKind {
    /// Function-value regret for `oftl`, linearized regret otherwise.
    Auto,
    Linearized,
    FunctionValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub bound_mode: GdTerm,
    pub regret: RegretKind,
    /// Number of largest horizons used by the slope fit.
    pub slope_points: usize,
    /// Geometric horizon grid used by `sweep`: `(min, max, factor)`.
    pub sweep: Option<(usize, usize, usize)>,
}

impl RunConfig {
    fn read(s: &mut Section) -> Result<Self> {
        let horizons = s.usizes("horizons")?.unwrap_or_else(|| vec![100, 1000]);
        let seeds = match s.table.remove("seeds") {
            None => (0..20).collect(),
            Some(Value::Integer(n)) if n >= 1 => (0..n as u64).collect(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Some(*i as u64),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| s.bad("seeds", "a positive count or a list of non-negative integers"))?,
            Some(_) => return Err(s.bad("seeds", "a positive count or a list of non-negative integers")),
        };
        let bound_mode = match s.string("bound_mode")?.as_deref() {
            None | Some("with_gd") => GdTerm::Included,
            Some("without_gd") => GdTerm::Omitted,
            Some(other) => return Err(Error::config(format!("unknown bound_mode `{other}`"))),
        };
        let regret = match s.string("regret")?.as_deref() {
            None | Some("auto") => RegretKind::Auto,
            Some("linearized") => RegretKind::Linearized,
            Some("function_value") => RegretKind::FunctionValue,
            Some(other) => return Err(Error::config(format!("unknown regret kind `{other}`"))),
        };
        let sweep = match (s.usize("sweep_min")?, s.usize("sweep_max")?, s.usize("sweep_factor")?) {
            (None, None, None) => None,
            (Some(lo), Some(hi), f) => Some((lo, hi, f.unwrap_or(10))),
            _ => return Err(Error::config("a sweep needs both run.sweep_min and run.sweep_max")),
        };
        Ok(RunConfig {
            horizons,
            seeds,
            master_seed: s.u64("master_seed")?.unwrap_or(0),
            out: s.string("out")?.map(PathBuf::from),
            bound_mode,
            regret,
            slope_points: s.usize("slope_points")?.unwrap_or(3),
            sweep,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("run.horizons must be strictly increasing"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("run.seeds must name at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("run.seeds must be distinct"));
        }
        if self.slope_points < 2 {
            return Err(Error::config("run.slope_points must be at least 2"));
        }
        Ok(())
    }

    /// Replaces the horizon list with the sweep grid
    /// `min, min*factor, ...` up to `max`.
    pub fn expand_sweep(&mut self) -> Result<()> {
        let (lo, hi, factor) = self.sweep.ok_or_else(|| Error::config("sweep needs run.sweep_min and run.sweep_max"))?;
        if lo == 0 || hi < lo || factor < 2 {
            return Err(Error::config("sweep needs 0 < sweep_min <= sweep_max and sweep_factor >= 2"));
        }
        let mut grid = Vec::new();
        let mut t = lo;
        while t <= hi {
            grid.push(t);
            t = t.saturating_mul(factor);
        }
        self.horizons = grid;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub learner: LearnerConfig,
    pub run: RunConfig,
    /// The merged document (after overrides), echoed in summaries.
    pub source: Table,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides in order, and validates.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        Self::from_table(root)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
        Self::with_overrides(&text, overrides)
    }

    pub fn from_table(root: Table) -> Result<Self> {
        let source = root.clone();
        let mut root = root;
        let mut env_s = Section::new("env", &mut root)?;
        let mut learner_s = Section::new("learner", &mut root)?;
        let mut run_s = Section::new("run", &mut root)?;
        if let Some(k) = root.keys().next() {
            return Err(Error::UnknownKey(k.clone()));
        }
        let env = EnvConfig::read(&mut env_s)?;
        let learner = LearnerConfig::read(&mut learner_s)?;
        let run = RunConfig::read(&mut run_s)?;
        env_s.finish()?;
        learner_s.finish()?;
        run_s.finish()?;
        run.validate()?;
        Ok(ExperimentConfig { env, learner, run, source })
    }

    /// `"{env}_{learner}"`, used for output file names.
    pub fn label(&self) -> String {
        format!("{}_{}", self.env.preset, self.learner.name())
    }
}

/// Sets `section.key` (dotted path) to `value`, parsed as a TOML value when
/// possible and as a bare string otherwise.
pub fn apply_override(root: &mut Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{assignment}` is not of the form key=value")))?;
    let path = path.trim();
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| Error::UnknownKey(path.to_string()))?;
    if !matches!(section, "env" | "learner" | "run") || key.is_empty() || key.contains('.') {
        return Err(Error::UnknownKey(path.to_string()));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let table = root.entry(section.to_string()).or_insert_with(|| Value::Table(Table::new()));
    match table {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Parse(format!("`{section}` must be a table"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IID: &str = r#"
        [env]
        preset = "iid"
        set = "box"
        dim = 2
        half_width = 0.7071067811865476
        mean = [1.0, 0.0]
        sigma = 1.0

        [learner]
        preset = "oftrl"

        [run]
        horizons = [10, 100]
        seeds = 3
    "#;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::from_toml(IID).unwrap();
        assert_eq!(cfg.env.preset, "iid");
        assert!((cfg.env.set.diameter() - 2.0).abs() < 1e-12);
        assert_eq!(cfg.run.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.label(), "iid_oftrl");
        let env = cfg.env.build(10).unwrap();
        let c = cfg.env.constants(env.as_ref()).unwrap();
        assert!((c.gradient_bound - 2.0).abs() < 1e-12);
        assert!((cfg.learner.resolved_nu(&cfg.env.set, &c).unwrap() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_keys_are_reported_with_their_path() {
        let err = ExperimentConfig::from_toml(&format!("{IID}\nbogus = 1")).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(k) if k == "run.bogus"));
        let err = ExperimentConfig::with_overrides(IID, &["env.budget=3".into()]).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(k) if k == "env.budget"));
        let err = ExperimentConfig::with_overrides(IID, &["nope=3".into()]).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(_)));
    }

    #[test]
    fn overrides_apply_in_order() {
        let cfg = ExperimentConfig::with_overrides(
            IID,
            &["env.sigma=0.5".into(), "learner.worst_case=true".into(), "env.sigma=0.25".into()],
        )
        .unwrap();
        assert_eq!(cfg.env.kind, EnvKind::Iid { base: LossSpec::linear(Point::basis(2, 0)), sigma: 0.25 });
        assert!(matches!(cfg.learner, LearnerConfig::Oftrl { worst_case: true, .. }));
        let cfg = ExperimentConfig::with_overrides(IID, &["learner.preset=ogd".into()]).unwrap();
        assert_eq!(cfg.learner.name(), "ogd");
    }

    #[test]
    fn run_section_is_validated() {
        assert!(ExperimentConfig::with_overrides(IID, &["run.horizons=[100, 10]".into()]).is_err());
        assert!(ExperimentConfig::with_overrides(IID, &["run.seeds=[1, 1]".into()]).is_err());
        let cfg = ExperimentConfig::with_overrides(IID, &["run.seeds=[4, 2]".into()]).unwrap();
        assert_eq!(cfg.run.seeds, vec![4, 2]);
    }

    #[test]
    fn sweep_grid() {
        let mut cfg = ExperimentConfig::with_overrides(
            IID,
            &["run.sweep_min=100".into(), "run.sweep_max=100000".into()],
        )
        .unwrap();
        cfg.run.expand_sweep().unwrap();
        assert_eq!(cfg.run.horizons, vec![100, 1000, 10_000, 100_000]);
    }

    #[test]
    fn oftl_needs_strong_convexity() {
        let cfg = ExperimentConfig::with_overrides(IID, &["learner.preset=oftl".into()]).unwrap();
        let env = cfg.env.build(5).unwrap();
        let c = cfg.env.constants(env.as_ref()).unwrap();
        assert!(matches!(cfg.learner.build(&cfg.env.set, &c), Err(Error::Config(_))));
    }

    #[test]
    fn every_preset_builds() {
        let envs = [
            "preset = \"adversarial\"",
            "preset = \"adversarial\"\npattern = \"cycle\"\ngradients = [[1.0, 0.0], [0.0, 1.0]]",
            "preset = \"corrupted\"\nbudget = 4.0",
            "preset = \"rom\"\nmean = [0.5, 0.0]",
            "preset = \"multipass_rom\"\npasses = 3\npool_size = 4",
            "preset = \"shift\"\nepsilon = 0.01\nsigma = 0.1",
            "preset = \"switch\"\nmeans = [[1.0, 0.0], [0.0, 1.0]]\nswitches = [5]",
            "preset = \"lb_rademacher\"",
            "preset = \"coord_quadratic\"",
            "preset = \"iid\"\nset = \"box\"\nlo = [0.0, 0.0]\nhi = [1.0, 2.0]\ncurvature = 1.0",
        ];
        for e in envs {
            let cfg = ExperimentConfig::from_toml(&format!("[env]\n{e}\n")).unwrap_or_else(|err| panic!("{e}: {err}"));
            let env = cfg.env.build(12).unwrap();
            assert!(cfg.env.constants(env.as_ref()).unwrap().gradient_bound > 0.0, "{e}");
        }
    }

    #[test]
    fn gradient_bound_override_cannot_shrink() {
        let cfg = ExperimentConfig::with_overrides(IID, &["env.gradient_bound=1.0".into()]).unwrap();
        let env = cfg.env.build(5).unwrap();
        assert!(cfg.env.constants(env.as_ref()).is_err());
    }
}
