use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvConstants, RoundClock, RoundOutcome, Sea};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;
use crate::losses::{AffineField, DistributionSpec, LossSpec};
use crate::metrics::RoundRecord;

/// Below this many remaining members the running sums are rebuilt from
/// scratch to keep the variance of tiny pools exact.
const RESUM_BELOW: usize = 64;

/// Random order model: sampling without replacement from a fixed pool,
/// optionally over several passes with a fresh shuffle at each pass
/// boundary. `D_t` is uniform over the members not yet drawn in the current
/// pass.
#[derive(Clone, Debug)]
pub struct RandomOrder {
    pool: Arc<[LossSpec]>,
    passes: usize,
    pass: usize,
    remaining: Vec<usize>,
    /// Present when every member's gradient field differs from the others by
    /// a constant, so variance and variation reduce to vector statistics.
    stats: Option<PoolStats>,
    prev_field: Option<AffineField>,
    /// Support of the most recent `D_t`.
    last_support: Vec<usize>,
    set: FeasibleSet,
    clock: RoundClock,
}

/// Running sums over the remaining members of the centered offset vectors
/// `v_i - v_bar` (linear gradients or quadratic `b` terms).
#[derive(Clone, Debug)]
struct PoolStats {
    centered: Vec<Point>,
    sum: Point,
    sum_sq: f64,
    prev_mean: Option<Point>,
}

impl PoolStats {
    fn build(pool: &[LossSpec]) -> Option<Self> {
        let offsets: Vec<Point> = match &pool[0] {
            LossSpec::Linear { .. } => pool
                .iter()
                .map(|l| match l {
                    LossSpec::Linear { g } => Some(g.clone()),
                    LossSpec::Quadratic { .. } => None,
                })
                .collect::<Option<_>>()?,
            LossSpec::Quadratic { a: a0, .. } => pool
                .iter()
                .map(|l| match l {
                    LossSpec::Quadratic { a, b } if a == a0 => Some(b.clone()),
                    _ => None,
                })
                .collect::<Option<_>>()?,
        };
        let d = offsets[0].dim();
        let mut mean = Point::zeros(d);
        for v in &offsets {
            mean.axpy(1.0 / offsets.len() as f64, v);
        }
        let centered: Vec<Point> = offsets.iter().map(|v| v - &mean).collect();
        Some(PoolStats { sum: Point::zeros(d), sum_sq: 0.0, centered, prev_mean: None })
    }

    fn reset(&mut self, members: &[usize]) {
        self.sum = Point::zeros(self.sum.dim());
        self.sum_sq = 0.0;
        for &i in members {
            self.sum.axpy(1.0, &self.centered[i]);
            self.sum_sq += self.centered[i].norm_sq();
        }
    }

    fn remove(&mut self, i: usize) {
        self.sum.axpy(-1.0, &self.centered[i]);
        self.sum_sq -= self.centered[i].norm_sq();
    }

    /// (variance, mean) of the uniform distribution over `m` members.
    fn moments(&self, m: usize) -> (f64, Point) {
        let mean = self.sum.scaled(1.0 / m as f64);
        ((self.sum_sq / m as f64 - mean.norm_sq()).max(0.0), mean)
    }
}

impl RandomOrder {
    /// Single pass over `pool`.
    pub fn single_pass(pool: Vec<LossSpec>, set: FeasibleSet) -> Result<Self> {
        Self::multi_pass(pool, 1, set)
    }

    pub fn multi_pass(pool: Vec<LossSpec>, passes: usize, set: FeasibleSet) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::config("random order pool must be nonempty"));
        }
        if passes == 0 {
            return Err(Error::config("random order needs at least one pass"));
        }
        if let Some(l) = pool.iter().find(|l| l.dim() != set.dim()) {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: l.dim() });
        }
        let n = pool.len();
        let mut stats = PoolStats::build(&pool);
        let remaining: Vec<usize> = (0..n).collect();
        if let Some(s) = stats.as_mut() {
            s.reset(&remaining);
        }
        Ok(RandomOrder {
            pool: pool.into(),
            passes,
            pass: 1,
            remaining,
            stats,
            prev_field: None,
            last_support: Vec::new(),
            set,
            clock: RoundClock::default(),
        })
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn current_pass(&self) -> usize {
        self.pass
    }

    /// Indices not yet drawn in the current pass.
    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    /// Variance of the full pool (`sigma_1^2`): max over the set of the
    /// average squared deviation from the pool mean gradient.
    pub fn pool_variance(&self) -> f64 {
        let all = DistributionSpec::FiniteUniform { pool: Arc::clone(&self.pool), active: (0..self.pool.len()).collect() };
        all.variance_bound(&self.set)
    }

    /// `(1/n) sum_i max_x ||grad f_i(x) - mean(x)||^2`, the average-then-max
    /// proxy `sigma~_1^2`.
    pub fn pool_variance_upper(&self) -> f64 {
        let all = DistributionSpec::FiniteUniform { pool: Arc::clone(&self.pool), active: (0..self.pool.len()).collect() };
        let mean = all.mean_field();
        self.pool.iter().map(|l| l.field().sub(&mean).sup_norm_sq(&self.set)).sum::<f64>() / self.pool.len() as f64
    }

    fn current_moments(&mut self) -> (f64, f64) {
        let m = self.remaining.len();
        if let Some(stats) = self.stats.as_mut() {
            if m <= RESUM_BELOW {
                stats.reset(&self.remaining);
            }
            let (var, mean) = stats.moments(m);
            let variation = stats.prev_mean.as_ref().map_or(0.0, |p| (&mean - p).norm_sq());
            stats.prev_mean = Some(mean);
            return (var, variation);
        }
        let dist = DistributionSpec::FiniteUniform { pool: Arc::clone(&self.pool), active: self.remaining.clone() };
        let field = dist.mean_field();
        let variation = self.prev_field.as_ref().map_or(0.0, |p| field.sub(p).sup_norm_sq(&self.set));
        let var = dist.variance_bound(&self.set);
        self.prev_field = Some(field);
        (var, variation)
    }
}

impl Sea for RandomOrder {
    fn name(&self) -> &'static str {
        if self.passes == 1 {
            "rom"
        } else {
            "multipass_rom"
        }
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        if self.remaining.is_empty() {
            if self.pass >= self.passes {
                return Err(Error::protocol(format!(
                    "random order pool of {} exhausted after {} pass(es) at round {t}",
                    self.pool.len(),
                    self.passes
                )));
            }
            self.pass += 1;
            self.remaining = (0..self.pool.len()).collect();
            if let Some(s) = self.stats.as_mut() {
                s.reset(&self.remaining);
            }
        }
        self.clock.advance(t, history.len())?;
        let (sigma_sq, variation_sq) = self.current_moments();
        self.last_support.clone_from(&self.remaining);
        let pick = rng.random_range(0..self.remaining.len());
        let k = self.remaining.swap_remove(pick);
        if let Some(s) = self.stats.as_mut() {
            s.remove(k);
        }
        Ok(RoundOutcome { xi: self.pool[k].clone(), sigma_sq, variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        (self.clock.last() > 0).then(|| DistributionSpec::FiniteUniform {
            pool: Arc::clone(&self.pool),
            active: self.last_support.clone(),
        })
    }

    fn constants(&self) -> EnvConstants {
        let gradient_bound = self.pool.iter().map(|l| l.field().sup_norm_sq(&self.set).sqrt()).fold(0.0, f64::max);
        let smoothness =
            self.pool.iter().map(|l| l.curvature().map_or(0.0, |a| a.lambda_max_psd())).fold(0.0, f64::max);
        let strong_convexity = self
            .pool
            .iter()
            .map(|l| l.curvature().map_or(0.0, |a| a.lambda_min_psd().max(0.0)))
            .fold(f64::INFINITY, f64::min);
        EnvConstants { gradient_bound, smoothness, strong_convexity }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn lin1(v: f64) -> LossSpec {
        LossSpec::linear(Point::new(vec![v]).unwrap())
    }

    fn drive(env: &mut RandomOrder, horizon: usize, seed: u64) -> Result<Vec<RoundOutcome>> {
        let key = StreamKey::new(0, seed, horizon);
        let x = Point::zeros(env.set().dim());
        let mut hist = Vec::new();
        let mut out = Vec::new();
        for t in 1..=horizon {
            let o = env.step(t, &x, &hist, &mut key.round(t))?;
            hist.push(RoundRecord::new(t, x.clone(), o.xi.grad(&x), 0.0, &o));
            out.push(o);
        }
        Ok(out)
    }

    #[test]
    fn drawn_member_leaves_the_support() {
        let pool = vec![lin1(1.0), lin1(2.0), lin1(3.0)];
        let mut env = RandomOrder::single_pass(pool.clone(), FeasibleSet::unit_ball(1)).unwrap();
        let key = StreamKey::new(0, 0, 3);
        let x = Point::zeros(1);
        let o = env.step(1, &x, &[], &mut key.round(1)).unwrap();
        let drawn = pool.iter().position(|l| *l == o.xi).unwrap();
        let mut rest: Vec<usize> = env.remaining().to_vec();
        rest.sort();
        let expected: Vec<usize> = (0..3).filter(|&i| i != drawn).collect();
        assert_eq!(rest, expected);
        let hist = vec![RoundRecord::new(1, x.clone(), o.xi.grad(&x), 0.0, &o)];
        env.step(2, &x, &hist, &mut key.round(2)).unwrap();
        let DistributionSpec::FiniteUniform { active, .. } = env.distribution().unwrap() else { panic!() };
        let mut active = active;
        active.sort();
        assert_eq!(active, expected);
    }

    #[test]
    fn moments_match_the_generic_formulas() {
        let pool: Vec<LossSpec> = (0..7).map(|i| lin1((i * i) as f64 * 0.3 - 1.0)).collect();
        let set = FeasibleSet::unit_ball(1);
        let mut fast = RandomOrder::single_pass(pool.clone(), set.clone()).unwrap();
        let key = StreamKey::new(0, 9, 7);
        let x = Point::zeros(1);
        let mut hist = Vec::new();
        let mut prev: Option<DistributionSpec> = None;
        for t in 1..=7 {
            let active = fast.remaining().to_vec();
            let o = fast.step(t, &x, &hist, &mut key.round(t)).unwrap();
            let dist = DistributionSpec::finite_uniform(pool.clone().into(), active).unwrap();
            assert!((o.sigma_sq - dist.variance_bound(&set)).abs() < 1e-12);
            let expected_var = prev.as_ref().map_or(0.0, |p| dist.variation(p, &set));
            assert!((o.variation_sq - expected_var).abs() < 1e-12);
            prev = Some(dist);
            hist.push(RoundRecord::new(t, x.clone(), o.xi.grad(&x), 0.0, &o));
        }
    }

    #[test]
    fn single_pass_exhaustion_is_an_error() {
        let mut env = RandomOrder::single_pass(vec![lin1(1.0), lin1(-1.0)], FeasibleSet::unit_ball(1)).unwrap();
        assert!(matches!(drive(&mut env, 3, 0), Err(Error::Protocol(_))));
    }

    #[test]
    fn multi_pass_reshuffles() {
        let mut env =
            RandomOrder::multi_pass(vec![lin1(1.0), lin1(-1.0), lin1(0.5)], 3, FeasibleSet::unit_ball(1)).unwrap();
        let out = drive(&mut env, 9, 4).unwrap();
        assert_eq!(env.current_pass(), 3);
        // each pass draws every member once
        for pass in out.chunks(3) {
            let mut vals: Vec<f64> = pass.iter().map(|o| o.xi.grad(&Point::zeros(1))[0]).collect();
            vals.sort_by(f64::total_cmp);
            assert_eq!(vals, vec![-1.0, 0.5, 1.0]);
        }
        assert!(matches!(drive(&mut env, 1, 0), Err(Error::Protocol(_))));
    }
}
