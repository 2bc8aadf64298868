use rand_chacha::ChaCha8Rng;

use super::{EnvConstants, RoundClock, RoundOutcome, Sea, VariationConvention};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;
use crate::losses::DistributionSpec;
use crate::metrics::RoundRecord;

/// Same distribution every round.
#[derive(Clone, Debug)]
pub struct Iid {
    dist: DistributionSpec,
    sigma_sq: f64,
    set: FeasibleSet,
    clock: RoundClock,
}

impl Iid {
    pub fn new(dist: DistributionSpec, set: FeasibleSet) -> Result<Self> {
        if dist.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: dist.dim() });
        }
        let sigma_sq = dist.variance_bound(&set);
        Ok(Iid { dist, sigma_sq, set, clock: RoundClock::default() })
    }
}

impl Sea for Iid {
    fn name(&self) -> &'static str {
        "iid"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        self.clock.advance(t, history.len())?;
        Ok(RoundOutcome { xi: self.dist.sample(rng), sigma_sq: self.sigma_sq, variation_sq: 0.0 })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        (self.clock.last() > 0).then(|| self.dist.clone())
    }

    fn constants(&self) -> EnvConstants {
        EnvConstants {
            gradient_bound: self.dist.gradient_bound(&self.set),
            smoothness: self.dist.smoothness(),
            strong_convexity: self.dist.strong_convexity(),
        }
    }
}

/// Budget-exact alternating corruption schedule: `ceil(budget / gamma)`
/// rounds of norm `gamma` (the last one trimmed so the norms sum to exactly
/// `budget`), with signs alternating `+, -, +, ...` along `direction`.
pub fn corruption_schedule(budget: f64, gamma: f64, direction: &Point) -> Result<Vec<Point>> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::config(format!("corruption budget must be non-negative, got {budget}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("corruption level must be positive, got {gamma}")));
    }
    let n = direction.norm();
    if n == 0.0 {
        return Err(Error::config("corruption direction must be nonzero"));
    }
    let unit = direction.scaled(1.0 / n);
    let rounds = (budget / gamma).ceil() as usize;
    Ok((0..rounds)
        .map(|k| {
            let norm = if k + 1 == rounds { budget - gamma * k as f64 } else { gamma };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            unit.scaled(sign * norm)
        })
        .collect())
}

/// An i.i.d. source plus adversarial linear corruptions `c_t` with
/// `sum_t ||grad c_t|| <= C`.
#[derive(Clone, Debug)]
pub struct CorruptedIid {
    base: DistributionSpec,
    corruptions: Vec<Point>,
    budget: f64,
    sigma_sq: f64,
    set: FeasibleSet,
    clock: RoundClock,
}

impl CorruptedIid {
    /// Rejects corruption lists whose total norm exceeds `budget`.
    pub fn new(base: DistributionSpec, corruptions: Vec<Point>, budget: f64, set: FeasibleSet) -> Result<Self> {
        if base.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: base.dim() });
        }
        if let Some(c) = corruptions.iter().find(|c| c.dim() != set.dim()) {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: c.dim() });
        }
        let spent: f64 = corruptions.iter().map(Point::norm).sum();
        if spent > budget * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::config(format!("corruptions total {spent} exceed budget {budget}")));
        }
        let sigma_sq = base.variance_bound(&set);
        Ok(CorruptedIid { base, corruptions, budget, sigma_sq, set, clock: RoundClock::default() })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    fn corruption(&self, t: usize) -> Point {
        self.corruptions.get(t.wrapping_sub(1)).cloned().unwrap_or_else(|| Point::zeros(self.set.dim()))
    }
}

impl Sea for CorruptedIid {
    fn name(&self) -> &'static str {
        "corrupted"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        self.clock.advance(t, history.len())?;
        let c = self.corruption(t);
        // c_0 = 0, so round 1 pays ||c_1||^2
        let prev = if t == 1 { Point::zeros(self.set.dim()) } else { self.corruption(t - 1) };
        let variation_sq = (&c - &prev).norm_sq();
        let xi = self.base.sample(rng).shifted(&c);
        Ok(RoundOutcome { xi, sigma_sq: self.sigma_sq, variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        let t = self.clock.last();
        (t > 0).then(|| DistributionSpec::Shifted { base: Box::new(self.base.clone()), corruption: self.corruption(t) })
    }

    fn constants(&self) -> EnvConstants {
        let worst = self.corruptions.iter().map(Point::norm).fold(0.0, f64::max);
        EnvConstants {
            gradient_bound: self.base.gradient_bound(&self.set) + worst,
            smoothness: self.base.smoothness(),
            strong_convexity: self.base.strong_convexity(),
        }
    }

    fn convention(&self) -> VariationConvention {
        VariationConvention::ZeroBaseline
    }
}
