use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvConstants, Iid, RoundClock, RoundOutcome, Sea};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{Point, SymMatrix};
use crate::losses::{DistributionSpec, LossSpec};
use crate::metrics::RoundRecord;

const INTERVAL_TOL: f64 = 1e-12;

/// Gradient played by the Rademacher adversary at round `t` and point `x`:
/// zero on even rounds, `sign * G * x / (2b)` on odd rounds. The underlying
/// potential `G x^2 / (4b)` has derivative in `[G a / (2b), G / 2]` on
/// `[a, b]`.
pub fn rademacher_lb_gradient(t: usize, x: f64, sign: f64, a: f64, b: f64, g: f64) -> Result<f64> {
    if !(a - INTERVAL_TOL..=b + INTERVAL_TOL).contains(&x) {
        return Err(Error::contract(format!("point {x} outside [{a}, {b}]")));
    }
    if t.is_multiple_of(2) {
        return Ok(0.0);
    }
    Ok(sign * g * x / (2.0 * b))
}

/// Adaptive lower-bound adversary on `[a, b]`: on odd rounds it reads the
/// learner's point and plays a linear loss whose slope is a fresh
/// Rademacher sign times the derivative of `G x^2 / (4b)` there.
#[derive(Clone, Debug)]
pub struct RademacherLowerBound {
    a: f64,
    b: f64,
    g: f64,
    last: Option<LossSpec>,
    set: FeasibleSet,
    clock: RoundClock,
}

impl RademacherLowerBound {
    pub fn new(a: f64, b: f64, g: f64) -> Result<Self> {
        if !(1.0 <= a && a < b && a >= b / 2.0 && b.is_finite()) {
            return Err(Error::config(format!("interval [{a}, {b}] needs 1 <= a < b and a >= b/2")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::config(format!("gradient scale must be positive, got {g}")));
        }
        let set = FeasibleSet::cuboid(Point::new(vec![a])?, Point::new(vec![b])?)?;
        Ok(RademacherLowerBound { a, b, g, last: None, set, clock: RoundClock::default() })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

impl Sea for RademacherLowerBound {
    fn name(&self) -> &'static str {
        "lb_rademacher"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        x.check_dim(1)?;
        self.clock.advance(t, history.len())?;
        let sign = if t % 2 == 1 && rng.random::<bool>() { 1.0 } else { -1.0 };
        let slope = rademacher_lb_gradient(t, x[0], sign, self.a, self.b, self.g)?;
        let xi = LossSpec::linear(Point::new(vec![slope])?);
        let variation_sq = self.last.as_ref().map_or(0.0, |prev| (&xi.grad(x) - &prev.grad(x)).norm_sq());
        self.last = Some(xi.clone());
        Ok(RoundOutcome { xi, sigma_sq: 0.0, variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        self.last.clone().map(DistributionSpec::Dirac)
    }

    fn constants(&self) -> EnvConstants {
        EnvConstants { gradient_bound: self.g / 2.0, smoothness: 0.0, strong_convexity: 0.0 }
    }
}

/// `f(x, i) = x_i^2 / 2` with `i` uniform on `{0, .., d-1}`, on the unit
/// ball: small cumulative variance (about `T/d`) but consecutive samples
/// differ in almost every round.
#[derive(Clone, Debug)]
pub struct CoordinateQuadratic {
    inner: Iid,
}

impl CoordinateQuadratic {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("coordinate quadratic needs dimension >= 1"));
        }
        let pool: Vec<LossSpec> = (0..dim)
            .map(|i| LossSpec::Quadratic { a: Arc::new(SymMatrix::outer(&Point::basis(dim, i))), b: Point::zeros(dim) })
            .collect();
        let dist = DistributionSpec::finite_uniform(pool.into(), (0..dim).collect())?;
        Ok(CoordinateQuadratic { inner: Iid::new(dist, FeasibleSet::unit_ball(dim))? })
    }
}

impl Sea for CoordinateQuadratic {
    fn name(&self) -> &'static str {
        "coord_quadratic"
    }

    fn set(&self) -> &FeasibleSet {
        self.inner.set()
    }

    fn step(&mut self, t: usize, x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        self.inner.step(t, x, history, rng)
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        self.inner.distribution()
    }

    fn constants(&self) -> EnvConstants {
        EnvConstants { gradient_bound: 1.0, ..self.inner.constants() }
    }
}
