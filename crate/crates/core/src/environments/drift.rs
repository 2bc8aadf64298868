use rand_chacha::ChaCha8Rng;

use super::{EnvConstants, RoundClock, RoundOutcome, Sea};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;
use crate::losses::{DistributionSpec, LossSpec};
use crate::metrics::RoundRecord;

/// Bounded distribution shift: sphere noise around a loss whose linear term
/// rotates in the plane of the first two coordinates by a fixed angle per
/// round, so consecutive mean gradients differ by a chord of squared length
/// at most `epsilon`.
#[derive(Clone, Debug)]
pub struct Shift {
    start: LossSpec,
    sigma: f64,
    epsilon: f64,
    omega: f64,
    current: Option<DistributionSpec>,
    set: FeasibleSet,
    clock: RoundClock,
}

/// Rotates the linear term of `loss` by `angle` in the (0, 1) plane.
fn rotate(loss: &LossSpec, angle: f64) -> LossSpec {
    let turn = |v: &Point| {
        let mut c = v.as_slice().to_vec();
        let (s, co) = angle.sin_cos();
        let (x, y) = (c[0], c[1]);
        c[0] = co * x - s * y;
        c[1] = s * x + co * y;
        Point::from_vec(c)
    };
    match loss {
        LossSpec::Linear { g } => LossSpec::Linear { g: turn(g) },
        LossSpec::Quadratic { a, b } => LossSpec::Quadratic { a: a.clone(), b: turn(b) },
    }
}

fn linear_term(loss: &LossSpec) -> &Point {
    match loss {
        LossSpec::Linear { g } => g,
        LossSpec::Quadratic { b, .. } => b,
    }
}

impl Shift {
    pub fn new(start: LossSpec, sigma: f64, epsilon: f64, set: FeasibleSet) -> Result<Self> {
        if start.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: start.dim() });
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("drift must be non-negative, got {epsilon}")));
        }
        DistributionSpec::sphere_noise(start.clone(), sigma)?;
        let v = linear_term(&start);
        let radius = if v.dim() >= 2 { v[0].hypot(v[1]) } else { 0.0 };
        if epsilon > 0.0 && set.dim() < 2 {
            return Err(Error::config("a drifting mean needs at least two dimensions"));
        }
        // chord = 2 r sin(omega / 2); the shrink keeps chord^2 <= epsilon after rounding
        let omega = if radius > 0.0 && epsilon > 0.0 {
            2.0 * ((epsilon.sqrt() / (2.0 * radius)).min(1.0) * (1.0 - 1e-9)).asin()
        } else {
            0.0
        };
        Ok(Shift { start, sigma, epsilon, omega, current: None, set, clock: RoundClock::default() })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Rotation angle applied each round.
    pub fn angle(&self) -> f64 {
        self.omega
    }
}

impl Sea for Shift {
    fn name(&self) -> &'static str {
        "shift"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        self.clock.advance(t, history.len())?;
        let loss = rotate(&self.start, self.omega * (t - 1) as f64);
        let dist = DistributionSpec::SphereNoise { base: loss, sigma: self.sigma };
        let variation_sq = self.current.as_ref().map_or(0.0, |prev| dist.variation(prev, &self.set));
        let xi = dist.sample(rng);
        self.current = Some(dist);
        Ok(RoundOutcome { xi, sigma_sq: self.sigma * self.sigma, variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        self.current.clone()
    }

    fn constants(&self) -> EnvConstants {
        // rotation preserves ||b||, so sup ||A x|| + ||b|| + sigma bounds every round
        let dist = DistributionSpec::SphereNoise { base: self.start.clone(), sigma: self.sigma };
        let curved = self.start.curvature().map_or(0.0, |a| {
            LossSpec::Quadratic { a: std::sync::Arc::new(a.clone()), b: Point::zeros(self.set.dim()) }
                .field()
                .sup_norm_sq(&self.set)
                .sqrt()
        });
        EnvConstants {
            gradient_bound: curved + linear_term(&self.start).norm() + self.sigma,
            smoothness: dist.smoothness(),
            strong_convexity: dist.strong_convexity(),
        }
    }
}

/// Piecewise-stationary source: `dists[k]` is active from round
/// `switches[k-1]` (round 1 for `k = 0`) until the next switch.
#[derive(Clone, Debug)]
pub struct Switch {
    dists: Vec<DistributionSpec>,
    switches: Vec<usize>,
    variances: Vec<f64>,
    jumps: Vec<f64>,
    active: usize,
    set: FeasibleSet,
    clock: RoundClock,
}

impl Switch {
    pub fn new(dists: Vec<DistributionSpec>, switches: Vec<usize>, set: FeasibleSet) -> Result<Self> {
        if dists.len() != switches.len() + 1 {
            return Err(Error::config(format!(
                "{} switch rounds need {} distributions, got {}",
                switches.len(),
                switches.len() + 1,
                dists.len()
            )));
        }
        if let Some(d) = dists.iter().find(|d| d.dim() != set.dim()) {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: d.dim() });
        }
        if switches.first().is_some_and(|&s| s < 2) || switches.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("switch rounds must be strictly increasing and at least 2"));
        }
        let jumps: Vec<f64> = dists.windows(2).map(|w| w[1].variation(&w[0], &set)).collect();
        if let Some(k) = jumps.iter().position(|&j| j <= 0.0) {
            return Err(Error::config(format!("switch {} does not change the mean gradient", k + 1)));
        }
        let variances = dists.iter().map(|d| d.variance_bound(&set)).collect();
        Ok(Switch { dists, switches, variances, jumps, active: 0, set, clock: RoundClock::default() })
    }

    pub fn switches(&self) -> &[usize] {
        &self.switches
    }
}

impl Sea for Switch {
    fn name(&self) -> &'static str {
        "switch"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        self.clock.advance(t, history.len())?;
        let mut variation_sq = 0.0;
        if self.switches.get(self.active) == Some(&t) {
            variation_sq = self.jumps[self.active];
            self.active += 1;
        }
        let xi = self.dists[self.active].sample(rng);
        Ok(RoundOutcome { xi, sigma_sq: self.variances[self.active], variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        (self.clock.last() > 0).then(|| self.dists[self.active].clone())
    }

    fn constants(&self) -> EnvConstants {
        EnvConstants {
            gradient_bound: self.dists.iter().map(|d| d.gradient_bound(&self.set)).fold(0.0, f64::max),
            smoothness: self.dists.iter().map(DistributionSpec::smoothness).fold(0.0, f64::max),
            strong_convexity: self.dists.iter().map(DistributionSpec::strong_convexity).fold(f64::INFINITY, f64::min),
        }
    }
}
