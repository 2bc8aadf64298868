use rand_chacha::ChaCha8Rng;

use super::{EnvConstants, RoundClock, RoundOutcome, Sea};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;
use crate::losses::{DistributionSpec, LossSpec};
use crate::metrics::RoundRecord;

/// Fully adversarial: a fixed script of losses, one Dirac per round.
#[derive(Clone, Debug)]
pub struct AdversarialScript {
    losses: Vec<LossSpec>,
    set: FeasibleSet,
    clock: RoundClock,
}

impl AdversarialScript {
    pub fn new(losses: Vec<LossSpec>, set: FeasibleSet) -> Result<Self> {
        if let Some(l) = losses.iter().find(|l| l.dim() != set.dim()) {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: l.dim() });
        }
        Ok(AdversarialScript { losses, set, clock: RoundClock::default() })
    }

    /// `g_t = (-1)^(t+1) * scale * direction` for `t = 1..=horizon`.
    pub fn sign_flip(direction: &Point, scale: f64, horizon: usize, set: FeasibleSet) -> Result<Self> {
        let n = direction.norm();
        if n == 0.0 {
            return Err(Error::config("sign-flip direction must be nonzero"));
        }
        let unit = direction.scaled(scale / n);
        let losses = (1..=horizon)
            .map(|t| LossSpec::linear(if t % 2 == 1 { unit.clone() } else { -&unit }))
            .collect();
        Self::new(losses, set)
    }

    /// Cycles through `gradients` for `horizon` rounds.
    pub fn cycle(gradients: &[Point], horizon: usize, set: FeasibleSet) -> Result<Self> {
        if gradients.is_empty() {
            return Err(Error::config("cyclic script needs at least one gradient"));
        }
        let losses = (0..horizon).map(|t| LossSpec::linear(gradients[t % gradients.len()].clone())).collect();
        Self::new(losses, set)
    }

    pub fn losses(&self) -> &[LossSpec] {
        &self.losses
    }
}

impl Sea for AdversarialScript {
    fn name(&self) -> &'static str {
        "adversarial"
    }

    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn step(&mut self, t: usize, _x: &Point, history: &[RoundRecord], _rng: &mut ChaCha8Rng) -> Result<RoundOutcome> {
        if t > self.losses.len() {
            return Err(Error::protocol(format!("script has {} rounds, round {t} requested", self.losses.len())));
        }
        self.clock.advance(t, history.len())?;
        let xi = self.losses[t - 1].clone();
        let variation_sq = if t == 1 {
            0.0
        } else {
            xi.field().sub(&self.losses[t - 2].field()).sup_norm_sq(&self.set)
        };
        Ok(RoundOutcome { xi, sigma_sq: 0.0, variation_sq })
    }

    fn distribution(&self) -> Option<DistributionSpec> {
        let t = self.clock.last();
        (t > 0).then(|| DistributionSpec::Dirac(self.losses[t - 1].clone()))
    }

    fn constants(&self) -> EnvConstants {
        let gradient_bound =
            self.losses.iter().map(|l| l.field().sup_norm_sq(&self.set).sqrt()).fold(0.0, f64::max);
        let smoothness = self
            .losses
            .iter()
            .map(|l| l.curvature().map_or(0.0, |a| a.lambda_max_psd()))
            .fold(0.0, f64::max);
        let strong_convexity = self
            .losses
            .iter()
            .map(|l| l.curvature().map_or(0.0, |a| a.lambda_min_psd().max(0.0)))
            .fold(f64::INFINITY, f64::min);
        EnvConstants {
            gradient_bound,
            smoothness,
            strong_convexity: if strong_convexity.is_finite() { strong_convexity } else { 0.0 },
        }
    }
}
