//! Stochastically extended adversaries.
//!
//! Each round the environment sees the learner's point `x_t` and the full
//! history, picks a distribution `D_t`, and reveals one sample drawn from it
//! together with the exact variance `sigma_t^2` of `D_t` and the exact
//! variation `Sigma_t^2 = sup_x ||grad F^t(x) - grad F^{t-1}(x)||^2`.

mod drift;
mod iid;
mod lower_bound;
mod rom;
mod script;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use drift::{Shift, Switch};
pub use iid::{corruption_schedule, CorruptedIid, Iid};
pub use lower_bound::{rademacher_lb_gradient, CoordinateQuadratic, RademacherLowerBound};
pub use rom::RandomOrder;
pub use script::AdversarialScript;

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;
use crate::losses::{DistributionSpec, LossSpec};
use crate::metrics::RoundRecord;

/// How the variation of round 1 is charged, given that `F^0` is undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationConvention {
    /// `F^0 := F^1`, so round 1 contributes nothing.
    RepeatFirst,
    /// The adversarial part starts from zero (`c_0 = 0`), so round 1 is
    /// charged `||grad c_1||^2`.
    ZeroBaseline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    /// The realized loss `f(., xi_t)`.
    pub xi: LossSpec,
    pub sigma_sq: f64,
    pub variation_sq: f64,
}

/// Curvature and gradient constants an environment guarantees for every
/// round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConstants {
    /// Almost-sure bound on sampled gradient norms over the set.
    pub gradient_bound: f64,
    /// Smoothness of every mean loss `F^t`.
    pub smoothness: f64,
    /// Strong convexity of every mean loss `F^t` (0 if merely convex).
    pub strong_convexity: f64,
}

/// A stochastically extended adversary.
pub trait Sea: Send {
    fn name(&self) -> &'static str;

    fn set(&self) -> &FeasibleSet;

    /// Plays round `t` (1-based). `history` holds rounds `1..t`; `x_t` is the
    /// learner's point for this round.
    fn step(
        &mut self,
        t: usize,
        x_t: &Point,
        history: &[RoundRecord],
        rng: &mut ChaCha8Rng,
    ) -> Result<RoundOutcome>;

    /// The distribution used in the most recent round.
    fn distribution(&self) -> Option<DistributionSpec>;

    fn constants(&self) -> EnvConstants;

    fn convention(&self) -> VariationConvention {
        VariationConvention::RepeatFirst
    }
}

/// Tracks the round counter and rejects skipped or repeated rounds.
#[derive(Clone, Debug, Default)]
pub(crate) struct RoundClock {
    last: usize,
}

impl RoundClock {
    pub(crate) fn advance(&mut self, t: usize, history_len: usize) -> Result<()> {
        if t != self.last + 1 {
            return Err(Error::protocol(format!("round {t} requested after round {}", self.last)));
        }
        if history_len != t - 1 {
            return Err(Error::protocol(format!(
                "round {t} needs a history of {} rounds, got {history_len}",
                t - 1
            )));
        }
        self.last = t;
        Ok(())
    }

    pub(crate) fn last(&self) -> usize {
        self.last
    }
}
