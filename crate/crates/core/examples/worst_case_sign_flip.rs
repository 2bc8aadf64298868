//! OFTRL against an alternating-sign adversary, driven round by round.
//!
//! The learner is tuned with the worst-case parameter `nu = 2DG`, so the
//! regret must stay below `3 sqrt(2) DG sqrt(T) + 4DG` on every run.
//!
//! cargo run --example worst_case_sign_flip

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sea_oco::environments::{AdversarialScript, Sea};
use sea_oco::learners::{Learner, Oftrl, Regularizer};
use sea_oco::metrics::{regret_curve, worst_case_bound, RoundRecord, Trace};
use sea_oco::{FeasibleSet, Point};

fn main() -> sea_oco::Result<()> {
    let set = FeasibleSet::unit_ball(2);
    let direction = Point::new(vec![1.0, 0.0])?;
    for horizon in [10, 100, 1_000, 10_000] {
        let mut env = AdversarialScript::sign_flip(&direction, 1.0, horizon, set.clone())?;
        let g = env.constants().gradient_bound;
        let mut learner = Oftrl::new(set.clone(), Oftrl::worst_case_nu(set.diameter(), g), Regularizer::Plain)?;

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut records: Vec<RoundRecord> = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let x = learner.predict()?;
            let outcome = env.step(t, &x, &records, &mut rng)?;
            let grad = outcome.xi.grad(&x);
            let eta = learner.eta();
            learner.observe(&grad)?;
            records.push(RoundRecord::new(t, x, grad, eta, &outcome));
        }

        let trace = Trace {
            records,
            env: env.name().into(),
            learner: learner.name().into(),
            seed: 0,
            horizon,
            convention: env.convention(),
            set: set.clone(),
        };
        let regret = regret_curve(&trace, &set)?.final_linearized();
        let bound = worst_case_bound(set.diameter(), g, horizon);
        println!("T={horizon:>6}  regret {regret:>8.3}  bound {bound:>9.3}");
    }
    Ok(())
}
