//! OFTRL, OFTL and OGD on one shared stream of noisy quadratic losses.
//!
//! Every learner sees the same sampled losses (each draws its stream from the
//! same key), which isolates the effect of the update rule.
//!
//! cargo run --example learner_comparison

use sea_oco::environments::{Iid, Sea};
use sea_oco::learners::{Learner, Ogd, Oftl, Oftrl, Regularizer, StepRule};
use sea_oco::losses::{DistributionSpec, LossSpec};
use sea_oco::metrics::{regret_curve, RoundRecord, Trace};
use sea_oco::rng::StreamKey;
use sea_oco::{FeasibleSet, Point, SymMatrix};

fn run(mut learner: Box<dyn Learner>, dist: &DistributionSpec, set: &FeasibleSet, horizon: usize) -> sea_oco::Result<f64> {
    let mut env = Iid::new(dist.clone(), set.clone())?;
    let key = StreamKey::new(0, 1, horizon);
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let x = learner.predict()?;
        let outcome = env.step(t, &x, &records, &mut key.round(t))?;
        let grad = outcome.xi.grad(&x);
        let eta = learner.eta();
        learner.observe(&grad)?;
        records.push(RoundRecord::new(t, x, grad, eta, &outcome));
    }
    let trace = Trace {
        records,
        env: env.name().into(),
        learner: learner.name().into(),
        seed: 1,
        horizon,
        convention: env.convention(),
        set: set.clone(),
    };
    // function-value regret is meaningful for all three on curved losses
    Ok(regret_curve(&trace, set)?.final_function_value())
}

fn main() -> sea_oco::Result<()> {
    let set = FeasibleSet::unit_ball(2);
    let base = LossSpec::quadratic(SymMatrix::identity(2), Point::new(vec![-0.5, 0.2])?)?;
    let dist = DistributionSpec::sphere_noise(base, 1.0)?;
    let (d, g, l) = (set.diameter(), dist.gradient_bound(&set), dist.smoothness());
    let mu = dist.strong_convexity();

    println!("{:>7} {:>10} {:>10} {:>10}", "T", "oftrl", "oftl", "ogd");
    for horizon in [100, 1_000, 10_000] {
        let oftrl = Oftrl::new(set.clone(), Oftrl::default_nu(d, g, l), Regularizer::Plain)?;
        let oftl = Oftl::new(set.clone(), mu)?;
        let ogd = Ogd::new(set.clone(), StepRule::InvSqrt { scale: 1.0, gradient_bound: g })?;
        println!(
            "{horizon:>7} {:>10.3} {:>10.3} {:>10.3}",
            run(Box::new(oftrl), &dist, &set, horizon)?,
            run(Box::new(oftl), &dist, &set, horizon)?,
            run(Box::new(ogd), &dist, &set, horizon)?,
        );
    }
    Ok(())
}
