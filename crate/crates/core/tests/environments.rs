//! Distributional and structural properties of the environments.

use sea_oco::environments::{
    corruption_schedule, CorruptedIid, RademacherLowerBound, RandomOrder, RoundOutcome, Sea, Shift, Switch,
};
use sea_oco::losses::{DistributionSpec, LossSpec};
use sea_oco::metrics::RoundRecord;
use sea_oco::rng::StreamKey;
use sea_oco::{FeasibleSet, Point};

fn p(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

/// Plays `horizon` rounds at a fixed point and returns every outcome.
fn play(env: &mut dyn Sea, x: &Point, horizon: usize, key: StreamKey) -> Vec<RoundOutcome> {
    let mut history = Vec::with_capacity(horizon);
    let mut outcomes = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let out = env.step(t, x, &history, &mut key.round(t)).unwrap();
        history.push(RoundRecord::new(t, x.clone(), out.xi.grad(x), 1.0, &out));
        outcomes.push(out);
    }
    outcomes
}

#[test]
fn rom_orders_are_exchangeable() {
    const RUNS: usize = 10_000;
    let pool: Vec<LossSpec> = (0..4).map(|i| LossSpec::linear(p(&[i as f64, 1.0]))).collect();
    let x = Point::zeros(2);
    let mut counts = std::collections::HashMap::new();
    for run in 0..RUNS {
        let mut env = RandomOrder::single_pass(pool.clone(), FeasibleSet::unit_ball(2)).unwrap();
        let order: Vec<usize> = play(&mut env, &x, 4, StreamKey::new(3, run as u64, 4))
            .iter()
            .map(|o| o.xi.grad(&x)[0] as usize)
            .collect();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2, 3], "every loss is drawn once");
        *counts.entry(order).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 24);
    let q = 1.0 / 24.0;
    let se = (q * (1.0 - q) / RUNS as f64).sqrt();
    for (order, n) in counts {
        let freq = n as f64 / RUNS as f64;
        assert!((freq - q).abs() <= 3.0 * se, "{order:?} has frequency {freq}");
    }
}

#[test]
fn rom_variance_grows_at_most_like_t_over_remaining() {
    let pool: Vec<LossSpec> = (0..50)
        .map(|i| {
            let th = i as f64 * 0.7;
            LossSpec::linear(p(&[th.cos() + 0.3, th.sin()]))
        })
        .collect();
    let set = FeasibleSet::unit_ball(2);
    for seed in 0..20 {
        let mut env = RandomOrder::single_pass(pool.clone(), set.clone()).unwrap();
        let sigma1_sq = env.pool_variance();
        assert!(env.pool_variance_upper() >= sigma1_sq - 1e-12);
        let outs = play(&mut env, &Point::zeros(2), 50, StreamKey::new(0, seed, 50));
        for (i, o) in outs.iter().enumerate() {
            let t = i as f64 + 1.0;
            assert!(o.sigma_sq <= 50.0 / (50.0 - t + 1.0) * sigma1_sq * (1.0 + 1e-9));
        }
        assert_eq!(outs.last().unwrap().sigma_sq, 0.0, "the last draw is deterministic");
    }
}

#[test]
fn shift_variation_never_exceeds_epsilon() {
    for eps in [1e-6, 1e-3, 0.1, 4.0] {
        let mut env = Shift::new(LossSpec::linear(p(&[1.0, 0.5])), 0.3, eps, FeasibleSet::unit_ball(2)).unwrap();
        let outs = play(&mut env, &Point::zeros(2), 300, StreamKey::new(0, 1, 300));
        assert_eq!(outs[0].variation_sq, 0.0);
        for o in &outs[1..] {
            assert!(o.variation_sq <= eps, "{} > {eps}", o.variation_sq);
            assert!(o.variation_sq > 0.0);
            assert!((o.sigma_sq - 0.09).abs() < 1e-12);
        }
    }
}

#[test]
fn switch_variation_is_positive_exactly_at_switches() {
    let set = FeasibleSet::unit_ball(2);
    let dists: Vec<DistributionSpec> = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
        .iter()
        .map(|m| DistributionSpec::sphere_noise(LossSpec::linear(p(m)), 0.5).unwrap())
        .collect();
    let switches = vec![10, 37, 90];
    let mut env = Switch::new(dists, switches.clone(), set).unwrap();
    let outs = play(&mut env, &Point::zeros(2), 120, StreamKey::new(0, 0, 120));
    let jumps: Vec<usize> = outs.iter().enumerate().filter(|(_, o)| o.variation_sq > 0.0).map(|(i, _)| i + 1).collect();
    assert_eq!(jumps, switches);
    // adjacent means at right angles on the unit ball: sup ||m - m'||^2 = 2
    for t in &jumps {
        assert!((outs[t - 1].variation_sq - 2.0).abs() < 1e-9);
    }
}

#[test]
fn corruption_budget_is_spent_and_enforced() {
    let dir = p(&[0.0, 1.0]);
    let schedule = corruption_schedule(10.0, 1.0, &dir).unwrap();
    assert_eq!(schedule.len(), 10);
    let total: f64 = schedule.iter().map(Point::norm).sum();
    assert!((total - 10.0).abs() < 1e-12);
    let base = DistributionSpec::sphere_noise(LossSpec::linear(p(&[1.0, 0.0])), 1.0).unwrap();
    let set = FeasibleSet::unit_ball(2);
    assert!(CorruptedIid::new(base.clone(), schedule.clone(), 10.0, set.clone()).is_ok());
    assert!(CorruptedIid::new(base.clone(), schedule.clone(), 9.0, set.clone()).is_err());

    let mut env = CorruptedIid::new(base, schedule, 10.0, set).unwrap();
    let outs = play(&mut env, &Point::zeros(2), 15, StreamKey::new(0, 0, 15));
    // the first corruption is charged against a zero baseline
    assert!((outs[0].variation_sq - 1.0).abs() < 1e-12);
    assert!(outs[1..10].iter().all(|o| (o.variation_sq - 4.0).abs() < 1e-12));
    assert!((outs[10].variation_sq - 1.0).abs() < 1e-12);
    assert!(outs[11..].iter().all(|o| o.variation_sq == 0.0));
}

#[test]
fn rademacher_gradients_stay_in_range() {
    let (a, b, g) = (1.0, 2.0, 1.5);
    let mut env = RademacherLowerBound::new(a, b, g).unwrap();
    let set = env.set().clone();
    let mut history = Vec::new();
    let key = StreamKey::new(0, 4, 400);
    let (mut plus, mut minus) = (0, 0);
    for t in 1..=400 {
        let x = p(&[a + (b - a) * ((t as f64 * 0.37).sin() * 0.5 + 0.5)]);
        assert!(set.contains(&x, 0.0));
        let out = env.step(t, &x, &history, &mut key.round(t)).unwrap();
        let grad = out.xi.grad(&x)[0];
        if t % 2 == 0 {
            assert_eq!(grad, 0.0);
        } else {
            assert!(grad.abs() >= g * a / (2.0 * b) - 1e-12 && grad.abs() <= g / 2.0 + 1e-12);
            if grad > 0.0 {
                plus += 1
            } else {
                minus += 1
            }
        }
        history.push(RoundRecord::new(t, x.clone(), out.xi.grad(&x), 1.0, &out));
    }
    assert!(plus > 60 && minus > 60, "signs look unbalanced: {plus} vs {minus}");
    assert!(RademacherLowerBound::new(1.0, 3.0, 1.0).is_err(), "needs a >= b/2");
    assert!(RademacherLowerBound::new(0.5, 0.8, 1.0).is_err(), "needs a >= 1");
}

#[test]
fn rounds_must_advance_one_at_a_time() {
    let mut env = Shift::new(LossSpec::linear(p(&[1.0, 0.0])), 0.0, 0.01, FeasibleSet::unit_ball(2)).unwrap();
    let x = Point::zeros(2);
    let key = StreamKey::new(0, 0, 3);
    assert!(env.step(2, &x, &[], &mut key.round(2)).is_err());
}
