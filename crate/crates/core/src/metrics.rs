//! Regret, variance/variation aggregates, diagnostics and bound evaluators.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::environments::{RoundOutcome, VariationConvention};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{Point, SymMatrix};
use crate::losses::{DistributionSpec, LossSpec};

/// One round of play.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Point,
    pub g: Point,
    /// Step size in force this round (0 for learners without one).
    pub eta: f64,
    pub sigma_sq: f64,
    pub variation_sq: f64,
    /// `f(x_t, xi_t)`.
    pub loss_value: f64,
    pub xi: LossSpec,
}

impl RoundRecord {
    pub fn new(t: usize, x: Point, g: Point, eta: f64, outcome: &RoundOutcome) -> Self {
        let loss_value = outcome.xi.value(&x);
        RoundRecord {
            t,
            x,
            g,
            eta,
            sigma_sq: outcome.sigma_sq,
            variation_sq: outcome.variation_sq,
            loss_value,
            xi: outcome.xi.clone(),
        }
    }
}

/// A complete trial.
#[derive(Clone, Debug)]
pub struct Trace {
    pub records: Vec<RoundRecord>,
    pub env: String,
    pub learner: String,
    pub seed: u64,
    pub horizon: usize,
    pub convention: VariationConvention,
    pub set: FeasibleSet,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn gradients(&self) -> Vec<Point> {
        self.records.iter().map(|r| r.g.clone()).collect()
    }

    pub fn losses(&self) -> Vec<LossSpec> {
        self.records.iter().map(|r| r.xi.clone()).collect()
    }
}

/// `argmin_{u in set} sum_t <g_t, u>`.
pub fn best_comparator(grads: &[Point], set: &FeasibleSet) -> Result<Point> {
    if grads.is_empty() {
        return Err(Error::contract("comparator needs at least one gradient"));
    }
    let mut sum = Point::zeros(set.dim());
    for g in grads {
        g.check_dim(set.dim())?;
        sum.axpy(1.0, g);
    }
    set.linear_minimize(&sum)
}

/// `argmin_{u in set} sum_t f_t(u)` for the realized losses.
///
/// Exact when the summed curvature is zero or a multiple of the identity;
/// otherwise accelerated projected gradient to a relative change of 1e-13.
pub fn best_fixed_point(losses: &[LossSpec], set: &FeasibleSet) -> Result<Point> {
    if losses.is_empty() {
        return Err(Error::contract("comparator needs at least one loss"));
    }
    let d = set.dim();
    let mut lin = Point::zeros(d);
    let mut curv: Option<SymMatrix> = None;
    let mut last: Option<&Arc<SymMatrix>> = None;
    let mut run = 0usize;
    let flush = |curv: &mut Option<SymMatrix>, a: &SymMatrix, k: usize| {
        let add = a.scaled(k as f64);
        *curv = Some(match curv.take() {
            None => add,
            Some(c) => c.add(&add),
        });
    };
    for l in losses {
        if l.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: l.dim() });
        }
        match l {
            LossSpec::Linear { g } => lin.axpy(1.0, g),
            LossSpec::Quadratic { a, b } => {
                lin.axpy(1.0, b);
                // runs of a shared matrix are summed by count
                match last {
                    Some(prev) if Arc::ptr_eq(prev, a) || **prev == **a => run += 1,
                    _ => {
                        if let Some(prev) = last {
                            flush(&mut curv, prev, run);
                        }
                        last = Some(a);
                        run = 1;
                    }
                }
            }
        }
    }
    if let Some(prev) = last {
        flush(&mut curv, prev, run);
    }
    let q = match curv {
        Some(q) if !q.is_zero() => q,
        _ => return set.linear_minimize(&lin),
    };
    if let Some(s) = q.as_scaled_identity() {
        return set.reg_argmin(&lin, s / 2.0);
    }
    let step = 1.0 / q.lambda_max_psd();
    let grad = |u: &Point| &q.mul_vec(u) + &lin;
    let mut x = set.center();
    let mut y = x.clone();
    let mut k = 1.0f64;
    for _ in 0..100_000 {
        let mut z = y.clone();
        z.axpy(-step, &grad(&y));
        let next = set.project(&z)?;
        let k_next = (1.0 + (1.0 + 4.0 * k * k).sqrt()) / 2.0;
        let moved = next.distance(&x);
        y = &next + &(&next - &x).scaled((k - 1.0) / k_next);
        x = next;
        k = k_next;
        if moved <= 1e-13 * (1.0 + x.norm()) {
            break;
        }
    }
    Ok(x)
}

/// Cumulative regret curves against fixed comparators chosen over the full
/// horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretCurves {
    /// Minimizer of the summed linearized losses.
    pub comparator: Point,
    /// `sum_{t <= T'} <g_t, x_t - u*>`
    pub linearized: Vec<f64>,
    /// Minimizer of the summed realized losses.
    pub value_comparator: Point,
    /// `sum_{t <= T'} f_t(x_t) - f_t(u*)`
    pub function_value: Vec<f64>,
}

impl RegretCurves {
    pub fn final_linearized(&self) -> f64 {
        self.linearized.last().copied().unwrap_or(0.0)
    }

    pub fn final_function_value(&self) -> f64 {
        self.function_value.last().copied().unwrap_or(0.0)
    }
}

pub fn regret_curve(trace: &Trace, set: &FeasibleSet) -> Result<RegretCurves> {
    if trace.is_empty() {
        return Err(Error::contract("regret of an empty trace"));
    }
    let comparator = best_comparator(&trace.gradients(), set)?;
    let value_comparator = best_fixed_point(&trace.losses(), set)?;
    let mut linearized = Vec::with_capacity(trace.len());
    let mut function_value = Vec::with_capacity(trace.len());
    let (mut lin, mut val) = (0.0, 0.0);
    for r in &trace.records {
        lin += r.g.dot(&r.x) - r.g.dot(&comparator);
        val += r.loss_value - r.xi.value(&value_comparator);
        linearized.push(lin);
        function_value.push(val);
    }
    Ok(RegretCurves { comparator, linearized, value_comparator, function_value })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CumAggregates {
    pub sigma_sq_cum: f64,
    #[serde(rename = "Sigma_sq_cum")]
    pub variation_sq_cum: f64,
    pub sigma_bar: f64,
    #[serde(rename = "Sigma_bar")]
    pub variation_bar: f64,
    pub sigma_max: f64,
    #[serde(rename = "Sigma_max")]
    pub variation_max: f64,
}

pub fn cum_aggregates(trace: &Trace) -> Result<CumAggregates> {
    if trace.is_empty() {
        return Err(Error::contract("aggregates of an empty trace"));
    }
    let n = trace.len() as f64;
    let mut a = CumAggregates::default();
    let (mut smax, mut vmax) = (0.0f64, 0.0f64);
    for r in &trace.records {
        a.sigma_sq_cum += r.sigma_sq;
        a.variation_sq_cum += r.variation_sq;
        smax = smax.max(r.sigma_sq);
        vmax = vmax.max(r.variation_sq);
    }
    a.sigma_bar = (a.sigma_sq_cum / n).sqrt();
    a.variation_bar = (a.variation_sq_cum / n).sqrt();
    a.sigma_max = smax.sqrt();
    a.variation_max = vmax.sqrt();
    Ok(a)
}

/// Problem constants entering the regret bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub diameter: f64,
    pub gradient_bound: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
}

/// Adaptive OFTRL bound:
/// `D (6 sigma_bar + 3 sqrt2 Sigma_bar) sqrt T + (3 sqrt2 / 2) D G + nu
///  + (4 D^2 G^2 + 9 L^2 D^4) / nu`.
pub fn theorem1_bound(c: &BoundConstants, nu: f64, sigma_bar: f64, variation_bar: f64, horizon: usize) -> f64 {
    let (d, g, l) = (c.diameter, c.gradient_bound, c.smoothness);
    let s2 = std::f64::consts::SQRT_2;
    d * (6.0 * sigma_bar + 3.0 * s2 * variation_bar) * (horizon as f64).sqrt()
        + 1.5 * s2 * d * g
        + nu
        + (4.0 * d * d * g * g + 9.0 * l * l * d.powi(4)) / nu
}

/// Deterministic bound for `nu = 2DG`: `3 sqrt2 D G sqrt T + 4 D G`.
pub fn worst_case_bound(diameter: f64, gradient_bound: f64, horizon: usize) -> f64 {
    let dg = diameter * gradient_bound;
    3.0 * std::f64::consts::SQRT_2 * dg * (horizon as f64).sqrt() + 4.0 * dg
}

/// Whether the strongly convex bound carries the trailing `+ G D`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdTerm {
    #[default]
    Included,
    Omitted,
}

/// OFTL bound:
/// `(8 sigma_max^2 + 4 Sigma_max^2) log T / mu + (4 D^2 L^2 / mu) log(1 + 16 L / mu) [+ G D]`.
///
/// Requires `mu > 0`; returns NaN otherwise.
pub fn theorem3_bound(c: &BoundConstants, sigma_max: f64, variation_max: f64, horizon: usize, mode: GdTerm) -> f64 {
    let (mu, l, d, g) = (c.strong_convexity, c.smoothness, c.diameter, c.gradient_bound);
    if mu <= 0.0 {
        return f64::NAN;
    }
    let lead = (8.0 * sigma_max * sigma_max + 4.0 * variation_max * variation_max) * (horizon as f64).ln() / mu;
    let curvature = 4.0 * d * d * l * l / mu * (1.0 + 16.0 * l / mu).ln();
    let tail = match mode {
        GdTerm::Included => g * d,
        GdTerm::Omitted => 0.0,
    };
    lead + curvature + tail
}

/// Empirical-variance and path-variation diagnostics of a loss sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `sum_t ||grad f_t(p) - mean_s grad f_s(p)||^2` at the probe `p`.
    pub var_t: f64,
    /// Same sum maximized over the set.
    pub var_t_sup: f64,
    /// `sum_{t >= 2} sup_x ||grad f_t(x) - grad f_{t-1}(x)||^2`.
    pub d2: f64,
    /// True when every deviation is constant in `x`, so `var_t` does not
    /// depend on the probe.
    pub exact: bool,
}

/// `probe` defaults to the set center.
pub fn diagnostics_var_d2(losses: &[LossSpec], probe: Option<&Point>, set: &FeasibleSet) -> Result<Diagnostics> {
    if losses.is_empty() {
        return Err(Error::contract("diagnostics need at least one loss"));
    }
    let probe = probe.cloned().unwrap_or_else(|| set.center());
    probe.check_dim(set.dim())?;
    let pool: Arc<[LossSpec]> = losses.to_vec().into();
    let n = losses.len();
    let dist = DistributionSpec::finite_uniform(Arc::clone(&pool), (0..n).collect())?;
    let mean = dist.mean_field();
    let mean_at = mean.eval(&probe);
    let var_t = losses.iter().map(|l| (&l.grad(&probe) - &mean_at).norm_sq()).sum();
    let var_t_sup = n as f64 * dist.variance_bound(set);
    let exact = losses.windows(2).all(|w| w[0].curvature() == w[1].curvature());
    let mut d2 = 0.0;
    for w in losses.windows(2) {
        if w[0] != w[1] {
            d2 += w[1].field().sub(&w[0].field()).sup_norm_sq(set);
        }
    }
    Ok(Diagnostics { var_t, var_t_sup, d2, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn lin(v: &[f64]) -> LossSpec {
        LossSpec::linear(p(v))
    }

    fn trace(rows: &[(&[f64], &[f64])], set: FeasibleSet) -> Trace {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (x, g))| {
                let o = RoundOutcome { xi: lin(g), sigma_sq: 0.0, variation_sq: 0.0 };
                RoundRecord::new(i + 1, p(x), p(g), 0.0, &o)
            })
            .collect();
        Trace {
            records,
            env: "test".into(),
            learner: "test".into(),
            seed: 0,
            horizon: rows.len(),
            convention: VariationConvention::RepeatFirst,
            set,
        }
    }

    #[test]
    fn comparator_examples() {
        let ball = FeasibleSet::unit_ball(2);
        let u = best_comparator(&[p(&[3.0, 4.0])], &ball).unwrap();
        assert!(u.distance(&p(&[-0.6, -0.8])) < 1e-15);
        let u = best_comparator(&[p(&[1.0, 1.0]), p(&[-1.0, -1.0])], &ball).unwrap();
        assert_eq!(u, p(&[0.0, 0.0]));
        let unit = FeasibleSet::cuboid(p(&[-1.0]), p(&[1.0])).unwrap();
        assert_eq!(best_comparator(&[p(&[1.0]), p(&[-1.0]), p(&[1.0])], &unit).unwrap(), p(&[-1.0]));
        assert!(best_comparator(&[], &unit).is_err());
    }

    #[test]
    fn regret_examples() {
        let ball = FeasibleSet::unit_ball(2);
        let tr = trace(&[(&[0.0, 0.0], &[1.0, 0.0])], ball.clone());
        let c = regret_curve(&tr, &ball).unwrap();
        assert_eq!(c.linearized, vec![1.0]);
        assert_eq!(c.function_value, vec![1.0]);

        let tr = trace(&[(&[0.3, 0.0], &[0.0, 0.0]), (&[0.0, 0.2], &[0.0, 0.0])], ball.clone());
        assert_eq!(regret_curve(&tr, &ball).unwrap().linearized, vec![0.0, 0.0]);

        let tr = trace(&[(&[-1.0, 0.0], &[1.0, 0.0]), (&[-1.0, 0.0], &[2.0, 0.0])], ball.clone());
        let c = regret_curve(&tr, &ball).unwrap();
        assert_eq!(c.comparator, p(&[-1.0, 0.0]));
        assert_eq!(c.linearized, vec![0.0, 0.0]);
    }

    #[test]
    fn regret_curve_telescopes() {
        let ball = FeasibleSet::unit_ball(2);
        let tr = trace(&[(&[0.1, 0.2], &[1.0, -2.0]), (&[0.5, 0.0], &[0.3, 0.1]), (&[0.0, -0.4], &[-0.7, 0.9])], ball.clone());
        let c = regret_curve(&tr, &ball).unwrap();
        for t in 1..3 {
            let r = &tr.records[t];
            let inc = r.g.dot(&r.x) - r.g.dot(&c.comparator);
            assert!((c.linearized[t] - c.linearized[t - 1] - inc).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_point_comparator_for_quadratics() {
        let ball = FeasibleSet::unit_ball(2);
        let q = |b: &[f64]| LossSpec::quadratic(SymMatrix::identity(2), p(b)).unwrap();
        let u = best_fixed_point(&[q(&[-0.5, 0.0]), q(&[-0.1, 0.2])], &ball).unwrap();
        assert!(u.distance(&p(&[0.3, -0.1])) < 1e-15);
        let u = best_fixed_point(&[q(&[-4.0, 0.0])], &ball).unwrap();
        assert!(u.distance(&p(&[1.0, 0.0])) < 1e-15);

        // anisotropic curvature: compare against a fine polar grid
        let a = SymMatrix::diagonal(&[2.0, 0.5]);
        let losses = vec![LossSpec::quadratic(a, p(&[-3.0, -0.2])).unwrap()];
        let u = best_fixed_point(&losses, &ball).unwrap();
        let f = |x: &Point| losses[0].value(x);
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=720 {
                let r = i as f64 / 400.0;
                let th = j as f64 * std::f64::consts::PI / 360.0;
                best = best.min(f(&p(&[r * th.cos(), r * th.sin()])));
            }
        }
        assert!(f(&u) <= best + 1e-12);
        assert!(ball.contains(&u, 1e-12));
    }

    #[test]
    fn aggregate_examples() {
        let ball = FeasibleSet::unit_ball(1);
        let row: (&[f64], &[f64]) = (&[0.0], &[1.0]);
        let mut tr = trace(&[row; 4], ball);
        for r in &mut tr.records {
            r.sigma_sq = 1.0;
        }
        let a = cum_aggregates(&tr).unwrap();
        assert_eq!(a.sigma_sq_cum, 4.0);
        assert_eq!(a.sigma_bar, 1.0);
        assert_eq!(a.variation_bar, 0.0);
        assert_eq!(a.variation_max, 0.0);
    }

    #[test]
    fn theorem1_examples() {
        let c = BoundConstants { diameter: 1.0, gradient_bound: 1.0, smoothness: 0.0, strong_convexity: 0.0 };
        let b = theorem1_bound(&c, 1.0, 0.0, 0.0, 100);
        assert!((b - (1.5 * 2f64.sqrt() + 5.0)).abs() < 1e-12);
        assert!((b - 7.1213).abs() < 1e-4);
        assert_eq!(b, theorem1_bound(&c, 1.0, 0.0, 0.0, 10_000));
        let lead = |t| theorem1_bound(&c, 1.0, 0.5, 0.2, t) - b;
        assert!((lead(200) / lead(100) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn theorem3_examples() {
        let c = BoundConstants { diameter: 1.0, gradient_bound: 0.0, smoothness: 1.0, strong_convexity: 1.0 };
        let b = theorem3_bound(&c, 1.0, 0.0, 3, GdTerm::Included);
        assert!((b - (8.0 * 3f64.ln() + 4.0 * 17f64.ln())).abs() < 1e-12);
        // at log T = 1 the bound is 8 + 4 log 17
        assert!((b - 8.0 * (3f64.ln() - 1.0) - 19.33).abs() < 5e-3);
        assert_eq!(theorem3_bound(&c, 0.0, 0.0, 10, GdTerm::Omitted), theorem3_bound(&c, 0.0, 0.0, 1000, GdTerm::Omitted));
        let g = BoundConstants { gradient_bound: 2.0, ..c };
        assert_eq!(
            theorem3_bound(&g, 1.0, 1.0, 50, GdTerm::Included) - theorem3_bound(&g, 1.0, 1.0, 50, GdTerm::Omitted),
            2.0
        );
    }

    #[test]
    fn worst_case_bound_value() {
        let b = worst_case_bound(2.0, 1.0, 100);
        assert!((b - (3.0 * 2f64.sqrt() * 2.0 * 10.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_examples() {
        let set = FeasibleSet::cuboid(p(&[-1.0]), p(&[1.0])).unwrap();
        let d = diagnostics_var_d2(&[lin(&[1.0]), lin(&[-1.0])], None, &set).unwrap();
        assert_eq!(d.var_t, 2.0);
        assert_eq!(d.d2, 4.0);
        assert!(d.exact);
        let same = vec![lin(&[0.5]); 5];
        let d = diagnostics_var_d2(&same, None, &set).unwrap();
        assert_eq!((d.var_t, d.d2), (0.0, 0.0));
    }

    #[test]
    fn diagnostics_on_coordinate_quadratics() {
        let ball = FeasibleSet::unit_ball(2);
        let e = |i| LossSpec::quadratic(SymMatrix::outer(&Point::basis(2, i)), Point::zeros(2)).unwrap();
        let losses = vec![e(0), e(1), e(1), e(0)];
        let d = diagnostics_var_d2(&losses, None, &ball).unwrap();
        assert_eq!(d.var_t, 0.0);
        assert!(!d.exact);
        assert!((d.d2 - 2.0).abs() < 1e-9);
        // 4 * max_x [ (x0^2 + x1^2)/2 - ||x/2||^2 ] = 4 * 1/4
        assert!((d.var_t_sup - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn comparator_beats_random_points(
            grads in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20),
            qs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 50),
        ) {
            let set = FeasibleSet::cuboid(p(&[-1.0, -2.0]), p(&[1.0, 0.5])).unwrap();
            let grads: Vec<Point> = grads.iter().map(|&(a, b)| p(&[a, b])).collect();
            let u = best_comparator(&grads, &set).unwrap();
            let total = |q: &Point| grads.iter().map(|g| g.dot(q)).sum::<f64>();
            for (a, b) in qs {
                let q = set.project(&p(&[a, 2.0 * b])).unwrap();
                prop_assert!(total(&u) <= total(&q) + 1e-9);
            }
        }

        #[test]
        fn variation_is_symmetric(a in prop::collection::vec(-3.0f64..3.0, 4), b in prop::collection::vec(-3.0f64..3.0, 4)) {
            let set = FeasibleSet::unit_ball(2);
            let qa = DistributionSpec::Dirac(LossSpec::quadratic(SymMatrix::diagonal(&[a[0].abs(), a[1].abs()]), p(&a[2..])).unwrap());
            let qb = DistributionSpec::Dirac(LossSpec::quadratic(SymMatrix::diagonal(&[b[0].abs(), b[1].abs()]), p(&b[2..])).unwrap());
            prop_assert!((qa.variation(&qb, &set) - qb.variation(&qa, &set)).abs() < 1e-9);
        }
    }
}
