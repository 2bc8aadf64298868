//! Online learners with a strict predict/observe alternation.
//!
//! * [`Oftrl`]: optimistic FTRL with `M_t = g_{t-1}` and the adaptive step
//!   `eta_t = D^2 / (nu + sum_{s<t} eta_s ||g_s - M_s||^2)`.
//! * [`Oftl`]: optimistic follow-the-leader on the quadratic surrogates
//!   `l_t(x) = <g_t, x - x_t> + (mu/2) ||x - x_t||^2`.
//! * [`Ogd`]: projected online gradient descent, as a baseline.
//!
//! All three start from `M_1 = 0`, so the first iterate is the projection of
//! the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Point;

pub trait Learner: Send {
    fn name(&self) -> &'static str;

    /// Emits `x_t`. Must alternate with [`Learner::observe`].
    fn predict(&mut self) -> Result<Point>;

    /// Feeds back `g_t`, the gradient observed at the last prediction.
    fn observe(&mut self, g: &Point) -> Result<()>;

    /// Step size used for the current round (0 when the learner has none).
    fn eta(&self) -> f64;
}

/// Which quadratic the OFTRL objective adds to the linear part:
/// `||x||^2 / eta` (plain) or `2 ||x||^2 / eta` (doubled).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    Plain,
    Doubled,
}

impl Regularizer {
    fn weight(self) -> f64 {
        match self {
            Regularizer::Plain => 1.0,
            Regularizer::Doubled => 2.0,
        }
    }
}

/// Strict alternation guard.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
enum Phase {
    #[default]
    Predict,
    Observe,
}

impl Phase {
    fn enter_observe(&mut self, who: &str) -> Result<()> {
        if *self == Phase::Observe {
            return Err(Error::protocol(format!("{who}: predict called twice without observe")));
        }
        *self = Phase::Observe;
        Ok(())
    }

    fn enter_predict(&mut self, who: &str) -> Result<()> {
        if *self == Phase::Predict {
            return Err(Error::protocol(format!("{who}: observe called without a preceding predict")));
        }
        *self = Phase::Predict;
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Optimistic FTRL with adaptive step size.
#[derive(Clone, Debug)]
pub struct Oftrl {
    set: FeasibleSet,
    diameter: f64,
    nu: f64,
    grad_sum: Point,
    m_next: Point,
    eta_denominator: f64,
    eta_current: f64,
    regularizer: Regularizer,
    t: usize,
    phase: Phase,
}

impl Oftrl {
    pub fn new(set: FeasibleSet, nu: f64, regularizer: Regularizer) -> Result<Self> {
        let nu = positive("nu", nu)?;
        let d = set.dim();
        let diameter = set.diameter();
        Ok(Oftrl {
            set,
            diameter,
            nu,
            grad_sum: Point::zeros(d),
            m_next: Point::zeros(d),
            eta_denominator: nu,
            eta_current: diameter * diameter / nu,
            regularizer,
            t: 1,
            phase: Phase::Predict,
        })
    }

    /// `nu = L D^2 + D G^2`.
    pub fn default_nu(diameter: f64, gradient_bound: f64, smoothness: f64) -> f64 {
        smoothness * diameter * diameter + diameter * gradient_bound * gradient_bound
    }

    /// `nu = 2 D G`, which makes the bound hold deterministically.
    pub fn worst_case_nu(diameter: f64, gradient_bound: f64) -> f64 {
        2.0 * diameter * gradient_bound
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn grad_sum(&self) -> &Point {
        &self.grad_sum
    }

    pub fn optimistic_guess(&self) -> &Point {
        &self.m_next
    }

    pub fn eta_denominator(&self) -> f64 {
        self.eta_denominator
    }

    /// The argmin of the round objective, without touching the protocol
    /// state.
    pub fn peek(&self) -> Result<Point> {
        let theta = &self.m_next + &self.grad_sum;
        self.set.reg_argmin(&theta, self.regularizer.weight() / self.eta_current)
    }
}

impl Learner for Oftrl {
    fn name(&self) -> &'static str {
        "oftrl"
    }

    fn predict(&mut self) -> Result<Point> {
        self.phase.enter_observe("oftrl")?;
        self.peek()
    }

    fn observe(&mut self, g: &Point) -> Result<()> {
        g.check_dim(self.set.dim())?;
        self.phase.enter_predict("oftrl")?;
        self.eta_denominator += self.eta_current * (g - &self.m_next).norm_sq();
        self.grad_sum.axpy(1.0, g);
        self.m_next = g.clone();
        self.t += 1;
        self.eta_current = self.diameter * self.diameter / self.eta_denominator;
        Ok(())
    }

    fn eta(&self) -> f64 {
        self.eta_current
    }
}

/// Optimistic follow-the-leader on strongly convex surrogates.
#[derive(Clone, Debug)]
pub struct Oftl {
    set: FeasibleSet,
    mu: f64,
    x_sum: Point,
    grad_sum: Point,
    m_next: Point,
    last_x: Option<Point>,
    t: usize,
    phase: Phase,
}

impl Oftl {
    pub fn new(set: FeasibleSet, mu: f64) -> Result<Self> {
        let mu = positive("mu", mu)?;
        let d = set.dim();
        Ok(Oftl {
            set,
            mu,
            x_sum: Point::zeros(d),
            grad_sum: Point::zeros(d),
            m_next: Point::zeros(d),
            last_x: None,
            t: 1,
            phase: Phase::Predict,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn x_sum(&self) -> &Point {
        &self.x_sum
    }

    pub fn grad_sum(&self) -> &Point {
        &self.grad_sum
    }

    pub fn optimistic_guess(&self) -> &Point {
        &self.m_next
    }

    pub fn peek(&self) -> Result<Point> {
        if self.t == 1 {
            return self.set.project(&Point::zeros(self.set.dim()));
        }
        // sum of surrogates + <M, x> = (t-1) mu/2 ||x||^2 + <grad_sum - mu x_sum + M, x> + const
        let mut theta = &self.grad_sum + &self.m_next;
        theta.axpy(-self.mu, &self.x_sum);
        self.set.reg_argmin(&theta, (self.t - 1) as f64 * self.mu / 2.0)
    }
}

impl Learner for Oftl {
    fn name(&self) -> &'static str {
        "oftl"
    }

    fn predict(&mut self) -> Result<Point> {
        self.phase.enter_observe("oftl")?;
        let x = self.peek()?;
        self.last_x = Some(x.clone());
        Ok(x)
    }

    fn observe(&mut self, g: &Point) -> Result<()> {
        g.check_dim(self.set.dim())?;
        self.phase.enter_predict("oftl")?;
        let x = self.last_x.take().expect("phase guard ensures a prediction exists");
        self.x_sum.axpy(1.0, &x);
        self.grad_sum.axpy(1.0, g);
        self.m_next = g.clone();
        self.t += 1;
        Ok(())
    }

    fn eta(&self) -> f64 {
        0.0
    }
}

/// `project(x - step * g)`.
pub fn ogd_step(x: &Point, g: &Point, step: f64, set: &FeasibleSet) -> Result<Point> {
    g.check_dim(x.dim())?;
    let mut next = x.clone();
    next.axpy(-step, g);
    set.project(&next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `scale * D / (G sqrt(t))`
    InvSqrt { scale: f64, gradient_bound: f64 },
}

#[derive(Clone, Debug)]
pub struct Ogd {
    set: FeasibleSet,
    rule: StepRule,
    x: Point,
    t: usize,
    phase: Phase,
}

impl Ogd {
    pub fn new(set: FeasibleSet, rule: StepRule) -> Result<Self> {
        match rule {
            StepRule::Constant(s) => {
                positive("step", s)?;
            }
            StepRule::InvSqrt { scale, gradient_bound } => {
                positive("step_scale", scale)?;
                positive("gradient bound", gradient_bound)?;
            }
        }
        let x = set.project(&Point::zeros(set.dim()))?;
        Ok(Ogd { set, rule, x, t: 1, phase: Phase::Predict })
    }

    fn step_size(&self) -> f64 {
        match self.rule {
            StepRule::Constant(s) => s,
            StepRule::InvSqrt { scale, gradient_bound } => {
                scale * self.set.diameter() / (gradient_bound * (self.t as f64).sqrt())
            }
        }
    }
}

impl Learner for Ogd {
    fn name(&self) -> &'static str {
        "ogd"
    }

    fn predict(&mut self) -> Result<Point> {
        self.phase.enter_observe("ogd")?;
        Ok(self.x.clone())
    }

    fn observe(&mut self, g: &Point) -> Result<()> {
        g.check_dim(self.set.dim())?;
        self.phase.enter_predict("ogd")?;
        self.x = ogd_step(&self.x, g, self.step_size(), &self.set)?;
        self.t += 1;
        Ok(())
    }

    fn eta(&self) -> f64 {
        self.step_size()
    }
}
