//! Parametric loss families and the per-round distributions over them.
//!
//! Every distribution here has a mean gradient field that is affine in `x`,
//! so the mean gradient, the variance bound and the variation between two
//! distributions are available in closed form (or, for mixed-curvature
//! pools, through an exact-by-structure convex maximization over the set).

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{Point, SymMatrix};

/// A single loss `f(., xi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `<g, x>`
    Linear { g: Point },
    /// `x^T A x / 2 + <b, x>` with `A` symmetric PSD.
    Quadratic { a: Arc<SymMatrix>, b: Point },
}

impl LossSpec {
    pub fn linear(g: Point) -> Self {
        LossSpec::Linear { g }
    }

    pub fn quadratic(a: SymMatrix, b: Point) -> Result<Self> {
        b.check_dim(a.dim())?;
        Ok(LossSpec::Quadratic { a: Arc::new(a), b })
    }

    pub fn dim(&self) -> usize {
        match self {
            LossSpec::Linear { g } => g.dim(),
            LossSpec::Quadratic { b, .. } => b.dim(),
        }
    }

    pub fn grad(&self, x: &Point) -> Point {
        match self {
            LossSpec::Linear { g } => g.clone(),
            LossSpec::Quadratic { a, b } => &a.mul_vec(x) + b,
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            LossSpec::Linear { g } => g.dot(x),
            LossSpec::Quadratic { a, b } => 0.5 * a.quad_form(x) + b.dot(x),
        }
    }

    /// The gradient field as an affine map.
    pub fn field(&self) -> AffineField {
        match self {
            LossSpec::Linear { g } => AffineField { a: None, b: g.clone() },
            LossSpec::Quadratic { a, b } => AffineField { a: Some((**a).clone()), b: b.clone() },
        }
    }

    /// Same loss with `shift` added to its linear term.
    pub fn shifted(&self, shift: &Point) -> LossSpec {
        match self {
            LossSpec::Linear { g } => LossSpec::Linear { g: g + shift },
            LossSpec::Quadratic { a, b } => LossSpec::Quadratic { a: Arc::clone(a), b: b + shift },
        }
    }

    pub fn curvature(&self) -> Option<&SymMatrix> {
        match self {
            LossSpec::Linear { .. } => None,
            LossSpec::Quadratic { a, .. } => Some(a),
        }
    }
}

/// `x -> A x + b`; `a == None` means `A = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineField {
    pub a: Option<SymMatrix>,
    pub b: Point,
}

impl AffineField {
    pub fn eval(&self, x: &Point) -> Point {
        match &self.a {
            None => self.b.clone(),
            Some(a) => &a.mul_vec(x) + &self.b,
        }
    }

    pub fn sub(&self, other: &AffineField) -> AffineField {
        let a = match (&self.a, &other.a) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.scaled(-1.0)),
            (Some(a), Some(b)) => Some(a.sub(b)),
        };
        AffineField { a: a.filter(|m| !m.is_zero()), b: &self.b - &other.b }
    }

    fn add_assign(&mut self, other: &AffineField) {
        self.a = match (self.a.take(), &other.a) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(a.add(b)),
        };
        self.b.axpy(1.0, &other.b);
    }

    fn scale(&mut self, s: f64) {
        self.a = self.a.take().map(|a| a.scaled(s));
        self.b = self.b.scaled(s);
    }

    /// Whether the field is constant in `x`.
    pub fn is_constant(&self) -> bool {
        self.a.as_ref().is_none_or(|a| a.is_zero())
    }

    /// `sup_{x in set} ||A x + b||^2`
    pub fn sup_norm_sq(&self, set: &FeasibleSet) -> f64 {
        set.sup_affine_norm_sq(self.a.as_ref(), &self.b)
    }
}

/// The distribution `D_t` a round's loss is drawn from.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Dirac(LossSpec),
    /// Adds `sigma * u` to the gradient of `base`, with `u` uniform on the
    /// unit sphere. Gradients stay bounded and the variance is exactly
    /// `sigma^2` at every `x`.
    SphereNoise { base: LossSpec, sigma: f64 },
    /// Uniform over `pool[i]` for `i` in `active`.
    FiniteUniform { pool: Arc<[LossSpec]>, active: Vec<usize> },
    /// `base` plus the linear corruption `<corruption, x>`.
    Shifted { base: Box<DistributionSpec>, corruption: Point },
}

impl DistributionSpec {
    pub fn sphere_noise(base: LossSpec, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config(format!("noise level must be non-negative, got {sigma}")));
        }
        Ok(DistributionSpec::SphereNoise { base, sigma })
    }

    pub fn finite_uniform(pool: Arc<[LossSpec]>, active: Vec<usize>) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::config("finite uniform distribution needs a nonempty active set"));
        }
        if let Some(&i) = active.iter().find(|&&i| i >= pool.len()) {
            return Err(Error::config(format!("active index {i} outside pool of size {}", pool.len())));
        }
        Ok(DistributionSpec::FiniteUniform { pool, active })
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Dirac(l) => l.dim(),
            DistributionSpec::SphereNoise { base, .. } => base.dim(),
            DistributionSpec::FiniteUniform { pool, .. } => pool[0].dim(),
            DistributionSpec::Shifted { corruption, .. } => corruption.dim(),
        }
    }

    /// Exact mean gradient field `x -> E[grad f(x, xi)]`.
    pub fn mean_field(&self) -> AffineField {
        match self {
            DistributionSpec::Dirac(l) => l.field(),
            DistributionSpec::SphereNoise { base, .. } => base.field(),
            DistributionSpec::FiniteUniform { pool, active } => {
                let mut acc = AffineField { a: None, b: Point::zeros(self.dim()) };
                for &i in active {
                    acc.add_assign(&pool[i].field());
                }
                acc.scale(1.0 / active.len() as f64);
                acc
            }
            DistributionSpec::Shifted { base, corruption } => {
                let mut f = base.mean_field();
                f.b.axpy(1.0, corruption);
                f
            }
        }
    }

    pub fn mean_grad(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        Ok(self.mean_field().eval(x))
    }

    /// `max_{x in set} E ||grad f(x, xi) - mean_grad(x)||^2`.
    pub fn variance_bound(&self, set: &FeasibleSet) -> f64 {
        match self {
            DistributionSpec::Dirac(_) => 0.0,
            DistributionSpec::SphereNoise { sigma, .. } => sigma * sigma,
            DistributionSpec::Shifted { base, .. } => base.variance_bound(set),
            DistributionSpec::FiniteUniform { pool, active } => {
                let mean = self.mean_field();
                let n = active.len() as f64;
                let d = self.dim();
                let mut quad: Option<SymMatrix> = None;
                let mut lin = Point::zeros(d);
                let mut constant = 0.0;
                for &i in active {
                    let dev = pool[i].field().sub(&mean);
                    constant += dev.b.norm_sq() / n;
                    if let Some(a) = dev.a {
                        lin.axpy(1.0 / n, &a.mul_vec(&dev.b));
                        let sq = a.square().scaled(1.0 / n);
                        quad = Some(match quad {
                            None => sq,
                            Some(q) => q.add(&sq),
                        });
                    }
                }
                match quad {
                    None => constant,
                    Some(q) => set.maximize_convex_quadratic(&q, &lin, constant),
                }
            }
        }
    }

    /// `sup_{x in set} ||mean_grad_a(x) - mean_grad_b(x)||^2`.
    pub fn variation(&self, other: &DistributionSpec, set: &FeasibleSet) -> f64 {
        self.mean_field().sub(&other.mean_field()).sup_norm_sq(set)
    }

    /// Draws one loss.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LossSpec {
        match self {
            DistributionSpec::Dirac(l) => l.clone(),
            DistributionSpec::SphereNoise { base, sigma } => {
                if *sigma == 0.0 {
                    return base.clone();
                }
                let u = unit_sphere(base.dim(), rng);
                base.shifted(&u.scaled(*sigma))
            }
            DistributionSpec::FiniteUniform { pool, active } => {
                pool[active[rng.random_range(0..active.len())]].clone()
            }
            DistributionSpec::Shifted { base, corruption } => base.sample(rng).shifted(corruption),
        }
    }

    /// Upper bound on `||grad f(x, xi)||` over the set and the support:
    /// largest member gradient norm plus the noise radius.
    pub fn gradient_bound(&self, set: &FeasibleSet) -> f64 {
        match self {
            DistributionSpec::Dirac(l) => l.field().sup_norm_sq(set).sqrt(),
            DistributionSpec::SphereNoise { base, sigma } => base.field().sup_norm_sq(set).sqrt() + sigma,
            DistributionSpec::FiniteUniform { pool, active } => active
                .iter()
                .map(|&i| pool[i].field().sup_norm_sq(set).sqrt())
                .fold(0.0, f64::max),
            DistributionSpec::Shifted { base, corruption } => base.gradient_bound(set) + corruption.norm(),
        }
    }

    /// Smoothness constant of the mean loss.
    pub fn smoothness(&self) -> f64 {
        self.mean_field().a.map_or(0.0, |a| a.lambda_max_psd())
    }

    /// Strong convexity constant of the mean loss.
    pub fn strong_convexity(&self) -> f64 {
        self.mean_field().a.map_or(0.0, |a| a.lambda_min_psd().max(0.0))
    }
}

/// Uniform draw from the unit sphere in `R^dim` (a random sign when
/// `dim == 1`).
pub fn unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-300 {
            return Point::from_vec(v.into_iter().map(|c| c / n).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn lin(v: &[f64]) -> LossSpec {
        LossSpec::linear(p(v))
    }

    #[test]
    fn grad_examples() {
        let x = p(&[3.0, -7.0]);
        assert_eq!(lin(&[1.0, 2.0]).grad(&x), p(&[1.0, 2.0]));
        let q = LossSpec::quadratic(SymMatrix::identity(2), Point::zeros(2)).unwrap();
        assert_eq!(q.grad(&p(&[1.0, 0.0])), p(&[1.0, 0.0]));
        let q = LossSpec::quadratic(SymMatrix::diagonal(&[2.0, 0.0]), p(&[0.0, 1.0])).unwrap();
        assert_eq!(q.grad(&p(&[1.0, 1.0])), p(&[2.0, 1.0]));
    }

    #[test]
    fn value_examples() {
        assert_eq!(lin(&[1.0, 2.0]).value(&p(&[1.0, 1.0])), 3.0);
        let q = LossSpec::quadratic(SymMatrix::identity(2), Point::zeros(2)).unwrap();
        assert_eq!(q.value(&p(&[1.0, 0.0])), 0.5);
        let q = LossSpec::quadratic(SymMatrix::zeros(2), p(&[1.0, 0.0])).unwrap();
        assert_eq!(q.value(&p(&[2.0, 0.0])), 2.0);
    }

    #[test]
    fn mean_grad_examples() {
        let x = p(&[0.3, -0.2]);
        let noisy = DistributionSpec::sphere_noise(lin(&[1.0, 0.0]), 5.0).unwrap();
        assert_eq!(noisy.mean_grad(&x).unwrap(), p(&[1.0, 0.0]));

        let pool: Arc<[LossSpec]> = vec![lin(&[1.0]), lin(&[-1.0])].into();
        let u = DistributionSpec::finite_uniform(pool, vec![0, 1]).unwrap();
        assert_eq!(u.mean_grad(&p(&[0.5])).unwrap(), p(&[0.0]));

        let shifted = DistributionSpec::Shifted {
            base: Box::new(DistributionSpec::sphere_noise(lin(&[1.0, 0.0]), 1.0).unwrap()),
            corruption: p(&[0.0, 1.0]),
        };
        assert_eq!(shifted.mean_grad(&x).unwrap(), p(&[1.0, 1.0]));
    }

    #[test]
    fn variance_bound_examples() {
        let set = FeasibleSet::unit_ball(1);
        let noisy = DistributionSpec::sphere_noise(lin(&[0.0]), 2.0).unwrap();
        assert_eq!(noisy.variance_bound(&set), 4.0);
        assert_eq!(DistributionSpec::Dirac(lin(&[3.0])).variance_bound(&set), 0.0);
        // enumeration oracle: members +1, -1 with mean 0 -> average squared deviation 1
        let pool: Arc<[LossSpec]> = vec![lin(&[1.0]), lin(&[-1.0])].into();
        let u = DistributionSpec::finite_uniform(pool.clone(), vec![0, 1]).unwrap();
        let members = [1.0_f64, -1.0];
        let mean = members.iter().sum::<f64>() / 2.0;
        let oracle = members.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / 2.0;
        assert_eq!(u.variance_bound(&set), oracle);
        assert_eq!(oracle, 1.0);
    }

    #[test]
    fn variance_of_shared_curvature_pool_is_b_spread() {
        let set = FeasibleSet::unit_ball(2);
        let a = SymMatrix::identity(2);
        let pool: Arc<[LossSpec]> = vec![
            LossSpec::quadratic(a.clone(), p(&[1.0, 0.0])).unwrap(),
            LossSpec::quadratic(a.clone(), p(&[-1.0, 2.0])).unwrap(),
        ]
        .into();
        let u = DistributionSpec::finite_uniform(pool, vec![0, 1]).unwrap();
        // b-mean (0, 1); deviations (1,-1), (-1,1) -> 2 each
        assert!((u.variance_bound(&set) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coordinate_quadratic_variance() {
        // f(x, i) = x_i^2 / 2 on the unit ball in R^4: max variance 1/d - 1/d^2
        let d = 4;
        let pool: Arc<[LossSpec]> = (0..d)
            .map(|i| LossSpec::quadratic(SymMatrix::outer(&Point::basis(d, i)), Point::zeros(d)).unwrap())
            .collect::<Vec<_>>()
            .into();
        let u = DistributionSpec::finite_uniform(pool, (0..d).collect()).unwrap();
        let got = u.variance_bound(&FeasibleSet::unit_ball(d));
        assert!((got - 3.0 / 16.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn variation_examples() {
        let set = FeasibleSet::unit_ball(2);
        let a = DistributionSpec::Dirac(lin(&[1.0, 0.0]));
        let b = DistributionSpec::Dirac(lin(&[0.0, 0.0]));
        assert_eq!(a.variation(&b, &set), 1.0);
        assert_eq!(a.variation(&a, &set), 0.0);

        let q1 = DistributionSpec::Dirac(
            LossSpec::quadratic(SymMatrix::diagonal(&[1.0, 0.0]), Point::zeros(2)).unwrap(),
        );
        let q2 = DistributionSpec::Dirac(LossSpec::quadratic(SymMatrix::zeros(2), Point::zeros(2)).unwrap());
        // grid oracle for sup ||diag(1,0) x||^2 over the unit disc
        let mut best: f64 = 0.0;
        for i in 0..=400 {
            for j in 0..=400 {
                let (x, y) = (-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0);
                if x * x + y * y <= 1.0 {
                    best = best.max(x * x);
                }
            }
        }
        assert_eq!(best, 1.0);
        assert!((q1.variation(&q2, &set) - best).abs() < 1e-12);
    }

    #[test]
    fn sphere_noise_draws_have_exact_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = lin(&[0.5, -0.25, 1.0]);
        let dist = DistributionSpec::sphere_noise(base.clone(), 0.7).unwrap();
        for _ in 0..100 {
            let LossSpec::Linear { g } = dist.sample(&mut rng) else { panic!() };
            let LossSpec::Linear { g: g0 } = &base else { panic!() };
            assert!(((&g - g0).norm() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothness_and_strong_convexity() {
        let q = LossSpec::quadratic(SymMatrix::diagonal(&[3.0, 0.5]), Point::zeros(2)).unwrap();
        let d = DistributionSpec::sphere_noise(q, 1.0).unwrap();
        assert_eq!(d.smoothness(), 3.0);
        assert_eq!(d.strong_convexity(), 0.5);
        assert_eq!(DistributionSpec::Dirac(lin(&[1.0])).smoothness(), 0.0);
    }

    #[test]
    fn finite_uniform_validation() {
        let pool: Arc<[LossSpec]> = vec![lin(&[1.0])].into();
        assert!(DistributionSpec::finite_uniform(pool.clone(), vec![]).is_err());
        assert!(DistributionSpec::finite_uniform(pool, vec![1]).is_err());
    }
}
