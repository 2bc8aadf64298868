//! Feasible sets with exact Euclidean projection.
//!
//! Only Euclidean balls and axis-aligned boxes are supported. Both have
//! closed-form projections, so every learner update in this crate is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Point, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

/// Ascent tolerance and restart count for maximizing a convex quadratic over
/// a ball (the problem is not concave, so a single ascent may stall).
const ASCENT_TOL: f64 = 1e-8;
const ASCENT_RESTARTS: usize = 16;
const ASCENT_MAX_ITERS: usize = 20_000;
/// Boxes up to this dimension are maximized over exactly by enumerating
/// vertices.
const VERTEX_ENUM_MAX_DIM: usize = 12;

impl FeasibleSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(format!("ball radius must be positive, got {radius}")));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        FeasibleSet::Ball { center: Point::zeros(dim), radius: 1.0 }
    }

    pub fn cuboid(lo: Point, hi: Point) -> Result<Self> {
        lo.check_dim(hi.dim())?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo[i] >= hi[i]) {
            return Err(Error::config(format!("box needs lo < hi, violated at coordinate {i}")));
        }
        if lo.dim() == 0 {
            return Err(Error::config("box must have dimension >= 1"));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Ball { center, .. } => center.dim(),
            FeasibleSet::Box { lo, .. } => lo.dim(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::Box { lo, hi } => (hi - lo).norm(),
        }
    }

    /// Ball center or box midpoint.
    pub fn center(&self) -> Point {
        match self {
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Box { lo, hi } => (lo + hi).scaled(0.5),
        }
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Ball { center, radius } => p.distance(center) <= radius + tol,
            FeasibleSet::Box { lo, hi } => {
                (0..p.dim()).all(|i| p[i] >= lo[i] - tol && p[i] <= hi[i] + tol)
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &Point) -> Result<Point> {
        p.check_dim(self.dim())?;
        Ok(self.project_unchecked(p))
    }

    pub(crate) fn project_unchecked(&self, p: &Point) -> Point {
        match self {
            FeasibleSet::Ball { center, radius } => {
                let offset = p - center;
                let dist = offset.norm();
                if dist <= *radius {
                    p.clone()
                } else {
                    let mut out = center.clone();
                    out.axpy(radius / dist, &offset);
                    out
                }
            }
            FeasibleSet::Box { lo, hi } => Point::from_vec(
                (0..p.dim()).map(|i| p[i].clamp(lo[i], hi[i])).collect(),
            ),
        }
    }

    /// `argmin_{x in set} <dir, x>`. A zero direction (or a zero coordinate
    /// for boxes) resolves to the center / midpoint.
    pub fn linear_minimize(&self, dir: &Point) -> Result<Point> {
        dir.check_dim(self.dim())?;
        Ok(match self {
            FeasibleSet::Ball { center, radius } => {
                let n = dir.norm();
                if n == 0.0 {
                    center.clone()
                } else {
                    let mut out = center.clone();
                    out.axpy(-radius / n, dir);
                    out
                }
            }
            FeasibleSet::Box { lo, hi } => Point::from_vec(
                (0..dir.dim())
                    .map(|i| match dir[i].partial_cmp(&0.0) {
                        Some(std::cmp::Ordering::Greater) => lo[i],
                        Some(std::cmp::Ordering::Less) => hi[i],
                        _ => 0.5 * (lo[i] + hi[i]),
                    })
                    .collect(),
            ),
        })
    }

    /// `argmin_{x in set} <theta, x> + c ||x||^2` for `c > 0`.
    ///
    /// The objective equals `c ||x + theta / (2c)||^2` up to a constant, so
    /// the constrained minimizer is the projection of `-theta / (2c)`.
    pub fn reg_argmin(&self, theta: &Point, c: f64) -> Result<Point> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::contract(format!("regularization weight must be positive, got {c}")));
        }
        theta.check_dim(self.dim())?;
        Ok(self.project_unchecked(&theta.scaled(-0.5 / c)))
    }

    /// Maximum over the set of the convex quadratic
    /// `x^T M x + 2 <lin, x> + constant` with `M` symmetric PSD.
    ///
    /// Exact for boxes of dimension up to 12 (the maximum of a convex
    /// function sits on a vertex). Otherwise the value is the best of 16
    /// projected-ascent runs, so it is a certified lower bound on the true
    /// maximum and exact in all the structured cases used by this crate.
    pub fn maximize_convex_quadratic(&self, m: &SymMatrix, lin: &Point, constant: f64) -> f64 {
        let eval = |x: &Point| m.quad_form(x) + 2.0 * lin.dot(x) + constant;
        if m.is_zero() {
            // linear: maximized at the minimizer of -lin
            let x = self.linear_minimize(&-lin).expect("dimension checked by caller");
            return eval(&x);
        }
        match self {
            FeasibleSet::Box { lo, hi } if self.dim() <= VERTEX_ENUM_MAX_DIM => {
                let d = self.dim();
                (0u32..(1 << d))
                    .map(|mask| {
                        let v = Point::from_vec(
                            (0..d).map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] }).collect(),
                        );
                        eval(&v)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            FeasibleSet::Ball { center, radius }
                if lin.is_zero() && center.is_zero() && m.is_diagonal() =>
            {
                radius * radius * (0..m.dim()).map(|i| m.get(i, i)).fold(0.0, f64::max) + constant
            }
            _ => self.multistart_ascent(m, lin, constant),
        }
    }

    fn multistart_ascent(&self, m: &SymMatrix, lin: &Point, constant: f64) -> f64 {
        let d = self.dim();
        let eval = |x: &Point| m.quad_form(x) + 2.0 * lin.dot(x) + constant;
        let center = self.center();
        let scale = match self {
            FeasibleSet::Ball { radius, .. } => *radius,
            FeasibleSet::Box { .. } => 0.5 * self.diameter(),
        };
        let mut starts: Vec<Point> = Vec::with_capacity(ASCENT_RESTARTS);
        let grad_at_center = &m.mul_vec(&center) + lin;
        if !grad_at_center.is_zero() {
            starts.push(&center + &grad_at_center.scaled(scale / grad_at_center.norm()));
        }
        let top = m.top_eigenvector_psd();
        starts.push(&center + &top.scaled(scale));
        starts.push(&center - &top.scaled(scale));
        for axis in 0..d {
            if starts.len() + 2 > ASCENT_RESTARTS / 2 {
                break;
            }
            starts.push(&center + &Point::basis(d, axis).scaled(scale));
            starts.push(&center - &Point::basis(d, axis).scaled(scale));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a5ce);
        while starts.len() < ASCENT_RESTARTS {
            let dir = Point::from_vec((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
            let n = dir.norm().max(1e-12);
            starts.push(&center + &dir.scaled(scale / n));
        }
        // step large enough that each iterate jumps to the boundary along
        // the gradient; monotone for convex objectives with any step size
        let step = 1e3 / m.trace().max(1e-12);
        starts
            .into_iter()
            .map(|s| {
                let mut x = self.project_unchecked(&s);
                for _ in 0..ASCENT_MAX_ITERS {
                    let mut grad = m.mul_vec(&x);
                    grad.axpy(1.0, lin);
                    let mut next = x.clone();
                    next.axpy(2.0 * step, &grad);
                    let next = self.project_unchecked(&next);
                    let moved = next.distance(&x);
                    x = next;
                    if moved <= ASCENT_TOL {
                        break;
                    }
                }
                eval(&x)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_{x in set} ||B x + v||^2` for symmetric `B`.
    pub fn sup_affine_norm_sq(&self, b: Option<&SymMatrix>, v: &Point) -> f64 {
        match b {
            None => v.norm_sq(),
            Some(b) if b.is_zero() => v.norm_sq(),
            Some(b) => self.maximize_convex_quadratic(&b.square(), &b.mul_vec(v), v.norm_sq()),
        }
    }
}
