//! Geometry and linear algebra against closed forms and optimality conditions.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use sea_oco::{FeasibleSet, Point, SymMatrix};

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, dim)
}

/// A ball or box in dimension 1..=5 together with two free points.
fn set_and_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(|d| {
        let set = prop_oneof![
            (coords(d), 0.1..2.5f64).prop_map(|(c, r)| FeasibleSet::ball(Point::new(c).unwrap(), r).unwrap()),
            (coords(d), prop::collection::vec(0.0..2.0f64, d)).prop_map(|(lo, w)| {
                let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
                FeasibleSet::cuboid(Point::new(lo).unwrap(), Point::new(hi).unwrap()).unwrap()
            }),
        ];
        (set, coords(d), coords(d))
    })
}

fn psd(rows: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * rows).prop_map(move |v| {
        let b = DMatrix::from_row_slice(rows, rows, &v);
        &b * b.transpose()
    })
}

fn to_sym(m: &DMatrix<f64>) -> SymMatrix {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    SymMatrix::from_rows(&rows).unwrap()
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nearest((set, p, q) in set_and_points()) {
        let p = Point::new(p).unwrap();
        let q = set.project(&Point::new(q).unwrap()).unwrap();
        let x = set.project(&p).unwrap();
        prop_assert!(set.contains(&x, 1e-12));
        prop_assert!(set.project(&x).unwrap().distance(&x) <= 1e-12);
        prop_assert!(p.distance(&x) <= p.distance(&q) + 1e-9);
        // variational inequality <p - x, q - x> <= 0
        prop_assert!((&p - &x).dot(&(&q - &x)) <= 1e-9);
    }

    #[test]
    fn linear_minimize_dominates_feasible_points((set, dir, q) in set_and_points()) {
        let dir = Point::new(dir).unwrap();
        let q = set.project(&Point::new(q).unwrap()).unwrap();
        let x = set.linear_minimize(&dir).unwrap();
        prop_assert!(set.contains(&x, 1e-12));
        prop_assert!(dir.dot(&x) <= dir.dot(&q) + 1e-9);
    }

    #[test]
    fn reg_argmin_satisfies_first_order_optimality((set, theta, q) in set_and_points(), c in 0.05..20.0f64) {
        let theta = Point::new(theta).unwrap();
        let q = set.project(&Point::new(q).unwrap()).unwrap();
        let x = set.reg_argmin(&theta, c).unwrap();
        let grad = &theta + &x.scaled(2.0 * c);
        prop_assert!(grad.dot(&(&q - &x)) >= -1e-9);
        let f = |y: &Point| theta.dot(y) + c * y.norm_sq();
        prop_assert!(f(&x) <= f(&q) + 1e-9);
    }

    #[test]
    fn two_by_two_eigenvalues_match_the_closed_form(a in 0.0..3.0f64, c in 0.0..3.0f64, b in -2.0..2.0f64) {
        // PSD only when ac >= b^2; shift the diagonal to make it so
        let shift = (b * b - a * c).max(0.0).sqrt() + 1e-3;
        let (a, c) = (a + shift, c + shift);
        let s = SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let mid = (a + c) / 2.0;
        let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
        assert_relative_eq!(s.lambda_max_psd(), mid + rad, epsilon = 1e-12, max_relative = 1e-10);
        assert_relative_eq!(s.lambda_min_psd(), mid - rad, epsilon = 1e-9);
        assert_relative_eq!(s.spectral_norm(), mid + rad, epsilon = 1e-12, max_relative = 1e-10);
    }

    #[test]
    fn extreme_eigenpairs_bound_every_rayleigh_quotient(m in (1usize..=5).prop_flat_map(psd), probes in prop::collection::vec(coords(5), 20)) {
        let n = m.nrows();
        let s = to_sym(&m);
        let (top, bottom) = (s.lambda_max_psd(), s.lambda_min_psd());
        let tol = 1e-9 * (1.0 + top);
        let v = s.top_eigenvector_psd();
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        prop_assert!((&s.mul_vec(&v) - &v.scaled(top)).norm() <= tol);
        // the eigenvalues sum to the trace
        prop_assert!(bottom <= top + tol && n as f64 * bottom <= s.trace() + tol && s.trace() <= n as f64 * top + tol);
        for p in probes {
            let u = Point::new(p[..n].to_vec()).unwrap();
            if u.norm() > 1e-6 {
                let q = s.quad_form(&u) / u.norm_sq();
                prop_assert!(bottom - tol <= q && q <= top + tol);
            }
        }
    }

    #[test]
    fn shifted_low_rank_spectrum_is_exact(scale in 0.5..3.0f64, tiny in 1e-8..1e-3f64) {
        // one large eigenvalue, two clustered small ones: hard for iterative schemes
        let u = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]) / 6f64.sqrt();
        let m = DMatrix::identity(3, 3) * tiny + &u * u.transpose() * scale;
        let s = to_sym(&m);
        assert_relative_eq!(s.lambda_max_psd(), scale + tiny, max_relative = 1e-12);
        assert_relative_eq!(s.lambda_min_psd(), tiny, epsilon = 1e-12);
    }

    #[test]
    fn ball_quadratic_maximum_is_the_top_eigenvalue(m in (2usize..=4).prop_flat_map(psd), r in 0.2..2.0f64) {
        let d = m.nrows();
        let top = to_sym(&m).lambda_max_psd();
        let ball = FeasibleSet::ball(Point::zeros(d), r).unwrap();
        let got = ball.maximize_convex_quadratic(&to_sym(&m), &Point::zeros(d), 1.5);
        assert_relative_eq!(got, r * r * top + 1.5, max_relative = 1e-6, epsilon = 1e-9);
    }
}

#[test]
fn box_quadratic_maximum_matches_vertex_enumeration() {
    let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 0.7]);
    let lin = Point::new(vec![0.1, -0.4, 0.25]).unwrap();
    let lo = [-1.0, 0.0, -0.5];
    let hi = [0.5, 2.0, 1.5];
    let set = FeasibleSet::cuboid(Point::new(lo.to_vec()).unwrap(), Point::new(hi.to_vec()).unwrap()).unwrap();
    let sym = to_sym(&m);
    let brute = (0..8)
        .map(|mask: usize| {
            let v = Point::new((0..3).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect()).unwrap();
            sym.quad_form(&v) + 2.0 * lin.dot(&v) - 0.5
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_relative_eq!(set.maximize_convex_quadratic(&sym, &lin, -0.5), brute, max_relative = 1e-12);
}

#[test]
fn diameters() {
    assert_relative_eq!(FeasibleSet::unit_ball(3).diameter(), 2.0);
    let b = FeasibleSet::cuboid(Point::new(vec![-1.0, -0.5]).unwrap(), Point::new(vec![2.0, 0.5]).unwrap()).unwrap();
    assert_relative_eq!(b.diameter(), 10f64.sqrt());
}
