use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use symvar::functional::{Functional, Linear, NormProfile, Profile, Sum};
use symvar::metric::GridMetric;
use symvar::sampling::{rng, uniform_vec};
use symvar::slopes::{lower_derivative, lower_derivative_schedule, q_form, strong_slope};
use symvar::{make_grid, GridSpace, NormKind, SymError};

/// 1/2 u^T A u + b.u with its exact gradient.
struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Functional for Quadratic {
    fn name(&self) -> String {
        "quadratic".into()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        0.5 * u.dot(&(&self.a * &u)) + self.b.dot(&u)
    }
    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        Some((&self.a * DVector::from_column_slice(u) + &self.b).iter().copied().collect())
    }
}

fn random_quadratic(n: usize, seed: u64) -> Quadratic {
    let mut r = rng(seed);
    let m = DMatrix::from_vec(n, n, uniform_vec(&mut r, n * n, -1.0, 1.0));
    let a = &m * m.transpose() + DMatrix::identity(n, n);
    Quadratic { a, b: DVector::from_vec(uniform_vec(&mut r, n, -1.0, 1.0)) }
}

/// sqrt(g^T G^-1 g): the dual X norm from the Gram matrix.
fn dual_x(space: &GridSpace, g: &[f64]) -> f64 {
    let gv = DVector::from_column_slice(g);
    let z = space.gram_x().clone().cholesky().unwrap().solve(&gv);
    gv.dot(&z).sqrt()
}

fn x_metric(space: &Arc<GridSpace>) -> GridMetric {
    GridMetric::new(space, NormKind::X)
}

#[test]
fn slope_vanishes_at_a_minimum() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    let a = vec![0.3, -0.1, 0.5, 0.5, -0.1, 0.3];
    let f = NormProfile::squared_distance(&g, NormKind::X, a.clone()).unwrap();
    let s = strong_slope(&f, &x_metric(&g), &a, &[1e-2, 1e-3], 200, 1).unwrap();
    assert!(s.upper < 1e-12 && s.lower < 1e-12, "{s:?}");
}

#[test]
fn slope_of_a_unit_linear_form() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    let raw = vec![1.0, -2.0, 0.5, 0.0, 1.5, -1.0];
    let scale = dual_x(&g, &raw);
    let c: Vec<f64> = raw.iter().map(|x| x / scale).collect();
    let f = Linear::new(c);
    let s = strong_slope(&f, &x_metric(&g), &[0.2; 6], &[1e-3], 500, 2).unwrap();
    assert!(s.upper >= 0.95 && s.upper <= 1.0 + 1e-12, "{s:?}");
    assert!((s.lower - 1.0).abs() < 1e-9);
}

#[test]
fn slope_of_random_quadratics_matches_gradient() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    for seed in 0..10 {
        let f = random_quadratic(6, seed);
        let u = uniform_vec(&mut rng(100 + seed), 6, -1.0, 1.0);
        let want = dual_x(&g, &f.gradient(&u).unwrap());
        let s = strong_slope(&f, &x_metric(&g), &u, &[1e-3, 1e-4], 200, seed).unwrap();
        assert!((s.upper - want).abs() <= 0.1 * want + 1e-6, "seed {seed}: {} vs {want}", s.upper);
        assert!(s.lower <= want + 1e-9 && want <= s.upper + s.tolerance());
    }
}

#[test]
fn slope_outside_domain() {
    let g = make_grid(1, 2, 1.0, 2.0, 3.0).unwrap();
    let f = symvar::functional::FnFunctional::new("inf", |_: &[f64]| f64::INFINITY);
    assert!(matches!(strong_slope(&f, &x_metric(&g), &[0.0, 0.0], &[1e-3], 10, 0), Err(SymError::OutsideDomain)));
}

#[test]
fn q_form_of_half_square_norm() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    let f = NormProfile::new(&g, NormKind::X, None, Profile::Power { coef: 0.5, exponent: 2.0 }).unwrap();
    let u = vec![0.1, 0.4, -0.2, 0.3, 0.0, 0.2];
    let w = vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.0];
    let q = q_form(&f, &x_metric(&g), &u, &w, &[1e-2, 1e-3], 200, 3).unwrap();
    let want = g.norm_x(&w).powi(2);
    assert!((q.value - want).abs() < 1e-6 * (1.0 + want), "{} vs {want}", q.value);
}

#[test]
fn q_form_of_linear_vanishes() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let f = Linear::new(vec![1.0, -3.0, 2.0, 0.5]);
    // at t ~ 1e-4 the cancellation in the second difference alone is ~1e-8;
    // the schedule stops at 1e-2, where rounding stays below 1e-10
    let q = q_form(&f, &x_metric(&g), &[0.5; 4], &[1.0, 0.0, 0.0, 1.0], &[1e-1, 1e-2], 200, 4).unwrap();
    assert!(q.value.abs() < 1e-9, "{}", q.value);
}

#[test]
fn q_form_of_soft_quartic() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    let f = NormProfile::new(&g, NormKind::X, None, Profile::SoftQuartic).unwrap();
    let u = vec![0.1, 0.2, 0.1, -0.1, 0.2, 0.0];
    let w = vec![0.5, -1.0, 0.0, 1.0, 0.0, 0.5];
    // f = q/2 - q^2/4 with q = u^T G u: D^2 f [w, w] = (1 - q) w^T G w - 2 (u^T G w)^2
    let gm = g.gram_x();
    let (uv, wv) = (DVector::from_column_slice(&u), DVector::from_column_slice(&w));
    let q0 = uv.dot(&(gm * &uv));
    let want = (1.0 - q0) * wv.dot(&(gm * &wv)) - 2.0 * uv.dot(&(gm * &wv)).powi(2);
    let q = q_form(&f, &x_metric(&g), &u, &w, &[1e-2, 1e-3], 300, 5).unwrap();
    assert!((q.value - want).abs() <= 0.05 * want.abs(), "{} vs {want}", q.value);
}

#[test]
fn q_form_converges_with_delta() {
    let g = make_grid(1, 6, 1.0, 2.0, 3.0).unwrap();
    let f = NormProfile::new(&g, NormKind::X, None, Profile::SoftQuartic).unwrap();
    let u = vec![0.1, 0.2, 0.1, -0.1, 0.2, 0.0];
    let w = vec![0.5, -1.0, 0.0, 1.0, 0.0, 0.5];
    let gm = g.gram_x();
    let (uv, wv) = (DVector::from_column_slice(&u), DVector::from_column_slice(&w));
    let q0 = uv.dot(&(gm * &uv));
    let want = (1.0 - q0) * wv.dot(&(gm * &wv)) - 2.0 * uv.dot(&(gm * &wv)).powi(2);
    let deltas = [1e-1, 1e-2, 1e-3];
    let q = q_form(&f, &x_metric(&g), &u, &w, &deltas, 200, 6).unwrap();
    let errs: Vec<f64> = q.schedule.iter().map(|(_, v)| (v - want).abs()).collect();
    // error order at least 1 in delta between the coarsest and finest
    let rate = (errs[0] / errs[2].max(1e-300)).log10() / 2.0;
    assert!(rate >= 1.0, "errors {errs:?}");
}

#[test]
fn q_form_rejects_bad_schedule() {
    let g = make_grid(1, 2, 1.0, 2.0, 3.0).unwrap();
    let f = Linear::new(vec![1.0, 1.0]);
    assert!(q_form(&f, &x_metric(&g), &[0.0; 2], &[1.0, 0.0], &[], 10, 0).is_err());
    assert!(q_form(&f, &x_metric(&g), &[0.0; 2], &[1.0, 0.0], &[-1.0], 10, 0).is_err());
}

#[test]
fn lower_derivative_examples() {
    assert!((lower_derivative(&|s| s, 0.3, 1e-3, 64) - 1.0).abs() < 1e-9);
    let cube = |s: f64| s * s * s;
    let sched = lower_derivative_schedule(&cube, 0.0, &[1e-1, 1e-2, 1e-3], 64);
    assert!(sched.iter().all(|&(_, v)| v >= -1e-15));
    assert!(sched[2].1 < sched[1].1 && sched[1].1 < sched[0].1 && sched[2].1 < 1e-5);
    assert!((lower_derivative(&|s: f64| s.abs(), 0.0, 1e-3, 64) + 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_parts_do_not_change_q(seed in any::<u64>()) {
        let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
        let mut r = rng(seed);
        let base: Arc<dyn Functional> = Arc::new(NormProfile::new(&g, NormKind::X, None, Profile::SoftQuartic).unwrap());
        let lin: Arc<dyn Functional> = Arc::new(Linear::new(uniform_vec(&mut r, 4, -1.0, 1.0)));
        let sum = Sum::new(vec![base.clone(), lin]);
        let u = uniform_vec(&mut r, 4, -0.3, 0.3);
        let w = uniform_vec(&mut r, 4, -1.0, 1.0);
        let m = x_metric(&g);
        let a = q_form(base.as_ref(), &m, &u, &w, &[1e-2], 50, seed).unwrap();
        let b = q_form(&sum, &m, &u, &w, &[1e-2], 50, seed).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-6 * (1.0 + a.value.abs()));
    }

    #[test]
    fn bracket_contains_true_slope(seed in 0u64..1000) {
        let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
        let f = random_quadratic(4, seed);
        let u = uniform_vec(&mut rng(seed + 1), 4, -1.0, 1.0);
        let want = dual_x(&g, &f.gradient(&u).unwrap());
        let s = strong_slope(&f, &x_metric(&g), &u, &[1e-3, 1e-4], 64, seed).unwrap();
        prop_assert!(0.0 <= s.lower && s.lower <= s.upper + s.tolerance());
        prop_assert!(s.lower <= want + 1e-9 && want <= s.upper + s.tolerance());
    }
}
