use std::sync::Arc;

use proptest::prelude::*;
use symvar::grid::{theta, FunctionRecord, GridSpec};
use symvar::{make_grid, GridFunction, GridSpace, NormKind, SymError};

/// Independent X norm: neighbours found from cell centers, zero outside.
fn x_norm_oracle(space: &GridSpace, u: &[f64]) -> f64 {
    let h = space.spacing();
    let m = space.cell_measure();
    let p = space.p();
    let n = space.n_cells();
    let find = |c: &[f64]| (0..n).find(|&j| space.center(j).iter().zip(c).all(|(a, b)| (a - b).abs() < 1e-9 * h));
    let mut s: f64 = u.iter().map(|x| x.abs().powf(p) * m).sum();
    for axis in 0..space.dimension() {
        for i in 0..n {
            // forward edge from i, plus the ghost edge entering the first cell
            let mut fwd = space.center(i).to_vec();
            fwd[axis] += h;
            let next = find(&fwd).map_or(0.0, |j| u[j]);
            s += ((next - u[i]) / h).abs().powf(p) * m;
            let mut back = space.center(i).to_vec();
            back[axis] -= h;
            if find(&back).is_none() {
                s += (u[i] / h).abs().powf(p) * m;
            }
        }
    }
    s.powf(1.0 / p)
}

fn lr(space: &GridSpace, u: &[f64], r: f64) -> f64 {
    u.iter().map(|x| x.abs().powf(r) * space.cell_measure()).sum::<f64>().powf(1.0 / r)
}

#[test]
fn one_dimensional_cells() {
    let g = make_grid(1, 4, 1.0, 2.0, 4.0).unwrap();
    let c: Vec<f64> = (0..4).map(|i| g.center(i)[0]).collect();
    assert_eq!(c, vec![-0.75, -0.25, 0.25, 0.75]);
    assert_eq!(g.cell_measure(), 0.5);
    let g = make_grid(1, 2, 1.0, 2.0, 4.0).unwrap();
    assert_eq!((g.center(0)[0], g.center(1)[0]), (-0.5, 0.5));
}

#[test]
fn two_dimensional_cells() {
    let g = make_grid(2, 4, 1.0, 2.0, 4.0).unwrap();
    assert_eq!(g.n_cells(), 16);
    assert_eq!(g.cell_measure(), 0.25);
    // the cell set is a product of the 1D centers
    let mut pts: Vec<(f64, f64)> = (0..16).map(|i| (g.center(i)[0], g.center(i)[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let axis = [-0.75, -0.25, 0.25, 0.75];
    let expect: Vec<(f64, f64)> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect();
    assert_eq!(pts, expect);
}

#[test]
fn bad_grids_rejected() {
    assert!(matches!(make_grid(1, 3, 1.0, 2.0, 4.0), Err(SymError::InvalidGrid(_))));
    assert!(matches!(make_grid(1, 4, 1.0, 1.0, 4.0), Err(SymError::InvalidExponent(_))));
    assert!(matches!(make_grid(1, 4, 1.0, 0.5, 4.0), Err(SymError::InvalidExponent(_))));
}

#[test]
fn x_norm_two_cells() {
    let g = make_grid(1, 2, 1.0, 2.0, 4.0).unwrap();
    assert_eq!((g.spacing(), g.cell_measure()), (1.0, 1.0));
    assert!((g.norm_x(&[0.0, 1.0]) - 3f64.sqrt()).abs() < 1e-14);
    assert_eq!(g.norm_x(&[0.0, 0.0]), 0.0);
}

#[test]
fn x_norm_matches_oracle() {
    let mut r = symvar::sampling::rng(3);
    for (d, n, p) in [(1, 4, 2.0), (1, 10, 3.0), (2, 4, 2.0), (2, 6, 1.5)] {
        let g = make_grid(d, n, 1.0, p, 4.0).unwrap();
        for _ in 0..20 {
            let u = symvar::sampling::uniform_vec(&mut r, g.n_cells(), -2.0, 2.0);
            let (a, b) = (g.norm_x(&u), x_norm_oracle(&g, &u));
            assert!((a - b).abs() < 1e-12 * (1.0 + b), "{d}D n={n} p={p}: {a} vs {b}");
        }
    }
}

#[test]
fn v_and_w_norms() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let m = g.cell_measure();
    let e = vec![0.0, 1.0, 0.0, 0.0];
    let want = m.powf(1.0 / g.p()).max(m.powf(1.0 / g.q_v()));
    assert!((g.norm_v(&e) - want).abs() < 1e-15);
    assert_eq!(g.norm_w(&[0.0; 4]), 0.0);
    // unit total measure: radius 1/2 gives total length 1
    let g = make_grid(1, 8, 0.5, 2.0, 3.0).unwrap();
    let one = vec![1.0; 8];
    for kind in [NormKind::V, NormKind::W, NormKind::L(2.0), NormKind::L(7.0)] {
        assert!((g.norm(kind, &one) - 1.0).abs() < 1e-14, "{kind}");
    }
}

#[test]
fn theta_examples() {
    assert_eq!(theta(&[-1.0, 2.0]), vec![1.0, 2.0]);
    assert_eq!(theta(&[0.0, 3.5]), vec![0.0, 3.5]);
}

#[test]
fn theta_lipschitz_on_pairs() {
    let g = make_grid(1, 8, 1.0, 2.0, 3.0).unwrap();
    let mut r = symvar::sampling::rng(11);
    for _ in 0..100 {
        let u = symvar::sampling::uniform_vec(&mut r, 8, -1.0, 1.0);
        let v = symvar::sampling::uniform_vec(&mut r, 8, -1.0, 1.0);
        let lhs = g.dist(NormKind::V, &theta(&u), &theta(&v));
        assert!(lhs <= g.dist(NormKind::V, &u, &v) + 1e-15);
    }
}

#[test]
fn grid_function_validation_and_record() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    assert!(GridFunction::new(&g, vec![1.0; 3]).is_err());
    assert!(GridFunction::new(&g, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
    let u = GridFunction::new(&g, vec![0.5, -1.0, 2.0, 0.0]).unwrap();
    let json = serde_json::to_string(&u.to_record()).unwrap();
    let back: FunctionRecord = serde_json::from_str(&json).unwrap();
    let w = GridFunction::from_record(&back).unwrap();
    assert_eq!(w.values(), u.values());
    assert_eq!(w.norm_x(), u.norm_x());
    let spec: GridSpec = serde_json::from_str(r#"{"dimension":1,"n":4}"#).unwrap();
    assert_eq!(spec.build().unwrap().n_cells(), 4);
    assert!(serde_json::from_str::<GridSpec>(r#"{"dimension":1,"n":4,"cells":3}"#).is_err());
}

fn grids() -> Vec<Arc<GridSpace>> {
    vec![
        make_grid(1, 4, 1.0, 2.0, 3.0).unwrap(),
        make_grid(1, 12, 2.0, 3.0, 4.0).unwrap(),
        make_grid(2, 4, 1.0, 2.0, 3.0).unwrap(),
    ]
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_homogeneous_and_subadditive(g in 0usize..3, c in -4.0f64..4.0, seed in any::<u64>()) {
        let space = &grids()[g];
        let mut r = symvar::sampling::rng(seed);
        let u = symvar::sampling::uniform_vec(&mut r, space.n_cells(), -3.0, 3.0);
        let v = symvar::sampling::uniform_vec(&mut r, space.n_cells(), -3.0, 3.0);
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        for kind in [NormKind::X, NormKind::V, NormKind::W] {
            let nu = space.norm(kind, &u);
            prop_assert!((space.norm(kind, &cu) - c.abs() * nu).abs() <= 1e-12 * (1.0 + c.abs() * nu));
            prop_assert!(space.norm(kind, &s) <= nu + space.norm(kind, &v) + 1e-12);
        }
    }

    #[test]
    fn v_norm_is_max_of_lebesgue_norms(u in values(12)) {
        let space = &grids()[1];
        let want = lr(space, &u, space.p()).max(lr(space, &u, space.q_v()));
        prop_assert!((space.norm_v(&u) - want).abs() <= 1e-12 * (1.0 + want));
        let w = lr(space, &u, space.q_w());
        prop_assert!((space.norm_w(&u) - w).abs() <= 1e-12 * (1.0 + w));
    }

    #[test]
    fn embedding_constant_bounds_ratio(g in 0usize..3, seed in any::<u64>()) {
        let space = &grids()[g];
        let mut r = symvar::sampling::rng(seed);
        let u = symvar::sampling::uniform_vec(&mut r, space.n_cells(), -3.0, 3.0);
        let k = space.k_embed();
        prop_assert!(space.norm_v(&u) <= k * space.norm_x(&u) * (1.0 + 1e-9));
    }

    #[test]
    fn theta_idempotent_and_identity_on_cone(u in values(8)) {
        let t = theta(&u);
        prop_assert_eq!(theta(&t), t.clone());
        prop_assert!(t.iter().all(|&x| x >= 0.0));
        let pos: Vec<f64> = u.iter().map(|x| x.abs()).collect();
        prop_assert_eq!(theta(&pos), pos);
    }

    #[test]
    fn ordered_exponents(d in 1usize..3, half in 1usize..5, p in 1.1f64..4.0) {
        let n = 2 * half;
        let q_w = p + 0.5;
        if let Ok(space) = make_grid(d, n, 1.0, p, q_w) {
            prop_assert!(space.p() < space.q_w() && space.q_w() <= space.q_v());
            prop_assert!(space.cell_measure() > 0.0);
            prop_assert_eq!(space.c_theta(), 1.0);
        }
    }
}
