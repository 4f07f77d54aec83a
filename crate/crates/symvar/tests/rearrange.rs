use std::sync::Arc;

use proptest::prelude::*;
use symvar::grid::theta;
use symvar::rearrange::{
    approx_symmetrize, find_polarizer, is_family_fixed, polarize, schwarz, schwarz_values, PolarizerSpec,
};
use symvar::sampling::{rng, uniform_vec};
use symvar::{make_grid, GridFunction, GridSpace, NormKind, SymError};

/// Sort-and-assign by (|center|, index), written from scratch.
fn schwarz_oracle(space: &GridSpace, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut cells: Vec<usize> = (0..n).collect();
    let r2 = |i: usize| space.center(i).iter().map(|c| c * c).sum::<f64>();
    cells.sort_by(|&a, &b| r2(a).partial_cmp(&r2(b)).unwrap().then(a.cmp(&b)));
    let mut vals: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out = vec![0.0; n];
    for (c, v) in cells.into_iter().zip(vals) {
        out[c] = v;
    }
    out
}

fn sorted(u: &[f64]) -> Vec<f64> {
    let mut v = u.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn half_plane(space: &GridSpace) -> &symvar::rearrange::Polarizer {
    find_polarizer(space, &PolarizerSpec { axis: vec![1.0], offset: 0.0 }).expect("{x <= 0} is registered")
}

#[test]
fn single_swap_across_origin() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let u = GridFunction::new(&g, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    let out = polarize(&u, half_plane(&g)).unwrap();
    assert_eq!(out.values(), &[0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn symmetric_decreasing_is_fixed_by_every_polarizer() {
    for (d, n) in [(1, 8), (2, 4), (2, 6)] {
        let g = make_grid(d, n, 1.0, 2.0, 3.0).unwrap();
        let mut r = rng(5);
        let u = schwarz_values(&g, &uniform_vec(&mut r, g.n_cells(), 0.0, 1.0));
        let f = GridFunction::new(&g, u.clone()).unwrap();
        for h in g.family() {
            assert_eq!(polarize(&f, h).unwrap().values(), u.as_slice());
        }
    }
}

#[test]
fn polarizer_from_another_space_rejected() {
    let a = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let b = make_grid(1, 4, 2.0, 2.0, 3.0).unwrap();
    let u = GridFunction::zeros(&a);
    assert!(matches!(polarize(&u, &b.family()[0]), Err(SymError::SpaceMismatch)));
}

#[test]
fn contractive_on_random_pairs() {
    let g = make_grid(1, 10, 1.0, 2.0, 3.0).unwrap();
    let mut r = rng(17);
    for i in 0..200 {
        let u = uniform_vec(&mut r, 10, 0.0, 1.0);
        let v = uniform_vec(&mut r, 10, 0.0, 1.0);
        let h = &g.family()[i % g.family().len()];
        let lhs = g.dist(NormKind::V, &h.apply(&u), &h.apply(&v));
        assert!(lhs <= g.dist(NormKind::V, &u, &v) + 1e-12);
    }
}

#[test]
fn schwarz_examples() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let u = GridFunction::new(&g, vec![0.2, 0.0, 0.9, 0.5]).unwrap();
    assert_eq!(schwarz(&u).values(), &[0.2, 0.9, 0.5, 0.0]);
    assert_eq!(schwarz(&u).values(), schwarz_oracle(&g, u.values()).as_slice());
    for (d, n) in [(1, 6), (2, 4)] {
        let g = make_grid(d, n, 1.0, 2.0, 3.0).unwrap();
        let inner = schwarz_oracle(&g, &{
            let mut e = vec![0.0; g.n_cells()];
            e[0] = 1.0;
            e
        });
        for k in 0..g.n_cells() {
            let mut e = vec![0.0; g.n_cells()];
            e[k] = 1.0;
            assert_eq!(schwarz_values(&g, &e), inner);
        }
        // the innermost cell by index carries the value
        let target = inner.iter().position(|&x| x == 1.0).unwrap();
        let r = |i: usize| g.center(i).iter().map(|c| c * c).sum::<f64>();
        assert!((0..g.n_cells()).all(|i| r(i) > r(target) || (r(i) == r(target) && i >= target)));
    }
}

#[test]
fn schwarz_matches_oracle_and_is_idempotent() {
    let mut r = rng(23);
    for (d, n) in [(1, 8), (1, 64), (2, 4), (2, 8)] {
        let g = make_grid(d, n, 1.0, 2.0, 3.0).unwrap();
        for _ in 0..100 {
            let u = uniform_vec(&mut r, g.n_cells(), -1.0, 1.0);
            let s = schwarz_values(&g, &u);
            assert_eq!(s, schwarz_oracle(&g, &u));
            assert_eq!(schwarz_values(&g, &s), s);
        }
    }
}

#[test]
fn approx_on_symmetric_input_is_empty() {
    let g = make_grid(1, 8, 1.0, 2.0, 3.0).unwrap();
    let u = GridFunction::new(&g, schwarz_values(&g, &[0.1, 0.7, 0.3, 0.0, 0.9, 0.2, 0.4, 0.5])).unwrap();
    let (out, seq) = approx_symmetrize(&u, 1e-3).unwrap();
    assert!(seq.is_empty());
    assert_eq!(out.values(), u.values());
}

#[test]
fn approx_single_swap() {
    let g = make_grid(1, 4, 1.0, 2.0, 3.0).unwrap();
    let u = GridFunction::new(&g, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    let (out, seq) = approx_symmetrize(&u, 0.01).unwrap();
    assert_eq!(seq, vec![PolarizerSpec { axis: vec![1.0], offset: 0.0 }]);
    assert_eq!(out.values(), &[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(out.values(), schwarz(&u).values());
    assert!(matches!(approx_symmetrize(&u, 0.0), Err(SymError::InvalidArgument(_))));
}

#[test]
fn approx_converges_in_one_dimension() {
    let mut r = rng(29);
    for n in [4, 16, 64] {
        let g = make_grid(1, n, 1.0, 2.0, 3.0).unwrap();
        for _ in 0..20 {
            let u = GridFunction::new(&g, uniform_vec(&mut r, n, 0.0, 1.0)).unwrap();
            let (out, _) = approx_symmetrize(&u, 1e-3).unwrap();
            assert!(g.dist(NormKind::V, out.values(), schwarz(&u).values()) < 1e-3);
            assert!(out.in_cone());
            assert_eq!(schwarz(&out).values(), schwarz(&u).values());
        }
    }
}

/// Every u with values in {0, 1, 2}: u = u* exactly when the family fixes u.
#[test]
fn fixed_points_agree_by_exhaustion_in_one_dimension() {
    for n in [2, 4, 6, 8] {
        let g = make_grid(1, n, 1.0, 2.0, 3.0).unwrap();
        for code in 0..3usize.pow(n as u32) {
            let u: Vec<f64> = (0..n).map(|i| ((code / 3usize.pow(i as u32)) % 3) as f64).collect();
            assert_eq!(schwarz_values(&g, &u) == u, is_family_fixed(&g, &u), "n={n} u={u:?}");
        }
    }
}

/// In 2D a fixed point of the rearrangement is fixed by the family, but
/// the family also fixes orderings of an 8-cell orbit that differ from the
/// index tie-break.
#[test]
fn fixed_points_in_two_dimensions() {
    let g = make_grid(2, 4, 1.0, 2.0, 3.0).unwrap();
    let r2 = |i: usize| g.center(i).iter().map(|c| c * c).sum::<f64>();
    let inner: Vec<usize> = (0..16).filter(|&i| r2(i) < 0.2).collect();
    let orbit: Vec<usize> = (0..16).filter(|&i| (r2(i) - 0.625).abs() < 1e-9).collect();
    assert_eq!((inner.len(), orbit.len()), (4, 8));
    let mut perm: Vec<usize> = (0..8).collect();
    let (mut fixed, mut agree) = (0, 0);
    loop {
        let mut u = vec![0.0; 16];
        for &c in &inner {
            u[c] = 10.0;
        }
        for (k, &c) in orbit.iter().enumerate() {
            u[c] = 1.0 + perm[k] as f64;
        }
        let sym = schwarz_values(&g, &u) == u;
        let fam = is_family_fixed(&g, &u);
        assert!(!sym || fam);
        fixed += fam as usize;
        agree += sym as usize;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    assert_eq!(agree, 1);
    assert!(fixed > 1, "the family fixes {fixed} orderings");
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn spaces() -> Vec<Arc<GridSpace>> {
    vec![
        make_grid(1, 4, 1.0, 2.0, 3.0).unwrap(),
        make_grid(1, 16, 1.0, 2.0, 3.0).unwrap(),
        make_grid(1, 64, 1.0, 2.0, 3.0).unwrap(),
        make_grid(2, 4, 1.0, 2.0, 3.0).unwrap(),
        make_grid(2, 8, 1.0, 2.0, 3.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn polarization_axioms(g in 0usize..5, k in any::<usize>(), seed in any::<u64>()) {
        let space = &spaces()[g];
        let h = &space.family()[k % space.family().len()];
        let mut r = rng(seed);
        let u = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
        let v = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
        let uh = h.apply(&u);
        prop_assert_eq!(sorted(&uh), sorted(&u));
        prop_assert_eq!(h.apply(&uh), uh.clone());
        prop_assert_eq!(schwarz_values(space, &uh), schwarz_values(space, &u));
        prop_assert!(uh.iter().all(|&x| x >= 0.0));
        let lhs = space.dist(NormKind::V, &uh, &h.apply(&v));
        prop_assert!(lhs <= space.dist(NormKind::V, &u, &v) + 1e-12);
    }

    #[test]
    fn extended_contractivity(g in 0usize..5, k in any::<usize>(), seed in any::<u64>()) {
        let space = &spaces()[g];
        let h = &space.family()[k % space.family().len()];
        let mut r = rng(seed);
        let u = uniform_vec(&mut r, space.n_cells(), -1.0, 1.0);
        let v = uniform_vec(&mut r, space.n_cells(), -1.0, 1.0);
        let d = space.dist(NormKind::V, &u, &v);
        let c = space.c_theta();
        prop_assert!(space.dist(NormKind::V, &h.apply(&theta(&u)), &h.apply(&theta(&v))) <= c * d + 1e-12);
        prop_assert!(space.dist(NormKind::V, &schwarz_values(space, &u), &schwarz_values(space, &v)) <= c * d + 1e-12);
    }

    #[test]
    fn schwarz_equimeasurable_with_theta(g in 0usize..5, seed in any::<u64>()) {
        let space = &spaces()[g];
        let u = uniform_vec(&mut rng(seed), space.n_cells(), -1.0, 1.0);
        prop_assert_eq!(sorted(&schwarz_values(space, &u)), sorted(&theta(&u)));
    }

    #[test]
    fn rearrangement_does_not_raise_x_norm(g in 0usize..5, seed in any::<u64>()) {
        let space = &spaces()[g];
        let u = uniform_vec(&mut rng(seed), space.n_cells(), 0.0, 1.0);
        prop_assert!(space.norm_x(&schwarz_values(space, &u)) <= space.norm_x(&u) + 1e-9);
    }

    #[test]
    fn approx_preserves_target(n in 1usize..17, seed in any::<u64>()) {
        let space = make_grid(1, 2 * n, 1.0, 2.0, 3.0).unwrap();
        let u = GridFunction::new(&space, uniform_vec(&mut rng(seed), 2 * n, 0.0, 1.0)).unwrap();
        let (out, _) = approx_symmetrize(&u, 1e-3).unwrap();
        prop_assert!(out.in_cone());
        prop_assert_eq!(schwarz(&out).into_values(), schwarz(&u).into_values());
        prop_assert!(space.dist(NormKind::V, out.values(), schwarz(&u).values()) < 1e-3);
    }
}
