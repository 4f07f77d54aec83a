//! Ratio maximization: embedding constants and dual norms.

use crate::grid::{dot, GridSpace, NormKind};

/// Relative inflation applied to the probe maximum of ||u||_V / ||u||_X.
pub const K_SAFETY: f64 = 1e-6;

/// Maximizes N(v)/D(v) for positively homogeneous N, D by preconditioned
/// ascent with backtracking. Returns the ratio and a maximizer with D = 1.
fn ascend_ratio(
    space: &GridSpace,
    num: &dyn Fn(&[f64]) -> (f64, Option<Vec<f64>>),
    den: &dyn Fn(&[f64]) -> (f64, Option<Vec<f64>>),
    start: &[f64],
    iters: usize,
) -> (f64, Vec<f64>) {
    let normalize = |v: &[f64]| -> Option<Vec<f64>> {
        let d = den(v).0;
        (d > 0.0 && d.is_finite()).then(|| v.iter().map(|x| x / d).collect())
    };
    let ratio = |v: &[f64]| num(v).0 / den(v).0;
    let mut v = match normalize(start) {
        Some(v) => v,
        None => return (0.0, start.to_vec()),
    };
    let mut best = ratio(&v);
    let mut tau = 1.0;
    let mut flat = 0;
    for _ in 0..iters {
        let (n, gn) = num(&v);
        let (d, gd) = den(&v);
        let (gn, gd) = match (gn, gd) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        let grad: Vec<f64> = gn.iter().zip(&gd).map(|(a, b)| (a * d - n * b) / (d * d)).collect();
        let dir = space.solve_gram_x(&grad);
        let scale = crate::grid::euclid(&v) / crate::grid::euclid(&dir).max(1e-300);
        let mut improved = false;
        tau *= 4.0;
        for _ in 0..60 {
            let cand: Vec<f64> = v.iter().zip(&dir).map(|(a, b)| a + tau * scale * b).collect();
            if let Some(c) = normalize(&cand) {
                let r = ratio(&c);
                if r > best {
                    let gain = (r - best) / best.abs().max(1e-300);
                    best = r;
                    v = c;
                    improved = true;
                    flat = if gain < 1e-14 { flat + 1 } else { 0 };
                    break;
                }
            }
            tau *= 0.5;
        }
        if !improved || flat >= 3 {
            break;
        }
    }
    (best, v)
}

fn probe_starts(space: &GridSpace) -> Vec<Vec<f64>> {
    let nc = space.n_cells();
    let r = space.radius();
    let mut starts = Vec::new();
    let mut last_key = None;
    for &i in space.radial_order() {
        let key = space.radius_key(i);
        if last_key != Some(key) {
            let mut e = vec![0.0; nc];
            e[i] = 1.0;
            starts.push(e);
            last_key = Some(key);
        }
    }
    starts.push(vec![1.0; nc]);
    let modes: &[usize] = if space.dimension() == 1 { &[1, 2, 3, 4] } else { &[1, 2, 3] };
    for &k in modes {
        let ls: &[usize] = if space.dimension() == 1 { &[0] } else { modes };
        for &l in ls {
            starts.push(
                (0..nc)
                    .map(|i| {
                        let c = space.center(i);
                        let sx = (k as f64 * std::f64::consts::PI * (c[0] + r) / (2.0 * r)).sin();
                        let sy = if l == 0 {
                            1.0
                        } else {
                            (l as f64 * std::f64::consts::PI * (c[1] + r) / (2.0 * r)).sin()
                        };
                        sx * sy
                    })
                    .collect(),
            );
        }
    }
    starts.push(
        (0..nc)
            .map(|i| {
                let c = space.center(i);
                (r * r - c.iter().map(|x| x * x).sum::<f64>()).max(0.0)
            })
            .collect(),
    );
    starts
}

pub(crate) fn estimate_k(space: &GridSpace) -> f64 {
    estimate_ratio(space, NormKind::X)
}

/// Probe maximum of ||u||_V / ||u||_kind, inflated by `K_SAFETY`.
pub(crate) fn estimate_ratio(space: &GridSpace, kind: NormKind) -> f64 {
    let den = |v: &[f64]| (space.norm(kind, v), space.norm_grad(kind, v));
    let mut best: f64 = 0.0;
    for r in [space.p(), space.q_v()] {
        let num = |v: &[f64]| (space.lr(v, r), space.norm_grad(NormKind::L(r), v));
        for s in probe_starts(space) {
            best = best.max(ascend_ratio(space, &num, &den, &s, 300).0);
        }
    }
    best * (1.0 + K_SAFETY)
}

/// Dual norm of w -> g.w with a unit maximizer.
pub(crate) fn dual_norm(space: &GridSpace, kind: NormKind, g: &[f64]) -> (f64, Vec<f64>) {
    let nc = g.len();
    if g.iter().all(|&x| x == 0.0) {
        return (0.0, vec![0.0; nc]);
    }
    let m = space.cell_measure();
    let lebesgue = |r: f64| -> (f64, Vec<f64>) {
        let h: Vec<f64> = g.iter().map(|x| x / m).collect();
        if r == 1.0 {
            let (i, hi) = h
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, &x)| if x.abs() > acc.1.abs() { (i, x) } else { acc });
            let mut v = vec![0.0; nc];
            v[i] = hi.signum() / m;
            return (hi.abs(), v);
        }
        let rc = r / (r - 1.0);
        let val = space.lr(&h, rc);
        let v: Vec<f64> = h.iter().map(|x| x.signum() * x.abs().powf(rc - 1.0)).collect();
        let nv = space.lr(&v, r);
        (val, v.into_iter().map(|x| x / nv).collect())
    };
    match kind {
        NormKind::L(r) => lebesgue(r),
        NormKind::W => lebesgue(space.q_w()),
        NormKind::X if space.p() == 2.0 => {
            let z = space.solve_gram_x(g);
            let val = dot(g, &z).max(0.0).sqrt();
            (val, z.into_iter().map(|x| x / val).collect())
        }
        _ => {
            let num = |v: &[f64]| (dot(g, v), Some(g.to_vec()));
            let den = |v: &[f64]| (space.norm(kind, v), space.norm_grad(kind, v));
            let mut starts = vec![g.to_vec(), space.solve_gram_x(g)];
            if kind == NormKind::V {
                starts.push(lebesgue(space.p()).1);
                starts.push(lebesgue(space.q_v()).1);
            }
            let mut best = (f64::NEG_INFINITY, vec![0.0; nc]);
            for s in starts {
                let r = ascend_ratio(space, &num, &den, &s, 2000);
                if r.0 > best.0 {
                    best = r;
                }
            }
            best
        }
    }
}
