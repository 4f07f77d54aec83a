//! Drops and petals: exact membership predicates, the inclusions of a ball
//! and of a drop into a petal, and the symmetric drop and petal points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{Ball, Domain, DomainRef, DropSet, Intersection};
use crate::error::{Result, SymError};
use crate::functional::{FnFunctional, FunctionalRef, SymmetryClass};
use crate::grid::euclid;
use crate::metric::Metric;
use crate::principles::engine::{inf_estimate, level_point, Setup};
use crate::principles::{symmetric_ekeland, Certificate, EkelandVariant};
use crate::rearrange::{is_family_fixed, symmetry_residual_values};
use crate::sampling::{derive_seed, gaussian_vec, rng, uniform_vec};

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn tol(metric: &dyn Metric, u: &[f64]) -> f64 {
    1e-10 * (1.0 + metric.norm(u))
}

/// Drop(x, B) for the metric ball B = {b : ||b - center|| <= radius}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub vertex: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Petal_eps(x0, x1) = {y : eps ||y - x0|| + ||y - x1|| <= ||x0 - x1||}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Petal {
    pub epsilon: f64,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
}

/// y in Drop(x, B) iff min over t in [0, 1] of ||(y - x) - t (c - x)|| - t r
/// is <= 0; the map is convex in t, so a golden-section search finds it.
pub fn drop_membership(y: &[f64], d: &Drop, metric: &dyn Metric) -> bool {
    let phi = |t: f64| metric.dist(y, &lerp(&d.vertex, &d.center, t)) - t * d.radius;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-13 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if phi(c) <= phi(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let best = phi(0.5 * (a + b)).min(phi(0.0)).min(phi(1.0));
    best <= tol(metric, y)
}

pub fn petal_membership(y: &[f64], p: &Petal, metric: &dyn Metric) -> bool {
    let d = metric.dist(&p.x0, &p.x1);
    p.epsilon * metric.dist(y, &p.x0) + metric.dist(y, &p.x1) <= d + 1e-12 * (1.0 + d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub radius: f64,
    pub ball_samples: usize,
    pub ball_failures: usize,
    pub drop_samples: usize,
    pub drop_failures: usize,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.ball_failures == 0 && self.drop_failures == 0
    }
}

/// Boundary samples of the ball of radius (1 - eps)/(1 + eps) ||x0 - x1||
/// around x1 and of the drop of x0 over it, each tested against the petal.
pub fn petal_inclusions(p: &Petal, metric: &dyn Metric, n: usize, seed: u64) -> InclusionReport {
    let eps = p.epsilon;
    let r = (1.0 - eps) / (1.0 + eps) * metric.dist(&p.x0, &p.x1);
    let dim = p.x0.len();
    let mut g = rng(derive_seed(seed, 0x9E7A));
    let mut rep = InclusionReport { radius: r, ball_samples: 0, ball_failures: 0, drop_samples: 0, drop_failures: 0 };
    for _ in 0..n {
        let d = gaussian_vec(&mut g, dim);
        let dn = metric.norm(&d);
        if !(dn > 0.0) {
            continue;
        }
        let b: Vec<f64> = p.x1.iter().zip(&d).map(|(c, z)| c + r * z / dn).collect();
        rep.ball_samples += 1;
        if !petal_membership(&b, p, metric) {
            rep.ball_failures += 1;
        }
        // a boundary point of the drop: on a segment from x0 to the sphere
        let t = uniform_vec(&mut g, 1, 0.0, 1.0)[0];
        let w = lerp(&p.x0, &b, t);
        rep.drop_samples += 1;
        if !petal_membership(&w, p, metric) {
            rep.drop_failures += 1;
        }
    }
    rep
}

/// Uniform point of a Euclidean ball (within its subspace when it has a basis).
fn sample_ball(ball: &Ball, r: &mut crate::sampling::SeededRng) -> Vec<f64> {
    let n = ball.center.len();
    let dirs: Vec<Vec<f64>> = match &ball.basis {
        Some(b) => b.clone(),
        None => (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect(),
    };
    let k = dirs.len();
    let z = gaussian_vec(r, k);
    let zn = euclid(&z).max(1e-300);
    let s = ball.radius * uniform_vec(r, 1, 0.0, 1.0)[0].powf(1.0 / k as f64);
    let mut out = ball.center.clone();
    for (c, d) in z.iter().zip(&dirs) {
        for (o, di) in out.iter_mut().zip(d) {
            *o += s * c / zn * di;
        }
    }
    out
}

/// Distance between two convex sets by alternating projections, with the
/// final pair; the distance is measured in the metric.
pub fn set_distance(a: &dyn Domain, b: &dyn Domain, start: &[f64], metric: &dyn Metric) -> (f64, Vec<f64>, Vec<f64>) {
    let mut pa = a.project(start);
    let mut pb = b.project(&pa);
    for _ in 0..10_000 {
        let na = a.project(&pb);
        let nb = b.project(&na);
        let moved = euclid(&crate::grid::sub(&na, &pa)) + euclid(&crate::grid::sub(&nb, &pb));
        pa = na;
        pb = nb;
        if moved <= 1e-15 * (1.0 + euclid(&pa)) {
            break;
        }
    }
    (metric.dist(&pa, &pb), pa, pb)
}

#[derive(Clone)]
pub struct DropProblem {
    pub x: Vec<f64>,
    pub ball: Ball,
    pub c: DomainRef,
    pub epsilon: f64,
    /// Samples of Drop(xi, B) n C \ {xi}.
    pub minimality_samples: usize,
}

/// A point xi of Drop(x, B) n C whose own drop meets C only at xi, with
/// ||xi - xi*||_V < eps: variant I (sigma = rho = eps) on S' = Drop(x, B) n C
/// for f(u) = dist(u, B). B must lie in the fixed set of the family; f is the
/// Euclidean distance rescaled by the metric length of a unit cell vector,
/// which is the metric distance for L^p-type metrics with p = 2.
pub fn symmetric_drop_point(problem: &DropProblem, setup: &Setup) -> Result<Certificate> {
    let eps = problem.epsilon;
    if !(eps > 0.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, eps0]".into() });
    }
    let space = &setup.space;
    let metric = setup.metric.as_ref();
    let ball = problem.ball.clone();
    let c = problem.c.clone();
    if !c.contains(&problem.x) {
        return Err(SymError::InvalidArgument("x must lie in C".into()));
    }
    if !is_family_fixed(space, &ball.center) || ball.basis.as_ref().map_or(space.n_cells() > 1, |b| b.iter().any(|v| !is_family_fixed(space, v))) {
        return Err(SymError::NotSymmetricInput("B must lie in the fixed set of every registered polarizer".into()));
    }
    let (dbc, _, _) = set_distance(&ball, c.as_ref(), &problem.x, metric);
    let diam = match &ball.basis {
        Some(b) => b.iter().map(|v| metric.norm(v) * ball.diameter()).fold(0.0, f64::max),
        None => (0..space.n_cells())
            .map(|i| {
                let mut e = vec![0.0; space.n_cells()];
                e[i] = ball.diameter();
                metric.norm(&e)
            })
            .fold(0.0, f64::max),
    };
    if !(dbc > 1e-12) {
        return Err(SymError::SeparationViolated(format!("d(B, C) estimate {dbc:.3e} is not positive")));
    }
    if !(eps * diam < (1.0 - eps) * dbc) {
        return Err(SymError::SeparationViolated(format!(
            "eps diam(B) = {:.6e} is not below (1 - eps) d(B, C) = {:.6e}",
            eps * diam,
            (1.0 - eps) * dbc
        )));
    }
    let drop_x = Arc::new(DropSet { vertex: problem.x.clone(), ball: ball.clone() });
    let s_prime: DomainRef = Arc::new(Intersection::new(vec![drop_x, c.clone()]));
    let (b2, m2) = (ball.clone(), setup.metric.clone());
    let scale = {
        // metric length of a unit Euclidean step along the first cell
        let mut e = vec![0.0; space.n_cells()];
        e[0] = 1.0;
        m2.norm(&e)
    };
    let f: FunctionalRef = Arc::new(
        FnFunctional::new("distance to B", move |u: &[f64]| scale * b2.distance(u))
            .with_class(SymmetryClass::PolarizationNonincreasing)
            .with_lower_bound(0.0),
    );
    let ds = setup.clone().with_domain(s_prime.clone());
    let inf = inf_estimate(f.as_ref(), &ds, &problem.x);
    let target = inf.value.min(f.eval(&problem.x)) + 0.5 * eps * eps;
    let mut start = level_point(f.as_ref(), &inf.argmin, &problem.x, target);
    if !s_prime.contains(&start) {
        start = s_prime.project(&start);
    }
    let ds = ds.with_anchors([setup.anchors.clone(), vec![inf.argmin.clone()]].concat());
    let mut cert = symmetric_ekeland(f.as_ref(), &ds, &start, eps, eps, EkelandVariant::I)?;
    let xi = cert.v.clone();

    let mut r = rng(derive_seed(setup.seed, 0xD809));
    let mut hits = 0usize;
    let n = problem.minimality_samples;
    for _ in 0..n {
        let b = sample_ball(&ball, &mut r);
        let u = uniform_vec(&mut r, 1, 0.0, 1.0)[0];
        let t = 10f64.powf(-6.0 * (1.0 - u));
        let w = lerp(&xi, &b, t);
        if metric.dist(&w, &xi) > tol(metric, &xi) && c.contains(&w) {
            hits += 1;
        }
    }
    cert.measure("symmetry: ||xi - xi*||_V", symmetry_residual_values(space, &xi), eps);
    cert.measure("minimality: sampled points of Drop(xi, B) n C other than xi", hits as f64, 0.0);
    cert.measure("membership: xi outside Drop(x, B) n C", if s_prime.contains(&xi) { 0.0 } else { 1.0 }, 0.0);
    cert.report("d(B, C) estimate", dbc);
    cert.report("diam(B)", diam);
    cert.report("minimality samples", n as f64);
    cert.notes.push("d(B, C) estimated by alternating projections".into());
    cert.seal();
    Ok(cert)
}

#[derive(Clone)]
pub struct PetalProblem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub c: DomainRef,
    pub epsilon: f64,
    pub minimality_samples: usize,
}

/// A point xi of Petal_eps(x, y) n C whose own petal toward y meets C only
/// at xi: variant V (sigma = rho = eps) on f(u) = ||u - y|| restricted to C.
pub fn symmetric_petal_point(problem: &PetalProblem, setup: &Setup) -> Result<Certificate> {
    let eps = problem.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, 1)".into() });
    }
    let space = &setup.space;
    let metric = setup.metric.clone();
    let (x, y, c) = (problem.x.clone(), problem.y.clone(), problem.c.clone());
    if !space.is_nonnegative(&x) || !is_family_fixed(space, &x) {
        return Err(SymError::NotSymmetricInput("x must be fixed by every registered polarizer".into()));
    }
    if !space.is_nonnegative(&y) || !is_family_fixed(space, &y) {
        return Err(SymError::NotSymmetricInput("y must be fixed by every registered polarizer".into()));
    }
    if !c.contains(&x) {
        return Err(SymError::InvalidArgument("x must lie in C".into()));
    }
    if c.contains(&y) {
        return Err(SymError::InvalidArgument("y must lie outside C".into()));
    }
    let (c2, y2, m2) = (c.clone(), y.clone(), metric.clone());
    let f: FunctionalRef = Arc::new(
        FnFunctional::new("distance to y on C", move |u: &[f64]| if c2.contains(u) { m2.dist(u, &y2) } else { f64::INFINITY })
            .with_class(SymmetryClass::PolarizationNonincreasing)
            .with_lower_bound(0.0),
    );
    // d(y, C) from the projection oracle and a probe over C
    let proj = c.project(&y);
    let cs = setup.clone().with_domain(c.clone());
    let inf = inf_estimate(f.as_ref(), &cs, &x);
    let dyc = metric.dist(&proj, &y).min(inf.value);
    let dxy = metric.dist(&x, &y);
    if dxy > dyc + eps * eps + 1e-12 * (1.0 + dxy) {
        return Err(SymError::AssumptionViolated {
            what: format!("||x - y|| = {dxy:.6e} exceeds d(y, C) + eps^2 = {:.6e}", dyc + eps * eps),
            witness: Some(x),
        });
    }
    let mut cert = symmetric_ekeland(f.as_ref(), &cs, &x, eps, eps, EkelandVariant::V)?;
    let xi = cert.v.clone();
    let petal = Petal { epsilon: eps, x0: x.clone(), x1: y.clone() };
    let excess = eps * metric.dist(&xi, &x) + metric.dist(&xi, &y) - dxy;
    cert.measure("membership: eps ||xi - x|| + ||xi - y|| - ||x - y||", excess, 1e-12 * (1.0 + dxy));
    cert.measure("membership: xi outside C", if c.contains(&xi) { 0.0 } else { 1.0 }, 0.0);

    let own = Petal { epsilon: eps, x0: xi.clone(), x1: y.clone() };
    let mut r = rng(derive_seed(setup.seed, 0x9E7));
    let mut hits = 0usize;
    let n = problem.minimality_samples;
    let reach = 1.0 + metric.dist(&xi, &y);
    for _ in 0..n {
        let d = gaussian_vec(&mut r, xi.len());
        let dn = euclid(&d).max(1e-300);
        let u = uniform_vec(&mut r, 1, 0.0, 1.0)[0];
        let s = reach * 10f64.powf(-6.0 * (1.0 - u));
        let w = c.project(&xi.iter().zip(&d).map(|(a, z)| a + s * z / dn).collect::<Vec<_>>());
        if metric.dist(&w, &xi) > tol(metric.as_ref(), &xi) && c.contains(&w) && petal_membership(&w, &own, metric.as_ref()) {
            hits += 1;
        }
    }
    cert.measure("minimality: sampled points of Petal(xi, y) n C other than xi", hits as f64, 0.0);
    cert.report("d(y, C) estimate", dyc);
    cert.report("||x - y||", dxy);
    cert.report("minimality samples", n as f64);
    cert.notes.push(format!("petal of eps = {} at x, y; inside: {}", eps, petal_membership(&xi, &petal, metric.as_ref())));
    cert.seal();
    Ok(cert)
}
