//! Symmetric fixed points of Caristi maps and of directional contractions,
//! obtained from a symmetric Ekeland point of an associated functional.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymError};
use crate::functional::{Functional, FunctionalRef};
use crate::grid::{theta, NormKind};
use crate::metric::{GridMetric, Metric};
use crate::principles::engine::{inf_estimate, level_point, Setup};
use crate::principles::{symmetric_ekeland, Certificate, EkelandVariant};
use crate::rearrange::symmetry_residual_values;
use crate::sampling::{derive_seed, rng, uniform_vec};

/// Bound on the inequality deficit at the Caristi/Clarke test point.
pub const TOL_SLACK: f64 = 1e-6;
const PROBES: usize = 64;

/// A map F: X -> X on grid values.
pub trait SelfMap: Send + Sync {
    fn name(&self) -> String;
    fn apply(&self, u: &[f64]) -> Vec<f64>;
}

pub type SelfMapRef = Arc<dyn SelfMap>;

pub struct Identity;

impl SelfMap for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
}

/// F(u) = a + sigma (u - a).
pub struct Affine {
    pub anchor: Vec<f64>,
    pub sigma: f64,
}

impl Affine {
    /// F(u) = sigma u
    pub fn scaling(n: usize, sigma: f64) -> Self {
        Affine { anchor: vec![0.0; n], sigma }
    }
}

impl SelfMap for Affine {
    fn name(&self) -> String {
        format!("affine contraction (sigma = {})", self.sigma)
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.anchor).map(|(x, a)| a + self.sigma * (x - a)).collect()
    }
}

/// Any closure as a map.
pub struct FnMap<M: Fn(&[f64]) -> Vec<f64> + Send + Sync> {
    pub label: String,
    pub map: M,
}

impl<M: Fn(&[f64]) -> Vec<f64> + Send + Sync> SelfMap for FnMap<M> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        (self.map)(u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub xi: Vec<f64>,
    /// ||F(xi) - xi|| in the engine metric.
    pub residual: f64,
    /// Deficit of the Ekeland inequality at the test point.
    pub slack: f64,
    /// slack / (1 - eps) or slack / (t (1 - sigma - eps)).
    pub residual_bound: f64,
    pub certificate: Certificate,
}

fn probes(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..PROBES).map(|_| uniform_vec(&mut r, n, 0.0, 2.0)).collect()
}

fn start_point(f: &dyn Functional, setup: &Setup, u0: &[f64], eps: f64) -> Result<(Vec<f64>, Setup)> {
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    let inf = inf_estimate(f, setup, u0);
    if !inf.value.is_finite() || inf.value < -1e12 {
        return Err(SymError::NotBoundedBelow { value: inf.value });
    }
    let base = theta(&inf.argmin);
    let target = inf.value.min(f.eval(&base)) + 0.5 * eps * eps;
    let start = level_point(f, &base, u0, target);
    let anchored = setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin, base]].concat());
    Ok((start, anchored))
}

/// Fixed point of a Caristi map (||F(u) - u|| <= f(u) - f(F(u))) that is
/// almost symmetric: a variant II point xi with sigma = rho = eps, and
/// ||F(xi) - xi|| <= slack / (1 - eps) with slack the Ekeland deficit at F(xi).
pub fn caristi_fixed_point(map: &dyn SelfMap, f: FunctionalRef, setup: &Setup, u0: &[f64], eps: f64) -> Result<FixedPoint> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, 1)".into() });
    }
    let metric = setup.metric.as_ref();
    let caristi_gap = |u: &[f64]| -> (f64, Vec<f64>) {
        let fu = map.apply(u);
        let lhs = metric.dist(&fu, u);
        let rhs = f.eval(u) - f.eval(&fu);
        (lhs - rhs - 1e-9 * (1.0 + rhs.abs()), fu)
    };
    for u in probes(u0.len(), derive_seed(setup.seed, 0xCA)) {
        if caristi_gap(&u).0 > 0.0 {
            return Err(SymError::AssumptionViolated { what: "Caristi condition fails at a probe".into(), witness: Some(u) });
        }
    }
    let (start, anchored) = start_point(f.as_ref(), setup, u0, eps)?;
    let mut cert = symmetric_ekeland(f.as_ref(), &anchored, &start, eps, eps, EkelandVariant::II)?;
    let xi = cert.v.clone();
    let (gap, fxi) = caristi_gap(&xi);
    if gap > 0.0 {
        return Err(SymError::AssumptionViolated { what: "Caristi condition fails at the output".into(), witness: Some(xi) });
    }
    let residual = metric.dist(&fxi, &xi);
    let slack = (f.eval(&xi) - eps * residual - f.eval(&fxi)).max(0.0);
    let bound = slack / (1.0 - eps);
    cert.measure("fixed point: ||F(xi) - xi||", residual, bound);
    cert.measure("slack: Ekeland deficit at F(xi)", slack, TOL_SLACK);
    cert.measure("symmetry: ||xi - xi*||_V", symmetry_residual_values(&setup.space, &xi), eps);
    cert.notes.push(format!("map {}", map.name()));
    cert.seal();
    Ok(FixedPoint { xi, residual, slack, residual_bound: bound, certificate: cert })
}

/// Samples F(S) in S and F(u^H) = F(u)^H over probes and the whole family.
pub fn check_equivariance(map: &dyn SelfMap, setup: &Setup) -> Result<()> {
    let space = &setup.space;
    for u in probes(space.n_cells(), derive_seed(setup.seed, 0xE9)) {
        let fu = map.apply(&u);
        if !space.is_nonnegative(&fu) {
            return Err(SymError::AssumptionViolated { what: "F does not map S into S".into(), witness: Some(u) });
        }
        for h in space.family() {
            let a = map.apply(&h.apply(&u));
            let b = h.apply(&fu);
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let scale = 1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if d > 1e-9 * scale {
                return Err(SymError::AssumptionViolated { what: format!("F(u^H) != F(u)^H (gap {d:.3e})"), witness: Some(u) });
            }
        }
    }
    Ok(())
}

/// Largest t in {1, 1/2, ..., 2^-20} with
/// ||F(t F(u) + (1 - t) u) - F(u)|| <= sigma t ||F(u) - u||.
pub fn contraction_step(map: &dyn SelfMap, metric: &dyn Metric, sigma: f64, u: &[f64]) -> Option<f64> {
    let fu = map.apply(u);
    let r = metric.dist(&fu, u);
    (0..=20).map(|k| 0.5f64.powi(k)).find(|&t| {
        let w: Vec<f64> = fu.iter().zip(u).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        metric.dist(&map.apply(&w), &fu) <= sigma * t * r + 1e-12 * (1.0 + r)
    })
}

/// Fixed point of a directional contraction with constant sigma, from a
/// variant II point of f(u) = ||u - F(u)||_V in the V metric:
/// ||F(xi) - xi||_V <= slack / (t (1 - sigma - eps)).
pub fn clarke_fixed_point(map: SelfMapRef, sigma: f64, setup: &Setup, u0: &[f64], eps: f64) -> Result<FixedPoint> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(SymError::InvalidArgument(format!("contraction constant {sigma} outside (0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0 - sigma) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: format!("(0, {})", 1.0 - sigma) });
    }
    let space = setup.space.clone();
    let vm: Arc<dyn Metric> = Arc::new(GridMetric::new(&space, NormKind::V));
    let vsetup = setup.clone();
    let vsetup = Setup { metric: vm.clone(), ..vsetup };
    check_equivariance(map.as_ref(), &vsetup)?;
    for u in probes(space.n_cells(), derive_seed(setup.seed, 0xC1)) {
        if contraction_step(map.as_ref(), vm.as_ref(), sigma, &u).is_none() {
            return Err(SymError::AssumptionViolated { what: "directional contraction fails at a probe".into(), witness: Some(u) });
        }
    }
    let (m2, sp2) = (map.clone(), space.clone());
    let f: FunctionalRef = Arc::new(
        crate::functional::FnFunctional::new(format!("||u - F(u)||_V, F = {}", map.name()), move |u: &[f64]| {
            let fu = m2.apply(u);
            sp2.dist(NormKind::V, u, &fu)
        })
        .with_lower_bound(0.0),
    );
    let (start, anchored) = start_point(f.as_ref(), &vsetup, u0, eps)?;
    let mut cert = symmetric_ekeland(f.as_ref(), &anchored, &start, eps, eps, EkelandVariant::II)?;
    let xi = cert.v.clone();
    let fxi = map.apply(&xi);
    let residual = vm.dist(&fxi, &xi);
    let t = contraction_step(map.as_ref(), vm.as_ref(), sigma, &xi).ok_or_else(|| SymError::AssumptionViolated {
        what: "directional contraction fails at the output".into(),
        witness: Some(xi.clone()),
    })?;
    let w: Vec<f64> = fxi.iter().zip(&xi).map(|(a, b)| t * a + (1.0 - t) * b).collect();
    let slack = (f.eval(&xi) - eps * vm.dist(&w, &xi) - f.eval(&w)).max(0.0);
    let bound = slack / (t * (1.0 - sigma - eps));
    cert.measure("fixed point: ||F(xi) - xi||_V", residual, bound);
    cert.measure("slack: Ekeland deficit at the contraction step", slack, TOL_SLACK);
    cert.measure("symmetry: ||xi - xi*||_V", symmetry_residual_values(&space, &xi), eps);
    cert.report("contraction step t", t);
    cert.notes.push(format!("map {}; sigma {}", map.name(), sigma));
    cert.seal();
    Ok(FixedPoint { xi, residual, slack, residual_bound: bound, certificate: cert })
}
