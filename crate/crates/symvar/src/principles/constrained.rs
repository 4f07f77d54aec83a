//! Ekeland points on a constraint set {G_j = 0, j < n_eq; G_j >= 0 otherwise}
//! with Lagrange multipliers for the saturated constraints.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::engine::{ekeland_chain, inf_estimate, ChainOptions, Setup};
use super::{Certificate, Inequality, Variant};
use crate::domain::Domain;
use crate::error::{Result, SymError};
use crate::functional::{Functional, FunctionalRef};
use crate::grid::dot;
use crate::metric::Metric;
use crate::optimize::fd_gradient;
use crate::rearrange::{approximate, symmetry_residual_values};

/// Membership tolerance and saturation threshold.
pub const TOL_CON: f64 = 1e-8;
const DEGENERACY: f64 = 1e-10;

pub struct ConstraintSet {
    pub constraints: Vec<FunctionalRef>,
    pub n_eq: usize,
    metric: Arc<dyn Metric>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<FunctionalRef>, n_eq: usize, metric: Arc<dyn Metric>) -> Result<Self> {
        if n_eq > constraints.len() {
            return Err(SymError::InvalidArgument(format!(
                "{n_eq} equality constraints requested but only {} given",
                constraints.len()
            )));
        }
        Ok(ConstraintSet { constraints, n_eq, metric })
    }

    fn grad(&self, j: usize, u: &[f64]) -> Vec<f64> {
        let g = &self.constraints[j];
        g.gradient(u).unwrap_or_else(|| fd_gradient(&|x: &[f64]| g.eval(x), u))
    }

    /// Indices with G_j(u) = 0 up to TOL_CON.
    pub fn saturated(&self, u: &[f64]) -> Vec<usize> {
        (0..self.constraints.len()).filter(|&j| self.constraints[j].eval(u).abs() <= TOL_CON).collect()
    }

    fn violated(&self, u: &[f64], tol: f64) -> Vec<(usize, f64)> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(j, g)| {
                let r = g.eval(u);
                let bad = if j < self.n_eq { r.abs() > tol } else { r < -tol };
                bad.then_some((j, r))
            })
            .collect()
    }

    /// Gram of the saturated gradients in the dual inner product.
    fn normal_matrix(&self, grads: &[Vec<f64>]) -> (DMatrix<f64>, Vec<Vec<f64>>) {
        let riesz: Vec<Vec<f64>> = grads.iter().map(|g| self.metric.riesz(g)).collect();
        let k = grads.len();
        let m = DMatrix::from_fn(k, k, |a, b| dot(&grads[a], &riesz[b]));
        (m, riesz)
    }
}

impl Domain for ConstraintSet {
    fn contains(&self, u: &[f64]) -> bool {
        self.violated(u, TOL_CON * 0.1).is_empty()
    }

    /// Gauss-Newton restoration: delta = -A^-1 J^T (J A^-1 J^T)^-1 r over the
    /// violated constraints, with A the metric's Riesz operator.
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut x = u.to_vec();
        for _ in 0..100 {
            let bad = self.violated(&x, TOL_CON * 1e-3);
            if bad.is_empty() {
                break;
            }
            let grads: Vec<Vec<f64>> = bad.iter().map(|(j, _)| self.grad(*j, &x)).collect();
            let (m, riesz) = self.normal_matrix(&grads);
            let r = DVector::from_iterator(bad.len(), bad.iter().map(|(_, r)| *r));
            let Some(y) = m.lu().solve(&r) else { break };
            for (k, rz) in riesz.iter().enumerate() {
                for (xi, zi) in x.iter_mut().zip(rz) {
                    *xi -= y[k] * zi;
                }
            }
        }
        x
    }

    fn describe(&self) -> String {
        format!("{} constraints ({} equalities)", self.constraints.len(), self.n_eq)
    }
}

/// Multipliers minimizing ||df - sum lambda_j dG_j|| in the dual norm over the
/// saturated set, inequality multipliers kept nonnegative by an active set.
pub fn multipliers(set: &ConstraintSet, df: &[f64], u: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = set.constraints.len();
    let mut active = set.saturated(u);
    let metric = set.metric.as_ref();
    loop {
        let grads: Vec<Vec<f64>> = active.iter().map(|&j| set.grad(j, u)).collect();
        let mut lambda = vec![0.0; m];
        if !active.is_empty() {
            let (nm, _) = set.normal_matrix(&grads);
            let eig = nm.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x.abs())));
            let rel = if hi > 0.0 { lo / hi } else { 0.0 };
            if rel < DEGENERACY {
                return Err(SymError::ConstraintDegeneracy { relative_eigenvalue: rel });
            }
            let rdf = metric.riesz(df);
            let rhs = DVector::from_iterator(active.len(), grads.iter().map(|g| dot(g, &rdf)));
            let sol = nm.cholesky().map(|c| c.solve(&rhs)).ok_or(SymError::ConstraintDegeneracy { relative_eigenvalue: rel })?;
            for (k, &j) in active.iter().enumerate() {
                lambda[j] = sol[k];
            }
            let worst = active
                .iter()
                .filter(|&&j| j >= set.n_eq && lambda[j] < 0.0)
                .min_by(|&&a, &&b| lambda[a].total_cmp(&lambda[b]))
                .copied();
            if let Some(j) = worst {
                active.retain(|&k| k != j);
                continue;
            }
        }
        let mut res = df.to_vec();
        for (k, &j) in active.iter().enumerate() {
            for (ri, gi) in res.iter_mut().zip(&grads[k]) {
                *ri -= lambda[j] * gi;
            }
        }
        return Ok((lambda, metric.dual(&res).0));
    }
}

/// Almost symmetric, almost critical point on the constraint set with
/// sigma = rho = eps.
pub fn constrained_symmetric_ekeland(
    f: &dyn Functional,
    set: Arc<ConstraintSet>,
    setup: &Setup,
    u0: &[f64],
    eps: f64,
) -> Result<Certificate> {
    if !(eps > 0.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, inf)".into() });
    }
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    super::symmetric::check_class(f, setup)?;
    let cs = setup.clone().with_domain(set.clone());
    let start = if set.contains(u0) { u0.to_vec() } else { set.project(u0) };
    if !set.contains(&start) {
        return Err(SymError::OutsideDomain);
    }
    let fu0 = f.eval(&start);
    let inf = inf_estimate(f, &cs, &start);
    let mut inf_val = inf.value.min(fu0);
    let required = inf_val + eps * eps;
    if !(fu0 <= required) {
        return Err(SymError::BadStart { f_u0: fu0, required });
    }
    let approx = approximate(&setup.space, &start, eps)?;
    let ut = if set.contains(&approx.values) { approx.values.clone() } else { set.project(&approx.values) };
    let s2 = cs.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone()]].concat());
    let chain = ekeland_chain(f, &s2, &ut, eps, &ChainOptions::default())?;
    let v = chain.v.clone();
    inf_val = inf_val.min(chain.fv);
    let df = f.gradient(&v).unwrap_or_else(|| fd_gradient(&|x: &[f64]| f.eval(x), &v));
    let (lambda, residual) = multipliers(&set, &df, &v)?;

    let mut cert = cs.blank(Variant::Constrained, v.clone(), eps, eps, 1.0, Inequality::Ekeland { sigma: eps, strict: false });
    cert.inf_est = Some(inf_val);
    cert.probes = inf.probes;
    cert.iterations = chain.iterations;
    cert.t_rho_sequence = approx.specs(&setup.space);
    let k = setup.k();
    cert.measure("multiplier residual: ||df - sum lambda dG||", residual, eps);
    cert.measure("gap: f(u) - inf_C", chain.fv - inf_val, eps * eps);
    cert.measure(
        "symmetry: ||u - u*||_V",
        symmetry_residual_values(&setup.space, &v),
        (k * (setup.space.c_theta() + 1.0) + 1.0) * eps,
    );
    let neg = lambda.iter().skip(set.n_eq).fold(0.0f64, |a, &l| a.max(-l));
    cert.measure("sign: max(-lambda_j), inequalities", neg, 0.0);
    let saturated = set.saturated(&v);
    let stray = (0..lambda.len()).filter(|j| !saturated.contains(j)).fold(0.0f64, |a, j| a.max(lambda[j].abs()));
    cert.measure("slackness: max |lambda_j|, unsaturated", stray, 0.0);
    for (j, l) in lambda.iter().enumerate() {
        cert.report(&format!("lambda_{j}"), *l);
    }
    cs.finish(f, &mut cert);
    Ok(cert)
}
