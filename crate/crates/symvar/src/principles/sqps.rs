//! Symmetric second-order Palais-Smale sequences: one smooth symmetric point
//! per epsilon of a decreasing schedule, each with a slope bound, a symmetry
//! residual and a sampled lower bound on the second-difference quotient.

use serde::{Deserialize, Serialize};

use super::bp::symmetric_borwein_preiss;
use super::engine::{inf_estimate, level_point, Setup};
use super::Certificate;
use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::grid::theta;
use crate::metric::Metric;
use crate::rearrange::symmetry_residual_values;
use crate::sampling::{derive_seed, gaussian_vec, rng};
use crate::slopes::{strong_slope, SlopeEstimate};

/// Tolerance below zero allowed for the sampled quotient bound.
pub const TOL_Q: f64 = 1e-6;
/// Slack in the monotonicity of the per-step reports.
pub const TOL_MONOTONE: f64 = 1e-12;
const Q_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const Q_RANDOM_DIRS: usize = 32;

/// min over sampled unit zeta and t of
/// (f(v + t zeta) + f(v - t zeta) - 2 f(v)) / t^2 + 2 eps ||zeta||^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBoundReport {
    pub epsilon: f64,
    pub min_value: f64,
    /// Smallest raw quotient seen.
    pub min_quotient: f64,
    pub probes: usize,
    pub t_values: Vec<f64>,
    pub tol_q: f64,
}

impl QBoundReport {
    pub fn passed(&self) -> bool {
        self.min_value >= -self.tol_q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqpsStep {
    pub epsilon: f64,
    pub certificate: Certificate,
    pub slope: SlopeEstimate,
    pub slope_bound: f64,
    pub symmetry: f64,
    pub q: QBoundReport,
}

/// Sampled quotient bound at v: coordinate directions plus seeded Gaussian
/// ones, normalized in the metric. Probes where f is +inf are skipped.
pub fn q_bound(f: &dyn Functional, metric: &dyn Metric, v: &[f64], eps: f64, seed: u64) -> QBoundReport {
    let n = v.len();
    let fv = f.eval(v);
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut r = rng(derive_seed(seed, 0x0B));
    dirs.extend((0..Q_RANDOM_DIRS).map(|_| gaussian_vec(&mut r, n)));
    let mut rep = QBoundReport {
        epsilon: eps,
        min_value: f64::INFINITY,
        min_quotient: f64::INFINITY,
        probes: 0,
        t_values: Q_STEPS.to_vec(),
        tol_q: TOL_Q,
    };
    for d in dirs {
        let dn = metric.norm(&d);
        if !(dn > 0.0) {
            continue;
        }
        let z: Vec<f64> = d.iter().map(|x| x / dn).collect();
        for &t in &Q_STEPS {
            let plus: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a + t * b).collect();
            let minus: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a - t * b).collect();
            let (fp, fm) = (f.eval(&plus), f.eval(&minus));
            if !(fp.is_finite() && fm.is_finite()) {
                continue;
            }
            let q = (fp + fm - 2.0 * fv) / (t * t);
            rep.probes += 1;
            rep.min_quotient = rep.min_quotient.min(q);
            rep.min_value = rep.min_value.min(q + 2.0 * eps);
        }
    }
    rep
}

/// One smooth symmetric point per epsilon (sigma = rho = eps, p = 2), each
/// started on the segment from Theta(argmin) to u0 at level inf + eps^3 / 2.
pub fn sqps_sequence(f: &dyn Functional, setup: &Setup, u0: &[f64], schedule: &[f64]) -> Result<Vec<SqpsStep>> {
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(SymError::InvalidArgument("epsilon schedule must be nonempty and positive".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SymError::InvalidArgument("epsilon schedule must be strictly decreasing".into()));
    }
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    let inf = inf_estimate(f, setup, u0);
    if !inf.value.is_finite() || inf.value < -1e12 {
        return Err(SymError::NotBoundedBelow { value: inf.value });
    }
    let base = theta(&inf.argmin);
    let anchored = setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone(), base.clone()]].concat());
    let metric = setup.metric.as_ref();
    let mut out = Vec::with_capacity(schedule.len());
    for (h, &eps) in schedule.iter().enumerate() {
        let inf_h = inf.value.min(f.eval(&base));
        let start = level_point(f, &base, u0, inf_h + 0.5 * eps.powi(3));
        let cert = symmetric_borwein_preiss(f, &anchored, &start, eps, eps, 2.0).map_err(|e| match e {
            SymError::ConvergenceFailure { context, iterations, residual, best } => SymError::ConvergenceFailure {
                context: format!("step {h} (epsilon {eps}): {context}"),
                iterations,
                residual,
                best,
            },
            other => other,
        })?;
        let v = cert.v.clone();
        let eta = cert.eta.clone().unwrap_or_else(|| v.clone());
        let scale = 1.0 + metric.norm(&v);
        let radii = [1e-4 * scale, 1e-5 * scale];
        let slope = strong_slope(f, metric, &v, &radii, 200, derive_seed(setup.seed, 0x51 + h as u64))?;
        // the curvature term sigma r and the rounding floor of a difference
        // quotient at the smallest radius
        let fv = f.eval(&v);
        let tol = eps * radii[0] + 4e-16 * (1.0 + fv.abs()) / radii[1] + 1e-9 + 1e-3 * slope.lower;
        let slope_bound = 2.0 * eps * metric.dist(&v, &eta) + tol;
        let q = q_bound(f, metric, &v, eps, derive_seed(setup.seed, 0x90 + h as u64));
        let symmetry = symmetry_residual_values(&setup.space, &v);
        let mut cert = cert;
        cert.measure("slope: strong slope upper", slope.upper, slope_bound);
        cert.measure("second order: -min(Q quotient + 2 eps)", -q.min_value, TOL_Q);
        cert.seal();
        out.push(SqpsStep { epsilon: eps, certificate: cert, slope, slope_bound, symmetry, q });
    }
    Ok(out)
}

/// Whether the symmetry residuals and the slope upper estimates are
/// nonincreasing along the schedule, each up to TOL_MONOTONE.
pub fn monotone(steps: &[SqpsStep]) -> (bool, bool) {
    let sym = steps.windows(2).all(|w| w[1].symmetry <= w[0].symmetry + TOL_MONOTONE);
    let slope = steps.windows(2).all(|w| w[1].slope.upper <= w[0].slope.upper + TOL_MONOTONE);
    (sym, slope)
}
