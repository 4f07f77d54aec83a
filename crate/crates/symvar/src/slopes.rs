//! Slope brackets and second-difference estimates.
//!
//! The weak slope is bracketed by [dual norm of the gradient, sampled strong
//! slope]; the second-order quotient is a max over sampled (z, zeta, t).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::metric::Metric;
use crate::sampling::{derive_seed, rng, QuasiNormal};
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub lower: f64,
    pub upper: f64,
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
}

impl SlopeEstimate {
    /// Slack allowed between the two ends of the bracket.
    pub fn tolerance(&self) -> f64 {
        1e-3 * (1.0 + self.lower)
    }
}

fn unit(metric: &dyn Metric, d: Vec<f64>) -> Option<Vec<f64>> {
    let n = metric.norm(&d);
    (n > 0.0 && n.is_finite()).then(|| d.into_iter().map(|x| x / n).collect())
}

/// Sampled strong slope sup (f(u) - f(xi))^+ / d(u, xi) over spheres of the
/// given radii. Directions: the dual-map direction of the gradient when one
/// exists, then quasi-random unit vectors; the best direction per radius is
/// refined by a short random hill climb.
pub fn strong_slope(
    f: &dyn Functional,
    metric: &dyn Metric,
    u: &[f64],
    radii: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    let fu = f.eval(u);
    if !fu.is_finite() {
        return Err(SymError::OutsideDomain);
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(SymError::InvalidArgument("slope radii must be positive".into()));
    }
    let n = u.len();
    let grad = f.gradient(u);
    let lower = grad.as_ref().map_or(0.0, |g| metric.dual(g).0);
    let mut fixed_dirs = Vec::new();
    if let Some(g) = &grad {
        let (_, z) = metric.dual(g);
        if let Some(d) = unit(metric, z.into_iter().map(|x| -x).collect()) {
            fixed_dirs.push(d);
        }
    }
    let quotient = |d: &[f64], r: f64| -> f64 {
        let xi: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + r * b).collect();
        let fx = f.eval(&xi);
        if fx.is_finite() {
            ((fu - fx) / r).max(0.0)
        } else {
            0.0
        }
    };
    let mut upper: f64 = 0.0;
    let mut r2 = rng(derive_seed(seed, 0x51));
    for (k, &r) in radii.iter().enumerate() {
        let mut qn = QuasiNormal::new(n, derive_seed(seed, k as u64));
        let mut best = (0.0, None::<Vec<f64>>);
        let consider = |d: Vec<f64>, best: &mut (f64, Option<Vec<f64>>)| {
            let q = quotient(&d, r);
            if best.1.is_none() || q > best.0 {
                *best = (q, Some(d));
            }
        };
        for d in &fixed_dirs {
            consider(d.clone(), &mut best);
        }
        for _ in 0..n_samples {
            if let Some(d) = unit(metric, qn.next_gaussian()) {
                consider(d, &mut best);
            }
        }
        if let Some(mut d) = best.1.clone() {
            let mut q = best.0;
            let mut step = 0.5;
            for _ in 0..60 {
                let trial: Vec<f64> = d.iter().map(|x| x + step * (r2.gen::<f64>() * 2.0 - 1.0)).collect();
                if let Some(t) = unit(metric, trial) {
                    let qt = quotient(&t, r);
                    if qt > q {
                        q = qt;
                        d = t;
                        continue;
                    }
                }
                step *= 0.9;
            }
            best.0 = best.0.max(q);
        }
        upper = upper.max(best.0);
    }
    Ok(SlopeEstimate { lower, upper, radii: radii.to_vec(), samples_per_radius: n_samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub value: f64,
    pub probe_count: usize,
    pub t_min: f64,
    /// (delta, max quotient) for every delta of the schedule.
    pub schedule: Vec<(f64, f64)>,
}

/// Second-difference estimate of the upper quotient at u in direction w.
///
/// For each delta, z and zeta are sampled within X-distance delta^2 of u and
/// w and t in [delta/4, delta]; the unperturbed probe (u, w, delta) is always
/// included. The coupling of the three radii through delta^2 makes the
/// perturbation of the quotient O(delta^2) for smooth f.
pub fn q_form(
    f: &dyn Functional,
    metric: &dyn Metric,
    u: &[f64],
    w: &[f64],
    deltas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<QEstimate> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(SymError::InvalidArgument("delta schedule must be nonempty and positive".into()));
    }
    let n = u.len();
    let mut r = rng(derive_seed(seed, 0x0F));
    let mut qn = QuasiNormal::new(n, derive_seed(seed, 0x0E));
    let mut schedule = Vec::with_capacity(deltas.len());
    let mut probes = 0;
    let mut t_min = f64::INFINITY;
    for &delta in deltas {
        let mut best = f64::NEG_INFINITY;
        for k in 0..n_samples.max(1) {
            let (z, zeta, t) = if k == 0 {
                (u.to_vec(), w.to_vec(), delta)
            } else {
                let rad = delta * delta;
                let dz = unit(metric, qn.next_gaussian()).unwrap_or_else(|| vec![0.0; n]);
                let dw = unit(metric, qn.next_gaussian()).unwrap_or_else(|| vec![0.0; n]);
                let a = rad * r.gen::<f64>();
                let b = rad * r.gen::<f64>();
                let t = delta * (0.25 + 0.75 * r.gen::<f64>());
                (
                    u.iter().zip(&dz).map(|(x, d)| x + a * d).collect(),
                    w.iter().zip(&dw).map(|(x, d)| x + b * d).collect::<Vec<f64>>(),
                    t,
                )
            };
            let plus: Vec<f64> = z.iter().zip(&zeta).map(|(a, b)| a + t * b).collect();
            let minus: Vec<f64> = z.iter().zip(&zeta).map(|(a, b)| a - t * b).collect();
            let (fp, fm, fz) = (f.eval(&plus), f.eval(&minus), f.eval(&z));
            if !(fp.is_finite() && fm.is_finite() && fz.is_finite()) {
                continue;
            }
            probes += 1;
            t_min = t_min.min(t);
            best = best.max((fp + fm - 2.0 * fz) / (t * t));
        }
        schedule.push((delta, best));
    }
    if probes == 0 {
        return Err(SymError::OutsideDomain);
    }
    let value = schedule.last().map(|s| s.1).unwrap_or(f64::NEG_INFINITY);
    if !value.is_finite() {
        return Err(SymError::OutsideDomain);
    }
    Ok(QEstimate { value, probe_count: probes, t_min, schedule })
}

/// Lower Dini-type derivative: min of (g(s+t) - g(s+tau)) / (t - tau) over
/// the rational pairs t, tau in {delta (2i - m)/m : i = 0..m}, t != tau,
/// with m chosen so that at most n pairs are used.
pub fn lower_derivative(g: &dyn Fn(f64) -> f64, s: f64, delta: f64, n: usize) -> f64 {
    let mut m = 2usize;
    while (m + 2) * (m + 1) <= n.max(2) {
        m += 2;
    }
    let pts: Vec<f64> = (0..=m).map(|i| delta * (2.0 * i as f64 - m as f64) / m as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&t| g(s + t)).collect();
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i != j {
                best = best.min((vals[i] - vals[j]) / (pts[i] - pts[j]));
            }
        }
    }
    best
}

/// `lower_derivative` over a decreasing delta schedule, each entry logged.
pub fn lower_derivative_schedule(g: &dyn Fn(f64) -> f64, s: f64, deltas: &[f64], n: usize) -> Vec<(f64, f64)> {
    deltas.iter().map(|&d| (d, lower_derivative(g, s, d, n))).collect()
}
