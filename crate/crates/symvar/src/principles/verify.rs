//! Sampled verification of a certificate's inequality.
//!
//! Sample i depends only on (seed, i), so a run with n samples is a prefix
//! of a run with 2n samples and the reported maximum can only grow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Certificate, Inequality, ViolationReport};
use crate::domain::Domain;
use crate::functional::Functional;
use crate::metric::Metric;
use crate::sampling::{derive_seed, gaussian_vec, rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub n_samples: usize,
    pub seed: u64,
}

/// Largest and smallest probe radius, relative to the local scale.
const R_MAX: f64 = 10.0;
const R_MIN: f64 = 1e-6;

/// Test point number i around v.
///
/// Every fifth sample is a global probe (uniform over the functional's box
/// when it has one, else a wide Gaussian cloud). The others sit at a
/// log-uniform radius in [R_MIN, R_MAX] * scale along a Gaussian direction,
/// a signed coordinate axis, or the preconditioned descent direction.
pub fn sample_point(
    i: usize,
    seed: u64,
    v: &[f64],
    metric: &dyn Metric,
    descent: Option<&[f64]>,
    bounds: Option<(f64, f64)>,
) -> Vec<f64> {
    let n = v.len();
    let mut r = rng(derive_seed(seed, i as u64));
    let scale = 1.0 + metric.norm(v);
    if i % 5 == 4 {
        return match bounds {
            Some((lo, hi)) if lo.is_finite() && hi.is_finite() => (0..n).map(|_| r.gen_range(lo..=hi)).collect(),
            _ => {
                let g = gaussian_vec(&mut r, n);
                let gn = metric.norm(&g).max(1e-300);
                let s = 2.0 * scale * r.gen::<f64>();
                v.iter().zip(&g).map(|(a, b)| a + s * b / gn).collect()
            }
        };
    }
    let radius = scale * R_MIN * (R_MAX / R_MIN).powf(r.gen::<f64>());
    let dir: Vec<f64> = match (i / 5) % 3 {
        0 => gaussian_vec(&mut r, n),
        1 => {
            let mut e = vec![0.0; n];
            let k = r.gen_range(0..n);
            e[k] = if r.gen::<bool>() { 1.0 } else { -1.0 };
            e
        }
        _ => match descent {
            Some(d) => {
                // small jitter keeps the probes off a single ray
                let g = gaussian_vec(&mut r, n);
                let dn = metric.norm(d).max(1e-300);
                let gn = metric.norm(&g).max(1e-300);
                let j = 0.1 * r.gen::<f64>();
                d.iter().zip(&g).map(|(a, b)| a / dn + j * b / gn).collect()
            }
            None => gaussian_vec(&mut r, n),
        },
    };
    let dn = metric.norm(&dir);
    if !(dn > 0.0) {
        return v.to_vec();
    }
    v.iter().zip(&dir).map(|(a, b)| a + radius * b / dn).collect()
}

/// Samples the inequality around v. Points outside the domain are projected
/// back; points where f is +inf satisfy every inequality and are skipped.
pub fn scan(
    f: &dyn Functional,
    domain: &dyn Domain,
    metric: &dyn Metric,
    v: &[f64],
    ineq: &Inequality,
    spec: SamplerSpec,
) -> ViolationReport {
    let fv = f.eval(v);
    let descent: Option<Vec<f64>> = f.gradient(v).map(|g| metric.riesz(&g).into_iter().map(|x| -x).collect());
    let bounds = f.bounds();
    let mut report = ViolationReport::empty(spec.seed);
    let mut best = 0.0f64;
    for i in 0..spec.n_samples {
        let mut w = sample_point(i, spec.seed, v, metric, descent.as_deref(), bounds);
        if !domain.contains(&w) {
            w = domain.project(&w);
        }
        report.n_samples += 1;
        if w == v {
            continue;
        }
        let fw = f.eval(&w);
        if !fw.is_finite() {
            continue;
        }
        let d = ineq.deficit(metric, v, fv, &w, fw);
        if d > best {
            best = d;
            report.argmax_w = Some(w);
        }
    }
    report.max_violation = best;
    report
}

/// Re-samples a certificate's inequality with an independent seed.
pub fn verify_certificate(
    f: &dyn Functional,
    domain: &dyn Domain,
    metric: &dyn Metric,
    cert: &Certificate,
    spec: SamplerSpec,
) -> ViolationReport {
    scan(f, domain, metric, &cert.v, &cert.inequality, spec)
}
