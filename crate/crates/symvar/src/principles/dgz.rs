//! Checking perturbed minimality: f + g minimal at v with g small in value
//! and derivative. Existence is not constructive; only candidates built from
//! a bump around an engine output are generated.

use serde::{Deserialize, Serialize};

use super::engine::Setup;
use super::{Certificate, Inequality, Variant};
use crate::functional::Functional;
use crate::metric::Metric;
use crate::rearrange::symmetry_residual_values;
use crate::sampling::{derive_seed, gaussian_vec, rng};

/// 3 sqrt(3) / 8: scales b(s) = kappa (1 - s^2)^2 to sup |b'| = 1.
pub const KAPPA: f64 = 0.649_519_052_838_329;

/// g(w) = -epsilon * kappa * (1 - s^2)^2 with s = ||w - center|| / delta,
/// zero for s >= 1. C^1 with support in the delta-ball; |g| <= kappa epsilon
/// and ||g'|| <= epsilon / delta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
}

impl Bump {
    pub fn around(v: &[f64], epsilon: f64, delta: f64) -> Self {
        Bump { center: v.to_vec(), epsilon, delta }
    }

    pub fn value(&self, metric: &dyn Metric, w: &[f64]) -> f64 {
        let s = metric.dist(w, &self.center) / self.delta;
        if s >= 1.0 {
            0.0
        } else {
            -self.epsilon * KAPPA * (1.0 - s * s).powi(2)
        }
    }

    /// Dual norm of g'(w).
    pub fn derivative_norm(&self, metric: &dyn Metric, w: &[f64]) -> f64 {
        let d: Vec<f64> = w.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let s = metric.norm(&d) / self.delta;
        if s >= 1.0 || s == 0.0 {
            return 0.0;
        }
        let dg_ds = 4.0 * self.epsilon * KAPPA * s * (1.0 - s * s);
        // the norm has a unit-dual-norm derivative away from the origin
        let dn = metric.norm_grad(&d).map(|g| metric.dual(&g).0).unwrap_or(1.0);
        dg_ds / self.delta * dn
    }
}

/// Checks sup |g| <= eps, sup ||g'|| <= eps and the minimality of f + g at v
/// by sampling. With no bump, g = 0.
pub fn dgz_check(f: &dyn Functional, setup: &Setup, v: &[f64], bump: Option<&Bump>, epsilon: f64) -> Certificate {
    let metric = setup.metric.as_ref();
    let mut cert = setup.blank(
        Variant::DgzCheck,
        v.to_vec(),
        epsilon,
        epsilon,
        1.0,
        Inequality::Perturbed { bump: bump.cloned() },
    );
    let (mut sup_g, mut sup_dg) = (0.0f64, 0.0f64);
    if let Some(b) = bump {
        let mut r = rng(derive_seed(setup.seed, 0xD62));
        let n = v.len();
        sup_g = b.value(metric, &b.center).abs();
        for i in 0..setup.samples.max(100) {
            let g = gaussian_vec(&mut r, n);
            let gn = metric.norm(&g).max(1e-300);
            // every third probe sits on the ring where |b'| peaks
            let s = if i % 3 == 0 { 1.0 / 3f64.sqrt() } else { 1.2 * (i as f64 * 0.618_033_988_75).fract() };
            let w: Vec<f64> = b.center.iter().zip(&g).map(|(c, x)| c + s * b.delta * x / gn).collect();
            sup_g = sup_g.max(b.value(metric, &w).abs());
            sup_dg = sup_dg.max(b.derivative_norm(metric, &w));
        }
    }
    cert.measure("(c) sup |g|", sup_g, epsilon);
    cert.measure("(c) sup ||g'||", sup_dg, epsilon);
    cert.report("symmetry: ||v - v*||_V", symmetry_residual_values(&setup.space, v));
    setup.finish(f, &mut cert);
    cert
}
