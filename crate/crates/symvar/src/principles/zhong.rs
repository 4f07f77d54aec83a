//! Weighted Ekeland points: radius from the weight integral, then a chain
//! whose step modulus shrinks with the distance travelled.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::engine::{ekeland_chain, inf_estimate, ChainOptions, Setup};
use super::{Certificate, Inequality, Variant};
use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::rearrange::approximate;
use crate::slopes::strong_slope;

/// A nondecreasing continuous h >= 0.
pub trait Weight: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, s: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Zero,
    Linear,
    Quadratic,
}

impl Weight for WeightKind {
    fn name(&self) -> &str {
        match self {
            WeightKind::Zero => "zero",
            WeightKind::Linear => "linear",
            WeightKind::Quadratic => "quadratic",
        }
    }

    fn value(&self, s: f64) -> f64 {
        match self {
            WeightKind::Zero => 0.0,
            WeightKind::Linear => s,
            WeightKind::Quadratic => s * s,
        }
    }
}

const SEARCH_CAP: f64 = 1e12;

fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// int_0^r ds / (1 + h(s)) by adaptive Simpson, split into unit pieces on a
/// geometric scale so long ranges keep their accuracy.
pub fn weight_integral(h: &dyn Weight, r: f64) -> f64 {
    let g = |s: f64| 1.0 / (1.0 + h.value(s));
    let mut total = 0.0;
    let mut a = 0.0;
    while a < r {
        let b = if a < 1.0 { r.min(1.0) } else { r.min(2.0 * a) };
        let (fa, fb, fm) = (g(a), g(b), g(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson(&g, a, b, fa, fm, fb, whole, 1e-14, 40);
        a = b;
    }
    total
}

/// Smallest r with int_0^r ds / (1 + h(s)) = rho, to 1e-10 in r.
pub fn zhong_radius(h: &dyn Weight, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(SymError::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    // the integrand is at most 1, so r >= rho
    let mut lo = 0.0;
    let mut hi = rho;
    while weight_integral(h, hi) < rho {
        lo = hi;
        hi *= 2.0;
        if hi > SEARCH_CAP {
            return Err(SymError::DivergenceAssumptionViolated { rho, cap: SEARCH_CAP });
        }
    }
    while hi - lo > 1e-11 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if weight_integral(h, mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Weighted symmetric Ekeland point: r = radius(h, rho), start from
/// T_r u0, step modulus sigma / (1 + h(||v - T_r u0||)).
pub fn symmetric_zhong(
    f: &dyn Functional,
    setup: &Setup,
    u0: &[f64],
    sigma: f64,
    rho: f64,
    h: Arc<dyn Weight>,
) -> Result<Certificate> {
    if !(sigma > 0.0) {
        return Err(SymError::InvalidArgument("sigma must be positive".into()));
    }
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    super::symmetric::check_class(f, setup)?;
    let r = zhong_radius(h.as_ref(), rho)?;
    let fu0 = f.eval(u0);
    let inf = inf_estimate(f, setup, u0);
    let inf_val = inf.value.min(fu0);
    if !(fu0 < inf_val + sigma * rho) && !(fu0 == inf_val) {
        return Err(SymError::BadStart { f_u0: fu0, required: inf_val + sigma * rho });
    }
    let approx = approximate(&setup.space, u0, r)?;
    let ut = approx.values.clone();
    let metric = setup.metric.as_ref();
    let opts = ChainOptions { weight: Some((h.clone(), ut.clone())), ..Default::default() };
    let s2 = setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone()]].concat());
    let chain = ekeland_chain(f, &s2, &ut, sigma, &opts)?;
    let v = chain.v.clone();
    let factor = 1.0 + h.value(metric.dist(&v, &ut));
    let mut cert = setup.blank(
        Variant::SymZhong,
        v.clone(),
        sigma,
        rho,
        1.0,
        Inequality::Weighted { sigma, factor, weight: h.name().to_string() },
    );
    let k = setup.k();
    let sym = crate::rearrange::symmetry_residual_values(&setup.space, &v);
    let inf_val = inf_val.min(chain.fv);
    cert.inf_est = Some(inf_val);
    cert.probes = inf.probes;
    cert.iterations = chain.iterations;
    cert.t_rho_sequence = approx.specs(&setup.space);
    cert.report("radius r", r);
    cert.measure("(a) symmetry: ||v - v*||_V", sym, (k * (setup.space.c_theta() + 1.0) + 1.0) * r);
    cert.measure("(b) energy: f(v) - f(u0)", chain.fv - fu0, 0.0);
    let tu = metric.dist(&ut, u0);
    cert.measure("(c) location: ||v - u0||", metric.dist(&v, u0), r + tu);
    cert.report("(c) ||T u0 - u0||", tu);
    let scale = 1.0 + metric.norm(&v);
    let radii = [1e-3 * scale, 1e-4 * scale, 1e-5 * scale];
    if let Ok(sl) = strong_slope(f, metric, &v, &radii, 200, setup.seed) {
        cert.measure("weighted slope: (1 + h) |grad f|(v)", factor * sl.upper, sigma);
    }
    setup.finish(f, &mut cert);
    Ok(cert)
}
