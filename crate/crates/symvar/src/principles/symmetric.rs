//! Symmetric Ekeland points: symmetrize the start by iterated polarization,
//! then run the chain. The variants differ in the domain of the chain, the
//! start precondition and the recorded conclusions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::engine::{ekeland_chain, inf_estimate, ChainOptions, Setup};
use super::verify::{sample_point, SamplerSpec};
use super::{Certificate, Inequality, Variant};
use crate::domain::Whole;
use crate::error::{Result, SymError};
use crate::functional::{check_symmetry, Functional, FunctionalRef, SymmetryClass};
use crate::grid::{GridSpace, NormKind};
use crate::rearrange::{approximate, is_family_fixed, symmetry_residual_values};
use crate::sampling::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EkelandVariant {
    /// Chain restricted to a closed S' inside S.
    I,
    /// Chain on the whole space with Theta as dominating point.
    II,
    /// Stability of the output under near-minimizing sequences.
    IV,
    /// Altered form, no start precondition.
    V,
}

/// Relative tolerance of the sampled polarization check.
pub const TOL_SYM: f64 = 1e-9;

/// Samples f(u^H) <= f(u) unless the functional is declared invariant; a
/// declaration of monotonicity is sampled as well, it is cheap.
pub(crate) fn check_class(f: &dyn Functional, setup: &Setup) -> Result<()> {
    let n = match f.symmetry_class() {
        SymmetryClass::PolarizationInvariant => 8,
        SymmetryClass::PolarizationNonincreasing => 16,
        SymmetryClass::Unverified => 64,
    };
    check_symmetry(f, &setup.space, n, derive_seed(setup.seed, 0x5C), TOL_SYM)
}

fn sym_bound(setup: &Setup, rho: f64, variant: EkelandVariant) -> f64 {
    let k = setup.k();
    match variant {
        EkelandVariant::I => (2.0 * k + 1.0) * rho,
        _ => (k * (setup.space.c_theta() + 1.0) + 1.0) * rho,
    }
}

/// Largest ||w - v|| over sampled w with f(w) + sigma ||w - v|| <= f(v) + delta,
/// for each delta of the schedule.
pub fn stability_modulus(
    f: &dyn Functional,
    setup: &Setup,
    v: &[f64],
    sigma: f64,
    deltas: &[f64],
    n: usize,
) -> Vec<(f64, f64)> {
    let metric = setup.metric.as_ref();
    let fv = f.eval(v);
    let descent: Option<Vec<f64>> = f.gradient(v).map(|g| metric.riesz(&g).into_iter().map(|x| -x).collect());
    let seed = derive_seed(setup.seed, 0x57AB);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let mut w = sample_point(i, seed, v, metric, descent.as_deref(), f.bounds());
        if !setup.domain.contains(&w) {
            w = setup.domain.project(&w);
        }
        let fw = f.eval(&w);
        if fw.is_finite() {
            let d = metric.dist(&w, v);
            pts.push((fw + sigma * d - fv, d));
        }
    }
    deltas
        .iter()
        .map(|&delta| {
            let m = pts.iter().filter(|(e, _)| *e <= delta).map(|(_, d)| *d).fold(0.0, f64::max);
            (delta, m)
        })
        .collect()
}

/// Symmetric Ekeland point of variant I, II, IV or V from u0 in S.
pub fn symmetric_ekeland(
    f: &dyn Functional,
    setup: &Setup,
    u0: &[f64],
    sigma: f64,
    rho: f64,
    variant: EkelandVariant,
) -> Result<Certificate> {
    if !(sigma > 0.0 && rho > 0.0) {
        return Err(SymError::InvalidArgument("sigma and rho must be positive".into()));
    }
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    check_class(f, setup)?;
    let metric = setup.metric.as_ref();
    // variant I keeps the caller's S'; the others run on the whole space
    let chain_setup = match variant {
        EkelandVariant::I => setup.clone(),
        _ => setup.clone().with_domain(Arc::new(Whole)),
    };
    let fu0 = f.eval(u0);
    if !fu0.is_finite() {
        return Err(SymError::OutsideDomain);
    }
    let inf = inf_estimate(f, &chain_setup, u0);
    let mut inf_val = inf.value.min(fu0);
    // IV splits rho into rho1 = rho2 = rho/2 and needs f(u0) < inf + sigma rho1
    let start_radius = if variant == EkelandVariant::IV { rho / 2.0 } else { rho };
    if variant != EkelandVariant::V {
        let required = inf_val + sigma * start_radius;
        if !(fu0 <= required) {
            return Err(SymError::BadStart { f_u0: fu0, required });
        }
    }
    let approx = approximate(&setup.space, u0, rho)?;
    let mut ut = approx.values.clone();
    if variant == EkelandVariant::I && !chain_setup.domain.contains(&ut) {
        ut = chain_setup.domain.project(&ut);
    }
    let opts = ChainOptions { use_theta: variant != EkelandVariant::I, ..Default::default() };
    let s2 = chain_setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone()]].concat());
    let chain = ekeland_chain(f, &s2, &ut, sigma, &opts)?;
    let v = chain.v.clone();
    let fv = chain.fv;
    inf_val = inf_val.min(fv);

    let tag = match variant {
        EkelandVariant::I => Variant::SymEkelandI,
        EkelandVariant::II => Variant::SymEkelandII,
        EkelandVariant::IV => Variant::SymEkelandIV,
        EkelandVariant::V => Variant::SymEkelandV,
    };
    let strict = variant == EkelandVariant::V;
    let mut cert = chain_setup.blank(tag, v.clone(), sigma, rho, 1.0, Inequality::Ekeland { sigma, strict });
    cert.inf_est = Some(inf_val);
    cert.probes = inf.probes;
    cert.iterations = chain.iterations;
    cert.t_rho_sequence = approx.specs(&setup.space);

    let sym = symmetry_residual_values(&setup.space, &v);
    let tu = metric.dist(&ut, u0);
    let dv_ut = metric.dist(&v, &ut);
    cert.report("||T u0 - u0||", tu);
    cert.report("||T u0 - u0*||_V", approx.residual);
    match variant {
        EkelandVariant::V => {
            cert.measure("(b) altered: f(v) + sigma ||v - T u0|| - f(u0)", fv + sigma * dv_ut - fu0, 0.0);
            if fu0 <= inf_val + sigma * rho {
                // start precondition holds: the location and symmetry bounds follow
                cert.measure("location: ||v - T u0|| - (f(u0) - f(v))/sigma", dv_ut - (fu0 - fv) / sigma, 0.0);
                cert.measure("location: (f(u0) - f(v))/sigma", (fu0 - fv) / sigma, rho);
                cert.measure("location: ||v - u0||", metric.dist(&v, u0), rho + tu);
                cert.measure("(a) symmetry: ||v - v*||_V", sym, sym_bound(setup, rho, variant));
            } else {
                cert.report("(a) symmetry: ||v - v*||_V", sym);
                cert.notes.push("start above inf_est + sigma rho: location and symmetry bounds not claimed".into());
            }
        }
        _ => {
            cert.measure("(a) symmetry: ||v - v*||_V", sym, sym_bound(setup, rho, variant));
            cert.measure("energy: f(v) - f(u0)", fv - fu0, 0.0);
            cert.measure("location: ||v - u0||", metric.dist(&v, u0), rho + tu);
            cert.measure("gap: f(v) - inf_est", fv - inf_val, sigma * start_radius);
        }
    }
    if variant == EkelandVariant::IV {
        let scale = 1.0 + fv.abs();
        let deltas: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|d| d * scale).collect();
        let sched = stability_modulus(f, &chain_setup, &v, sigma, &deltas, setup.samples.max(1000));
        for (d, m) in &sched {
            cert.report(&format!("stability modulus at delta={d:.1e}"), *m);
        }
        let first = sched.first().map(|s| s.1).unwrap_or(0.0);
        let last = sched.last().map(|s| s.1).unwrap_or(0.0);
        cert.measure("(c) stability: modulus(delta_min) - modulus(delta_max)", last - first, 0.0);
    }
    chain_setup.finish(f, &mut cert);
    Ok(cert)
}

/// A sequence (f_h) converging to f in the sense of the Gamma-limit variant.
pub trait FunctionalSequence: Send + Sync {
    fn name(&self) -> String;
    fn limit(&self) -> FunctionalRef;
    fn at(&self, h: usize) -> FunctionalRef;
}

/// f_h = f for all h.
pub struct ConstantSequence(pub FunctionalRef);

impl FunctionalSequence for ConstantSequence {
    fn name(&self) -> String {
        "constant".into()
    }
    fn limit(&self) -> FunctionalRef {
        self.0.clone()
    }
    fn at(&self, _h: usize) -> FunctionalRef {
        self.0.clone()
    }
}

/// f_h = f + (tau/h) ||u||_{L2}^2: polarization invariant perturbation,
/// inf f_h >= inf f, and f_h(u) -> f(u) pointwise.
pub struct VanishingPerturbation {
    pub base: FunctionalRef,
    pub space: Arc<GridSpace>,
    pub tau: f64,
}

struct Perturbed {
    base: FunctionalRef,
    space: Arc<GridSpace>,
    c: f64,
}

impl Functional for Perturbed {
    fn name(&self) -> String {
        format!("{} + {}||u||^2", self.base.name(), self.c)
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.base.eval(u) + self.c * self.space.norm(NormKind::L(2.0), u).powi(2)
    }
    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let m = self.space.cell_measure();
        let g = self.base.gradient(u)?;
        Some(g.iter().zip(u).map(|(a, x)| a + 2.0 * self.c * m * x).collect())
    }
    fn hessian(&self, u: &[f64]) -> Option<nalgebra::DMatrix<f64>> {
        let n = u.len();
        let h = self.base.hessian(u)?;
        Some(h + nalgebra::DMatrix::identity(n, n) * (2.0 * self.c * self.space.cell_measure()))
    }
    fn symmetry_class(&self) -> SymmetryClass {
        self.base.symmetry_class()
    }
    fn lower_bound(&self) -> Option<f64> {
        self.base.lower_bound()
    }
    fn bounds(&self) -> Option<(f64, f64)> {
        self.base.bounds()
    }
}

impl FunctionalSequence for VanishingPerturbation {
    fn name(&self) -> String {
        "vanishing-perturbation".into()
    }
    fn limit(&self) -> FunctionalRef {
        self.base.clone()
    }
    fn at(&self, h: usize) -> FunctionalRef {
        Arc::new(Perturbed { base: self.base.clone(), space: self.space.clone(), c: self.tau / h as f64 })
    }
}

/// Gamma-limit variant: picks u in Y nearly minimizing f, constants
/// sigma_hat < sigma_tilde < sigma and m > 1 with m sigma_tilde/(m-1) < sigma,
/// an index h >= h0 at which f_h is uniformly close enough to f, and runs
/// variant II on f_h from u_h = u with (m sigma_tilde/(m-1), (m-1) rho/m).
pub fn symmetric_ekeland_gamma(
    seq: &dyn FunctionalSequence,
    setup: &Setup,
    y: &[Vec<f64>],
    sigma: f64,
    rho: f64,
    h0: usize,
) -> Result<Certificate> {
    if y.is_empty() {
        return Err(SymError::InvalidArgument("the set Y is empty".into()));
    }
    if y.iter().any(|p| !setup.space.is_nonnegative(p)) {
        return Err(SymError::InvalidArgument("Y must lie in the cone S".into()));
    }
    let f = seq.limit();
    let whole = setup.clone().with_domain(Arc::new(Whole));
    let (u, fu) = y
        .iter()
        .map(|p| (p.clone(), f.eval(p)))
        .fold((y[0].clone(), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let inf_f = inf_estimate(f.as_ref(), &whole, &u).value.min(fu);
    let a = (fu - inf_f) / rho;
    if !(a < sigma) {
        return Err(SymError::BadStart { f_u0: fu, required: inf_f + sigma * rho });
    }
    let s_hat = a + (sigma - a) / 3.0;
    let s_tilde = a + 2.0 * (sigma - a) / 3.0;
    let m = 2.0 * sigma / (sigma - s_tilde);
    let gap = (s_tilde - s_hat) * rho / 2.0;
    let mut h = h0.max(1);
    let (fh, inf_h) = loop {
        let fh = seq.at(h);
        let inf_h = inf_estimate(fh.as_ref(), &whole, &u).value.min(fh.eval(&u));
        if inf_h >= inf_f - gap && fh.eval(&u) <= fu + gap {
            break (fh, inf_h);
        }
        if h > (1 << 30) {
            return Err(SymError::ConvergenceFailure {
                context: "no index h with f_h uniformly close to f".into(),
                iterations: h,
                residual: fh.eval(&u) - fu,
                best: None,
            });
        }
        h *= 2;
    };
    let sigma_p = m * s_tilde / (m - 1.0);
    let rho_p = (m - 1.0) * rho / m;
    let mut cert = symmetric_ekeland(fh.as_ref(), setup, &u, sigma_p, rho_p, EkelandVariant::II)?;
    cert.variant = Variant::SymEkelandIII;
    let metric = setup.metric.as_ref();
    let v = cert.v.clone();
    let fv = fh.eval(&v);
    let approx = approximate(&setup.space, &u, rho_p)?;
    let tu = metric.dist(&approx.values, &u);
    let d_y = y.iter().map(|p| metric.dist(&v, p)).fold(f64::INFINITY, f64::min);
    let k = setup.k();
    let sym = symmetry_residual_values(&setup.space, &v);
    cert.measured.clear();
    cert.report("index h", h as f64);
    cert.report("m", m);
    cert.report("sigma_hat", s_hat);
    cert.report("sigma_tilde", s_tilde);
    cert.report("inf_est f_h", inf_h);
    cert.report("inf_est f", inf_f);
    cert.measure("(a) symmetry: ||v - v*||_V", sym, (k * (setup.space.c_theta() + 1.0) + 1.0) * rho);
    cert.measure("(b) level: |f_h(v) - inf f|", (fv - inf_f).abs(), sigma * rho);
    let y_fixed = y.iter().all(|p| is_family_fixed(&setup.space, p));
    let y_bound = if y_fixed { rho } else { rho + tu };
    cert.measure("(c) distance: d(v, Y)", d_y, y_bound);
    cert.notes.push(format!("sequence {}; inequality certified with sigma' = {sigma_p:.6e} <= sigma", seq.name()));
    cert.seal();
    Ok(cert)
}

/// Sampler spec used by certificate re-verification with the setup seed.
pub fn default_sampler(setup: &Setup) -> SamplerSpec {
    SamplerSpec { n_samples: setup.samples, seed: derive_seed(setup.seed, 0xCE27) }
}
