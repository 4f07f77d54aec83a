//! The Ekeland chain and the infimum probe shared by all engines.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::verify::{scan, SamplerSpec};
use super::zhong::Weight;
use super::{default_slack, Certificate, Inequality, ProbeRecord, Status, Variant, ViolationReport, TOL_CERT};
use crate::domain::{DomainRef, Whole};
use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::grid::{theta, GridSpace, GridSpec};
use crate::metric::Metric;
use crate::optimize::{minimize_penalized, LocalOptions};
use crate::sampling::{derive_seed, rng};

pub type MapRef = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Everything an engine needs besides the functional and its parameters.
#[derive(Clone)]
pub struct Setup {
    pub space: Arc<GridSpace>,
    pub metric: Arc<dyn Metric>,
    pub domain: DomainRef,
    /// Samples for the certificate's inequality check.
    pub samples: usize,
    pub seed: u64,
    /// Extra starting points for the inner minimizations.
    pub anchors: Vec<Vec<f64>>,
}

impl Setup {
    pub fn new(space: &Arc<GridSpace>, metric: Arc<dyn Metric>) -> Self {
        Setup {
            space: space.clone(),
            metric,
            domain: Arc::new(Whole),
            samples: 10_000,
            seed: 0,
            anchors: Vec::new(),
        }
    }

    pub fn with_domain(mut self, domain: DomainRef) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_anchors(mut self, anchors: Vec<Vec<f64>>) -> Self {
        self.anchors = anchors;
        self
    }

    /// Embedding constant of the engine metric into V.
    pub fn k(&self) -> f64 {
        self.metric.v_embedding()
    }

    pub(crate) fn blank(&self, variant: Variant, v: Vec<f64>, sigma: f64, rho: f64, p_exp: f64, inequality: Inequality) -> Certificate {
        Certificate {
            variant,
            status: Status::Failed,
            grid: GridSpec::of(&self.space),
            metric: self.metric.spec(),
            v,
            eta: None,
            node: None,
            sigma,
            rho,
            p_exp,
            inequality,
            measured: BTreeMap::new(),
            violation: ViolationReport::empty(self.seed),
            slack: 0.0,
            tol_cert: TOL_CERT,
            t_rho_sequence: Vec::new(),
            k_embed: self.k(),
            c_theta: self.space.c_theta(),
            inf_est: None,
            probes: Vec::new(),
            iterations: 0,
            notes: Vec::new(),
        }
    }

    /// Runs the sampled check at the certificate's point and seals it.
    pub(crate) fn finish(&self, f: &dyn Functional, cert: &mut Certificate) {
        let spec = SamplerSpec { n_samples: self.samples, seed: derive_seed(self.seed, 0xCE27) };
        cert.violation = scan(f, self.domain.as_ref(), self.metric.as_ref(), &cert.v, &cert.inequality, spec);
        cert.slack = default_slack(f.eval(&cert.v));
        cert.seal();
    }
}

#[derive(Clone, Debug)]
pub struct InfEstimate {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub probes: Vec<ProbeRecord>,
}

/// Multi-start local minimization: from u0, the origin, the anchors and
/// eight seeded random points. The smallest value reached is the estimate.
pub fn inf_estimate(f: &dyn Functional, setup: &Setup, u0: &[f64]) -> InfEstimate {
    let n = u0.len();
    let domain = setup.domain.as_ref();
    let mut starts: Vec<(String, Vec<f64>)> = vec![("start".into(), u0.to_vec()), ("origin".into(), vec![0.0; n])];
    for (k, a) in setup.anchors.iter().enumerate() {
        starts.push((format!("anchor {k}"), a.clone()));
    }
    let mut r = rng(derive_seed(setup.seed, 0x1AF));
    let (lo, hi) = match f.bounds() {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() => (lo, hi),
        _ => {
            let s = 1.0 + u0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            (-s, s)
        }
    };
    for k in 0..8 {
        starts.push((format!("random {k}"), (0..n).map(|_| r.gen_range(lo..=hi)).collect()));
    }
    let mut best = InfEstimate { value: f64::INFINITY, argmin: u0.to_vec(), probes: Vec::new() };
    for (label, s) in starts {
        let s = domain.project(&s);
        let (x, val) = minimize_penalized(f, domain, setup.metric.as_ref(), &s, 0.0, 1.0, &[s.clone()], LocalOptions::default());
        if !val.is_finite() {
            continue;
        }
        best.probes.push(ProbeRecord { label, value: val });
        if val < best.value {
            best.value = val;
            best.argmin = x;
        }
    }
    best
}

/// Point on the segment from a to b with f = target, found by bisection
/// keeping f(lo) <= target. Returns b when f(b) <= target already.
pub fn level_point(f: &dyn Functional, a: &[f64], b: &[f64], target: f64) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect() };
    if f.eval(b) <= target {
        return b.to_vec();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f.eval(&at(mid)) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

#[derive(Clone)]
pub struct ChainOptions {
    pub max_iter: usize,
    /// Offer Theta(v) as a start (the dominance candidate).
    pub use_theta: bool,
    /// Weight h and center: the step modulus at v is sigma / (1 + h(d(v, center))).
    pub weight: Option<(Arc<dyn Weight>, Vec<f64>)>,
    /// A map whose iterates are offered as starts (fixed-point problems).
    pub picard: Option<MapRef>,
    /// Samples of the violation search run after the inner solver stalls.
    pub search_samples: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { max_iter: 5000, use_theta: true, weight: None, picard: None, search_samples: 2000 }
    }
}

#[derive(Clone, Debug)]
pub struct ChainResult {
    pub v: Vec<f64>,
    pub fv: f64,
    pub iterations: usize,
    /// f along the chain, nonincreasing.
    pub trace: Vec<f64>,
    /// Step modulus at the final point.
    pub sigma_final: f64,
}

fn modulus(sigma: f64, metric: &dyn Metric, opts: &ChainOptions, v: &[f64]) -> (f64, f64) {
    match &opts.weight {
        None => (sigma, 1.0),
        Some((h, c)) => {
            let factor = 1.0 + h.value(metric.dist(v, c));
            (sigma / factor, factor)
        }
    }
}

/// v_0 = u0; v_{k+1} is the best point found for w -> f(w) + s_k d(w, v_k)
/// over the domain, accepted when it lowers f(v_k) by more than a relative
/// 1e-14. When the inner solver stalls, a sampled search for violators of
/// the inequality runs; a violator is taken as the next step. The chain
/// stops when neither finds progress.
pub fn ekeland_chain(
    f: &dyn Functional,
    setup: &Setup,
    u0: &[f64],
    sigma: f64,
    opts: &ChainOptions,
) -> Result<ChainResult> {
    let domain = setup.domain.as_ref();
    let metric = setup.metric.as_ref();
    let mut v = if domain.contains(u0) { u0.to_vec() } else { domain.project(u0) };
    let mut fv = f.eval(&v);
    if !fv.is_finite() {
        return Err(SymError::OutsideDomain);
    }
    let mut trace = vec![fv];
    for it in 0..opts.max_iter {
        let (sv, factor) = modulus(sigma, metric, opts, &v);
        let tol = 1e-14 * (1.0 + fv.abs());
        let mut starts = vec![v.clone()];
        starts.extend(setup.anchors.iter().cloned());
        if opts.use_theta {
            starts.push(theta(&v));
        }
        if let Some(p) = &opts.picard {
            let mut x = v.clone();
            for _ in 0..3 {
                x = p(&x);
                starts.push(x.clone());
            }
        }
        let (w, val) = minimize_penalized(f, domain, metric, &v, sv, 1.0, &starts, LocalOptions::default());
        let mut next = (val <= fv - tol && w != v).then_some(w);
        if next.is_none() {
            let ineq = match &opts.weight {
                None => Inequality::Ekeland { sigma: sv, strict: false },
                Some((h, _)) => Inequality::Weighted { sigma, factor, weight: h.name().to_string() },
            };
            let spec = SamplerSpec { n_samples: opts.search_samples, seed: derive_seed(setup.seed, 0xC4A1 + it as u64) };
            let rep = scan(f, domain, metric, &v, &ineq, spec);
            if rep.max_violation > tol {
                next = rep.argmax_w;
            }
        }
        match next {
            Some(w) => {
                let fw = f.eval(&w);
                debug_assert!(fw < fv, "chain energy must decrease");
                v = w;
                fv = fw;
                trace.push(fv);
            }
            None => {
                return Ok(ChainResult { v, fv, iterations: it, trace, sigma_final: sv });
            }
        }
    }
    Err(SymError::ConvergenceFailure {
        context: "ekeland chain".into(),
        iterations: opts.max_iter,
        residual: fv,
        best: Some(v),
    })
}

/// Plain Ekeland point from u0 with f(u0) <= inf_est + sigma rho.
pub fn ekeland_point(f: &dyn Functional, setup: &Setup, u0: &[f64], sigma: f64, rho: f64) -> Result<Certificate> {
    if !(sigma > 0.0 && rho > 0.0) {
        return Err(SymError::InvalidArgument("sigma and rho must be positive".into()));
    }
    let fu0 = f.eval(u0);
    let inf = inf_estimate(f, setup, u0);
    let inf_val = inf.value.min(fu0);
    let required = inf_val + sigma * rho;
    if !(fu0 <= required) {
        return Err(SymError::BadStart { f_u0: fu0, required });
    }
    let opts = ChainOptions { use_theta: false, ..Default::default() };
    let s2 = setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone()]].concat());
    let chain = ekeland_chain(f, &s2, u0, sigma, &opts)?;
    let mut cert = setup.blank(
        Variant::EkelandCore,
        chain.v.clone(),
        sigma,
        rho,
        1.0,
        Inequality::Ekeland { sigma, strict: false },
    );
    let inf_val = inf_val.min(chain.fv);
    cert.inf_est = Some(inf_val);
    cert.probes = inf.probes;
    cert.iterations = chain.iterations;
    cert.measure("energy: f(v) - f(u0)", chain.fv - fu0, 0.0);
    cert.measure("location: ||v - u0||", setup.metric.dist(&chain.v, u0), rho);
    cert.measure("gap: f(v) - inf_est", chain.fv - inf_val, sigma * rho);
    setup.finish(f, &mut cert);
    Ok(cert)
}
