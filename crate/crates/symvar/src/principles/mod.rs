//! Constructive variational principles. Every engine returns a
//! [`Certificate`]: the output point, measured bounds next to their
//! theoretical values, and a sampled check of the variational inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::metric::{Metric, MetricSpec};
use crate::rearrange::PolarizerSpec;

pub mod bp;
pub mod constrained;
pub mod dgz;
pub mod engine;
pub mod path;
pub mod sqps;
pub mod symmetric;
pub mod verify;
pub mod zhong;

pub use bp::symmetric_borwein_preiss;
pub use constrained::{constrained_symmetric_ekeland, ConstraintSet};
pub use dgz::{dgz_check, Bump};
pub use engine::{ekeland_chain, ekeland_point, inf_estimate, level_point, ChainOptions, InfEstimate};
pub use path::{path_minimax, PathProblem};
pub use sqps::{sqps_sequence, QBoundReport, SqpsStep};
pub use engine::Setup;
pub use symmetric::{symmetric_ekeland, symmetric_ekeland_gamma, EkelandVariant, FunctionalSequence};
pub use verify::{scan, verify_certificate, SamplerSpec};
pub use zhong::{symmetric_zhong, zhong_radius, Weight, WeightKind};

/// Default absolute tolerance between a measured value and its bound.
pub const TOL_CERT: f64 = 1e-7;

/// Declared slack for the sampled inequality at a point with value f(v).
pub fn default_slack(fv: f64) -> f64 {
    1e-6 * (1.0 + fv.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    EkelandCore,
    SymEkelandI,
    SymEkelandII,
    SymEkelandIII,
    SymEkelandIV,
    SymEkelandV,
    SymBp,
    SymZhong,
    DgzCheck,
    Constrained,
    PathMinimax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Failed,
}

/// A measured quantity; `bound: None` marks a reported-only value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub bound: Option<f64>,
}

impl Bound {
    pub fn holds(&self, tol: f64) -> bool {
        match self.bound {
            Some(b) => self.value.is_finite() && self.value <= b + tol,
            None => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub n_samples: usize,
    pub max_violation: f64,
    pub argmax_w: Option<Vec<f64>>,
    pub seed: u64,
}

impl ViolationReport {
    pub fn empty(seed: u64) -> Self {
        ViolationReport { n_samples: 0, max_violation: 0.0, argmax_w: None, seed }
    }
}

/// The inequality a certificate claims at its point v; the deficit is how
/// much a test point w breaks it (positive means violated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Inequality {
    /// f(w) >= f(v) - sigma d(w, v); `strict` records the altered form.
    Ekeland { sigma: f64, strict: bool },
    /// f(w) >= f(v) - sigma d(w, v) / factor.
    Weighted { sigma: f64, factor: f64, weight: String },
    /// f(w) >= f(v) + sigma (d(v, eta)^p - d(w, eta)^p).
    BorweinPreiss { sigma: f64, p_exp: f64, eta: Vec<f64> },
    /// f(w) + g(w) >= f(v) + g(v); no bump means g = 0.
    Perturbed { bump: Option<Bump> },
}

impl Inequality {
    pub fn deficit(&self, metric: &dyn Metric, v: &[f64], fv: f64, w: &[f64], fw: f64) -> f64 {
        match self {
            Inequality::Ekeland { sigma, .. } => fv - sigma * metric.dist(w, v) - fw,
            Inequality::Weighted { sigma, factor, .. } => fv - sigma * metric.dist(w, v) / factor - fw,
            Inequality::BorweinPreiss { sigma, p_exp, eta } => {
                fv + sigma * (metric.dist(v, eta).powf(*p_exp) - metric.dist(w, eta).powf(*p_exp)) - fw
            }
            Inequality::Perturbed { bump } => match bump {
                None => fv - fw,
                Some(b) => fv + b.value(metric, v) - fw - b.value(metric, w),
            },
        }
    }
}

/// One start of the infimum probe and the value it reached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub variant: Variant,
    pub status: Status,
    pub grid: GridSpec,
    pub metric: MetricSpec,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    /// The selected node when v is a discrete path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<Vec<f64>>,
    pub sigma: f64,
    pub rho: f64,
    pub p_exp: f64,
    pub inequality: Inequality,
    pub measured: BTreeMap<String, Bound>,
    pub violation: ViolationReport,
    pub slack: f64,
    pub tol_cert: f64,
    pub t_rho_sequence: Vec<PolarizerSpec>,
    pub k_embed: f64,
    pub c_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inf_est: Option<f64>,
    pub probes: Vec<ProbeRecord>,
    pub iterations: usize,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn measure(&mut self, name: &str, value: f64, bound: f64) {
        self.measured.insert(name.to_string(), Bound { value, bound: Some(bound) });
    }

    pub fn report(&mut self, name: &str, value: f64) {
        self.measured.insert(name.to_string(), Bound { value, bound: None });
    }

    /// Names of the bounds that fail, plus the sampled inequality if its
    /// violation exceeds the slack.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .measured
            .iter()
            .filter(|(_, b)| !b.holds(self.tol_cert))
            .map(|(k, _)| k.clone())
            .collect();
        if !(self.violation.max_violation <= self.slack) {
            out.push("sampled inequality".into());
        }
        out
    }

    /// Recomputes the status from the recorded values.
    pub fn seal(&mut self) {
        self.status = if self.failures().is_empty() { Status::Pass } else { Status::Failed };
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}
