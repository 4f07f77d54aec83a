//! Experiment configs. Every struct rejects unknown keys, and a parsed config
//! written back with `to_canonical` reproduces a canonical file byte for byte.

use serde::{Deserialize, Serialize};
use symvar::grid::GridSpec;
use symvar::metric::MetricSpec;
use symvar::rearrange::PolarizerSpec;
use symvar::registry::{HalfWidth, Named};
use symvar::NormKind;

pub const SCHEMA: &str = "symvar/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    /// Sample count for certificate checks; engine default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "x_metric")]
    pub metric: MetricSpec,
    /// Output directory; the command line and SYMVAR_OUT take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub operation: Operation,
}

fn x_metric() -> MetricSpec {
    MetricSpec { kind: NormKind::X, nodes: None }
}

fn thousand() -> usize {
    1000
}

fn default_radii() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

/// Ball {center + z : z in span(basis), |z| <= radius}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Operation {
    Polarize {
        u: Vec<f64>,
        polarizer: PolarizerSpec,
    },
    Schwarz {
        u: Vec<f64>,
    },
    ApproxSymmetrize {
        u: Vec<f64>,
        rho: f64,
    },
    ZhongRadius {
        weight: Named,
        rho: f64,
    },
    Engine {
        engine: Named,
        functional: Named,
        u0: Vec<f64>,
        /// Intersected; empty means the whole space.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        domain: Vec<Named>,
    },
    /// Re-samples a stored certificate with the config seed.
    Verify {
        /// Path relative to the config file.
        certificate: String,
        functional: Named,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        domain: Vec<Named>,
    },
    StrongSlope {
        functional: Named,
        u: Vec<f64>,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default = "thousand")]
        directions: usize,
    },
    QForm {
        functional: Named,
        u: Vec<f64>,
        w: Vec<f64>,
        deltas: Vec<f64>,
        #[serde(default = "thousand")]
        probes: usize,
    },
    /// Lower Dini derivative of a registered nonlinearity g at s.
    LowerDerivative {
        nonlinearity: Named,
        s: f64,
        deltas: Vec<f64>,
        #[serde(default = "thousand")]
        probes: usize,
    },
    Quasilinear {
        integrand: Named,
        #[serde(default)]
        forcing: f64,
        epsilon: f64,
    },
    Semilinear {
        nonlinearity: Named,
        u0: Vec<f64>,
        schedule: Vec<f64>,
        #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
        half_width: Option<HalfWidth>,
    },
    Caristi {
        map: Named,
        functional: Named,
        u0: Vec<f64>,
        epsilon: f64,
    },
    Clarke {
        map: Named,
        sigma: f64,
        u0: Vec<f64>,
        epsilon: f64,
    },
    Drop {
        x: Vec<f64>,
        ball: BallSpec,
        constraint: Vec<Named>,
        epsilon: f64,
        #[serde(default = "ten_thousand")]
        minimality_samples: usize,
    },
    Petal {
        x: Vec<f64>,
        y: Vec<f64>,
        constraint: Vec<Named>,
        epsilon: f64,
        #[serde(default = "ten_thousand")]
        minimality_samples: usize,
    },
    PetalInclusions {
        epsilon: f64,
        x0: Vec<f64>,
        x1: Vec<f64>,
        #[serde(default = "thousand")]
        boundary_samples: usize,
    },
}

fn ten_thousand() -> usize {
    10_000
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Polarize { .. } => "polarize",
            Operation::Schwarz { .. } => "schwarz",
            Operation::ApproxSymmetrize { .. } => "approx-symmetrize",
            Operation::ZhongRadius { .. } => "zhong-radius",
            Operation::Engine { .. } => "engine",
            Operation::Verify { .. } => "verify",
            Operation::StrongSlope { .. } => "strong-slope",
            Operation::QForm { .. } => "q-form",
            Operation::LowerDerivative { .. } => "lower-derivative",
            Operation::Quasilinear { .. } => "quasilinear",
            Operation::Semilinear { .. } => "semilinear",
            Operation::Caristi { .. } => "caristi",
            Operation::Clarke { .. } => "clarke",
            Operation::Drop { .. } => "drop",
            Operation::Petal { .. } => "petal",
            Operation::PetalInclusions { .. } => "petal-inclusions",
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if cfg.schema != SCHEMA {
            return Err(format!("field `schema`: expected \"{SCHEMA}\", found \"{}\"", cfg.schema));
        }
        Ok(cfg)
    }

    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
