//! Distances used by the engines: a grid norm, or the sup-over-nodes norm
//! on discrete paths.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::grid::{GridSpace, NormKind};

/// Serialized form of a metric, enough to rebuild it from a grid space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub kind: NormKind,
    /// Number of path nodes for the sup-over-nodes metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

impl MetricSpec {
    pub fn build(&self, space: &Arc<GridSpace>) -> Arc<dyn Metric> {
        match self.nodes {
            None => Arc::new(GridMetric::new(space, self.kind)),
            Some(n) => Arc::new(PathMetric::new(space, self.kind, n)),
        }
    }
}

pub trait Metric: Send + Sync {
    fn norm(&self, d: &[f64]) -> f64;

    /// Euclidean gradient of the norm; `None` at the origin.
    fn norm_grad(&self, d: &[f64]) -> Option<Vec<f64>>;

    /// G with norm(d)^2 = d^T G d when the norm is Hilbertian.
    fn gram(&self) -> Option<&DMatrix<f64>>;

    /// Preconditioned descent direction for a Euclidean gradient.
    fn riesz(&self, g: &[f64]) -> Vec<f64>;

    /// Dual norm of w -> g.w with a unit maximizer.
    fn dual(&self, g: &[f64]) -> (f64, Vec<f64>);

    /// sup ||u||_V / norm(u).
    fn v_embedding(&self) -> f64;

    fn spec(&self) -> MetricSpec;

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }
}

pub struct GridMetric {
    space: Arc<GridSpace>,
    kind: NormKind,
    gram: Option<DMatrix<f64>>,
}

impl GridMetric {
    pub fn new(space: &Arc<GridSpace>, kind: NormKind) -> Self {
        let n = space.n_cells();
        let gram = match kind {
            NormKind::X if space.p() == 2.0 => Some(space.gram_x().clone()),
            NormKind::L(r) if r == 2.0 => Some(DMatrix::identity(n, n) * space.cell_measure()),
            _ => None,
        };
        GridMetric { space: space.clone(), kind, gram }
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn space(&self) -> &Arc<GridSpace> {
        &self.space
    }
}

impl Metric for GridMetric {
    fn norm(&self, d: &[f64]) -> f64 {
        self.space.norm(self.kind, d)
    }

    fn norm_grad(&self, d: &[f64]) -> Option<Vec<f64>> {
        self.space.norm_grad(self.kind, d)
    }

    fn gram(&self) -> Option<&DMatrix<f64>> {
        self.gram.as_ref()
    }

    fn riesz(&self, g: &[f64]) -> Vec<f64> {
        match self.kind {
            NormKind::X => self.space.solve_gram_x(g),
            _ => g.iter().map(|x| x / self.space.cell_measure()).collect(),
        }
    }

    fn dual(&self, g: &[f64]) -> (f64, Vec<f64>) {
        self.space.dual_norm(self.kind, g)
    }

    fn v_embedding(&self) -> f64 {
        self.space.embedding_constant(self.kind)
    }

    fn spec(&self) -> MetricSpec {
        MetricSpec { kind: self.kind, nodes: None }
    }
}

/// Paths (gamma_1, ..., gamma_k) stored node after node; norm is the max of
/// the node norms.
pub struct PathMetric {
    inner: GridMetric,
    nodes: usize,
}

impl PathMetric {
    pub fn new(space: &Arc<GridSpace>, kind: NormKind, nodes: usize) -> Self {
        PathMetric { inner: GridMetric::new(space, kind), nodes }
    }

    fn blocks<'a>(&self, d: &'a [f64]) -> impl Iterator<Item = &'a [f64]> {
        d.chunks(self.inner.space.n_cells())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }
}

impl Metric for PathMetric {
    fn norm(&self, d: &[f64]) -> f64 {
        self.blocks(d).map(|b| self.inner.norm(b)).fold(0.0, f64::max)
    }

    fn norm_grad(&self, d: &[f64]) -> Option<Vec<f64>> {
        let nc = self.inner.space.n_cells();
        let (k, best) = self
            .blocks(d)
            .map(|b| self.inner.norm(b))
            .enumerate()
            .fold((0, 0.0), |acc, (k, x)| if x > acc.1 { (k, x) } else { acc });
        if best == 0.0 {
            return None;
        }
        let mut g = vec![0.0; d.len()];
        let gk = self.inner.norm_grad(&d[k * nc..(k + 1) * nc])?;
        g[k * nc..(k + 1) * nc].copy_from_slice(&gk);
        Some(g)
    }

    fn gram(&self) -> Option<&DMatrix<f64>> {
        None
    }

    fn riesz(&self, g: &[f64]) -> Vec<f64> {
        g.chunks(self.inner.space.n_cells()).flat_map(|b| self.inner.riesz(b)).collect()
    }

    fn dual(&self, g: &[f64]) -> (f64, Vec<f64>) {
        // the dual of a max of norms is the sum of the dual norms
        let mut total = 0.0;
        let mut dir = Vec::with_capacity(g.len());
        for b in g.chunks(self.inner.space.n_cells()) {
            let (v, d) = self.inner.dual(b);
            total += v;
            dir.extend(d);
        }
        (total, dir)
    }

    fn v_embedding(&self) -> f64 {
        self.inner.v_embedding()
    }

    fn spec(&self) -> MetricSpec {
        MetricSpec { kind: self.inner.kind, nodes: Some(self.nodes) }
    }
}
