//! Discrete function spaces: cells, norms, the cone of nonnegative functions
//! and the embedding constant between the optimization and measurement norms.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymError};
use crate::rearrange::{build_family, Polarizer};

/// Which norm of the triple to use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    X,
    V,
    W,
    /// Discrete L^r with the uniform cell measure.
    L(f64),
}

impl NormKind {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "x" => Ok(NormKind::X),
            "v" => Ok(NormKind::V),
            "w" => Ok(NormKind::W),
            _ => {
                let r = t
                    .strip_prefix('l')
                    .and_then(|r| r.parse::<f64>().ok())
                    .filter(|r| *r >= 1.0 && r.is_finite())
                    .ok_or_else(|| SymError::InvalidArgument(format!("unknown norm `{s}`")))?;
                Ok(NormKind::L(r))
            }
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::X => write!(f, "x"),
            NormKind::V => write!(f, "v"),
            NormKind::W => write!(f, "w"),
            NormKind::L(r) => write!(f, "l{r}"),
        }
    }
}

impl Serialize for NormKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        NormKind::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Edge between two cells along one axis; `None` is a cell outside the grid
/// where the zero extension applies.
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub axis: usize,
}

pub struct GridSpace {
    id: u64,
    dimension: usize,
    n: usize,
    radius: f64,
    p: f64,
    q_v: f64,
    q_w: f64,
    spacing: f64,
    measure: f64,
    half: Vec<[i64; 2]>,
    centers: Vec<f64>,
    edges: Vec<Edge>,
    radial: Vec<usize>,
    family: Vec<Polarizer>,
    k: OnceLock<f64>,
    gram: OnceLock<(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)>,
    lap: OnceLock<(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)>,
}

impl fmt::Debug for GridSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpace")
            .field("dimension", &self.dimension)
            .field("n", &self.n)
            .field("radius", &self.radius)
            .field("p", &self.p)
            .field("q_v", &self.q_v)
            .field("q_w", &self.q_w)
            .finish()
    }
}

/// Exponent of V: the Sobolev conjugate when p < N, otherwise `2p`.
pub fn default_q_v(dimension: usize, p: f64) -> f64 {
    let n = dimension as f64;
    if p < n {
        n * p / (n - p)
    } else {
        2.0 * p
    }
}

pub fn make_grid(dimension: usize, n: usize, radius: f64, p: f64, q_w: f64) -> Result<Arc<GridSpace>> {
    make_grid_with(dimension, n, radius, p, q_w, None)
}

pub fn make_grid_with(
    dimension: usize,
    n: usize,
    radius: f64,
    p: f64,
    q_w: f64,
    q_v: Option<f64>,
) -> Result<Arc<GridSpace>> {
    if dimension != 1 && dimension != 2 {
        return Err(SymError::InvalidGrid(format!("dimension {dimension} is not 1 or 2")));
    }
    if n == 0 || n % 2 != 0 {
        return Err(SymError::InvalidGrid(format!("cells per axis must be even and positive, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SymError::InvalidGrid(format!("radius must be positive, got {radius}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(SymError::InvalidExponent(format!("p must exceed 1, got {p}")));
    }
    let q_v = q_v.unwrap_or_else(|| default_q_v(dimension, p));
    if !(q_w > p && q_w <= q_v && q_v.is_finite()) {
        return Err(SymError::InvalidExponent(format!(
            "need p < qW <= qV, got p = {p}, qW = {q_w}, qV = {q_v}"
        )));
    }

    let spacing = 2.0 * radius / n as f64;
    let measure = spacing.powi(dimension as i32);
    let n_cells = n.pow(dimension as u32);
    let coord = |k: usize| 2 * k as i64 - (n as i64 - 1);
    let mut half = Vec::with_capacity(n_cells);
    let mut centers = Vec::with_capacity(n_cells * dimension);
    for idx in 0..n_cells {
        let (ix, iy) = (idx % n, idx / n);
        let h = if dimension == 1 { [coord(ix), 0] } else { [coord(ix), coord(iy)] };
        half.push(h);
        for a in 0..dimension {
            centers.push(h[a] as f64 * spacing / 2.0);
        }
    }

    let mut edges = Vec::new();
    let rows = if dimension == 1 { 1 } else { n };
    for row in 0..rows {
        for k in 0..=n {
            let from = (k > 0).then(|| row * n + k - 1);
            let to = (k < n).then(|| row * n + k);
            edges.push(Edge { from, to, axis: 0 });
        }
    }
    if dimension == 2 {
        for col in 0..n {
            for k in 0..=n {
                let from = (k > 0).then(|| (k - 1) * n + col);
                let to = (k < n).then(|| k * n + col);
                edges.push(Edge { from, to, axis: 1 });
            }
        }
    }

    let mut radial: Vec<usize> = (0..n_cells).collect();
    radial.sort_by_key(|&i| (half[i][0] * half[i][0] + half[i][1] * half[i][1], i));

    let id = fingerprint(&[dimension as u64, n as u64, radius.to_bits(), p.to_bits(), q_v.to_bits(), q_w.to_bits()]);
    let family = build_family(id, dimension, n, &half);

    Ok(Arc::new(GridSpace {
        id,
        dimension,
        n,
        radius,
        p,
        q_v,
        q_w,
        spacing,
        measure,
        half,
        centers,
        edges,
        radial,
        family,
        k: OnceLock::new(),
        gram: OnceLock::new(),
        lap: OnceLock::new(),
    }))
}

fn fingerprint(parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &x in parts {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl GridSpace {
    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn n_cells(&self) -> usize {
        self.half.len()
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q_v(&self) -> f64 {
        self.q_v
    }
    pub fn q_w(&self) -> f64 {
        self.q_w
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn cell_measure(&self) -> f64 {
        self.measure
    }
    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dimension..(i + 1) * self.dimension]
    }
    /// Center coordinates in units of half the spacing (odd integers).
    pub fn half_coords(&self, i: usize) -> [i64; 2] {
        self.half[i]
    }
    /// |center|^2 in half-spacing units; exact, so ties are exact.
    pub fn radius_key(&self, i: usize) -> i64 {
        let h = self.half[i];
        h[0] * h[0] + h[1] * h[1]
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    /// Cells by |center| ascending, ties by index.
    pub fn radial_order(&self) -> &[usize] {
        &self.radial
    }
    pub fn family(&self) -> &[Polarizer] {
        &self.family
    }
    pub fn c_theta(&self) -> f64 {
        1.0
    }

    /// Embedding constant for X into V, from probe maximization.
    pub fn k_embed(&self) -> f64 {
        *self.k.get_or_init(|| crate::embed::estimate_k(self))
    }

    /// sup ||u||_V / ||u||_kind: K for X, 1 for V, a probe estimate otherwise.
    pub fn embedding_constant(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::X => self.k_embed(),
            NormKind::V => 1.0,
            _ => crate::embed::estimate_ratio(self, kind),
        }
    }

    pub fn lr(&self, u: &[f64], r: f64) -> f64 {
        let s: f64 = u.iter().map(|x| x.abs().powf(r)).sum();
        (s * self.measure).powf(1.0 / r)
    }

    pub fn diff(&self, e: &Edge, u: &[f64]) -> f64 {
        let a = e.from.map_or(0.0, |i| u[i]);
        let b = e.to.map_or(0.0, |i| u[i]);
        (b - a) / self.spacing
    }

    /// Sum over edges of |difference quotient|^p, times the cell measure.
    pub fn gradient_part(&self, u: &[f64], p: f64) -> f64 {
        self.edges.iter().map(|e| self.diff(e, u).abs().powf(p)).sum::<f64>() * self.measure
    }

    pub fn norm_x(&self, u: &[f64]) -> f64 {
        let g = self.gradient_part(u, self.p);
        let z: f64 = u.iter().map(|x| x.abs().powf(self.p)).sum::<f64>() * self.measure;
        (g + z).powf(1.0 / self.p)
    }

    pub fn norm_v(&self, u: &[f64]) -> f64 {
        self.lr(u, self.p).max(self.lr(u, self.q_v))
    }

    pub fn norm_w(&self, u: &[f64]) -> f64 {
        self.lr(u, self.q_w)
    }

    pub fn norm(&self, kind: NormKind, u: &[f64]) -> f64 {
        match kind {
            NormKind::X => self.norm_x(u),
            NormKind::V => self.norm_v(u),
            NormKind::W => self.norm_w(u),
            NormKind::L(r) => self.lr(u, r),
        }
    }

    pub fn dist(&self, kind: NormKind, u: &[f64], v: &[f64]) -> f64 {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.norm(kind, &d)
    }

    fn lr_grad(&self, u: &[f64], r: f64) -> Option<Vec<f64>> {
        let nrm = self.lr(u, r);
        if nrm == 0.0 {
            return None;
        }
        let c = nrm.powf(1.0 - r) * self.measure;
        Some(
            u.iter()
                .map(|&x| if x == 0.0 { 0.0 } else { c * x.abs().powf(r - 1.0) * x.signum() })
                .collect(),
        )
    }

    /// Euclidean gradient of the chosen norm; `None` at the origin.
    pub fn norm_grad(&self, kind: NormKind, u: &[f64]) -> Option<Vec<f64>> {
        match kind {
            NormKind::L(r) => self.lr_grad(u, r),
            NormKind::W => self.lr_grad(u, self.q_w),
            NormKind::V => {
                if self.lr(u, self.p) >= self.lr(u, self.q_v) {
                    self.lr_grad(u, self.p)
                } else {
                    self.lr_grad(u, self.q_v)
                }
            }
            NormKind::X => {
                let nrm = self.norm_x(u);
                if nrm == 0.0 {
                    return None;
                }
                let p = self.p;
                let pw = |x: f64| if x == 0.0 { 0.0 } else { x.abs().powf(p - 1.0) * x.signum() };
                let mut g: Vec<f64> = u.iter().map(|&x| pw(x)).collect();
                for e in &self.edges {
                    let d = pw(self.diff(e, u)) / self.spacing;
                    if let Some(b) = e.to {
                        g[b] += d;
                    }
                    if let Some(a) = e.from {
                        g[a] -= d;
                    }
                }
                let c = nrm.powf(1.0 - p) * self.measure;
                Some(g.into_iter().map(|x| x * c).collect())
            }
        }
    }

    fn assemble(&self, with_mass: bool) -> DMatrix<f64> {
        let nc = self.n_cells();
        let mut a = DMatrix::zeros(nc, nc);
        let w = self.measure / (self.spacing * self.spacing);
        for e in &self.edges {
            if let Some(i) = e.from {
                a[(i, i)] += w;
            }
            if let Some(j) = e.to {
                a[(j, j)] += w;
            }
            if let (Some(i), Some(j)) = (e.from, e.to) {
                a[(i, j)] -= w;
                a[(j, i)] -= w;
            }
        }
        if with_mass {
            for i in 0..nc {
                a[(i, i)] += self.measure;
            }
        }
        a
    }

    /// Gram matrix of the p = 2 version of the X inner product.
    pub fn gram_x(&self) -> &DMatrix<f64> {
        &self.gram_pair().0
    }

    fn gram_pair(&self) -> &(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>) {
        self.gram.get_or_init(|| {
            let a = self.assemble(true);
            let c = a.clone().cholesky().expect("X gram is positive definite");
            (a, c)
        })
    }

    /// Dirichlet (gradient-only) Gram matrix.
    pub fn gram_laplacian(&self) -> &DMatrix<f64> {
        &self.lap_pair().0
    }

    fn lap_pair(&self) -> &(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>) {
        self.lap.get_or_init(|| {
            let a = self.assemble(false);
            let c = a.clone().cholesky().expect("Dirichlet gram is positive definite");
            (a, c)
        })
    }

    pub fn solve_gram_x(&self, g: &[f64]) -> Vec<f64> {
        self.gram_pair().1.solve(&DVector::from_column_slice(g)).as_slice().to_vec()
    }

    pub fn solve_laplacian(&self, g: &[f64]) -> Vec<f64> {
        self.lap_pair().1.solve(&DVector::from_column_slice(g)).as_slice().to_vec()
    }

    /// Dual norm of the linear form w -> g.w in the given norm, with a
    /// maximizing unit direction.
    pub fn dual_norm(&self, kind: NormKind, g: &[f64]) -> (f64, Vec<f64>) {
        crate::embed::dual_norm(self, kind, g)
    }

    pub fn is_nonnegative(&self, u: &[f64]) -> bool {
        u.iter().all(|&x| x >= 0.0)
    }
}

/// Cell values over a grid space.
#[derive(Clone)]
pub struct GridFunction {
    space: Arc<GridSpace>,
    values: Vec<f64>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction").field("values", &self.values).finish()
    }
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.space.id == other.space.id && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(space: &Arc<GridSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_cells() {
            return Err(SymError::InvalidFunction(format!(
                "expected {} values, got {}",
                space.n_cells(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(SymError::InvalidFunction(format!("value at cell {i} is not finite")));
        }
        Ok(GridFunction { space: space.clone(), values })
    }

    pub fn zeros(space: &Arc<GridSpace>) -> Self {
        GridFunction { space: space.clone(), values: vec![0.0; space.n_cells()] }
    }

    /// Callers guarantee length and finiteness.
    pub(crate) fn from_raw(space: &Arc<GridSpace>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.n_cells());
        GridFunction { space: space.clone(), values }
    }

    pub fn space(&self) -> &Arc<GridSpace> {
        &self.space
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn norm_x(&self) -> f64 {
        self.space.norm_x(&self.values)
    }
    pub fn norm_v(&self) -> f64 {
        self.space.norm_v(&self.values)
    }
    pub fn norm_w(&self) -> f64 {
        self.space.norm_w(&self.values)
    }
    pub fn norm(&self, kind: NormKind) -> f64 {
        self.space.norm(kind, &self.values)
    }
    pub fn in_cone(&self) -> bool {
        self.space.is_nonnegative(&self.values)
    }
    pub fn theta(&self) -> GridFunction {
        GridFunction { space: self.space.clone(), values: theta(&self.values) }
    }
    pub fn sub(&self, other: &GridFunction) -> Vec<f64> {
        self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()
    }
    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction { space: self.space.clone(), values: self.values.iter().map(|x| c * x).collect() }
    }

    pub fn to_record(&self) -> FunctionRecord {
        FunctionRecord {
            dimension: self.space.dimension,
            n: self.space.n,
            radius: self.space.radius,
            p: self.space.p,
            q_v: self.space.q_v,
            q_w: self.space.q_w,
            values: self.values.clone(),
        }
    }

    pub fn from_record(rec: &FunctionRecord) -> Result<Self> {
        let space = make_grid_with(rec.dimension, rec.n, rec.radius, rec.p, rec.q_w, Some(rec.q_v))?;
        GridFunction::new(&space, rec.values.clone())
    }
}

pub fn theta(u: &[f64]) -> Vec<f64> {
    u.iter().map(|x| x.abs()).collect()
}

/// Serialized form of a grid function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionRecord {
    pub dimension: usize,
    pub n: usize,
    pub radius: f64,
    pub p: f64,
    #[serde(rename = "qV")]
    pub q_v: f64,
    #[serde(rename = "qW")]
    pub q_w: f64,
    pub values: Vec<f64>,
}

/// Grid header used inside certificates and configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub n: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(rename = "qW", default, skip_serializing_if = "Option::is_none")]
    pub q_w: Option<f64>,
    #[serde(rename = "qV", default, skip_serializing_if = "Option::is_none")]
    pub q_v: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<GridSpace>> {
        let q_v = self.q_v.unwrap_or_else(|| default_q_v(self.dimension, self.p));
        let q_w = self.q_w.unwrap_or(0.5 * (self.p + q_v));
        make_grid_with(self.dimension, self.n, self.radius, self.p, q_w, Some(q_v))
    }

    pub fn of(space: &GridSpace) -> Self {
        GridSpec {
            dimension: space.dimension,
            n: space.n,
            radius: space.radius,
            p: space.p,
            q_w: Some(space.q_w),
            q_v: Some(space.q_v),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn euclid(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
