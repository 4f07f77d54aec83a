//! Symmetric minimax on discrete paths from 0 to psi: the Ekeland chain runs
//! on the interior nodes for f_hat(gamma) = max over nodes of f, and the
//! node where the max is attained is the almost critical point.

use std::sync::Arc;

use super::engine::{ekeland_chain, ChainOptions, Setup};
use super::{Certificate, Inequality, Variant};
use crate::domain::Domain;
use crate::error::{Result, SymError};
use crate::functional::{Functional, FunctionalRef};
use crate::grid::{GridSpace, NormKind};
use crate::metric::{Metric, PathMetric};
use crate::optimize::fd_gradient;
use crate::rearrange::{approximate, is_family_fixed, symmetry_residual_values};

#[derive(Clone)]
pub struct PathProblem {
    pub f: FunctionalRef,
    pub psi: Vec<f64>,
    /// Number of segments m; the path has m + 1 nodes with fixed ends.
    pub segments: usize,
    pub epsilon: f64,
    /// Known minimax level, checked when given.
    pub c_reference: Option<f64>,
}

/// f_hat over the interior nodes, ends 0 and psi fixed.
pub struct PathMax {
    f: FunctionalRef,
    psi: Vec<f64>,
    n: usize,
    ends: f64,
}

impl PathMax {
    pub fn new(f: FunctionalRef, psi: Vec<f64>) -> Self {
        let n = psi.len();
        let ends = f.eval(&vec![0.0; n]).max(f.eval(&psi));
        PathMax { f, psi, n, ends }
    }

    /// Endpoint level max(f(0), f(psi)).
    pub fn ends(&self) -> f64 {
        self.ends
    }

    /// (index, value) of the largest interior node value.
    pub fn argmax(&self, path: &[f64]) -> Option<(usize, f64)> {
        path.chunks(self.n)
            .map(|b| self.f.eval(b))
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (k, x)| match acc {
                Some((_, b)) if !(x > b) => acc,
                _ => Some((k, x)),
            })
    }

    /// Straight line t psi, t = k / m, interior nodes only.
    pub fn straight(&self, segments: usize) -> Vec<f64> {
        (1..segments)
            .flat_map(|k| {
                let t = k as f64 / segments as f64;
                self.psi.iter().map(move |x| t * x)
            })
            .collect()
    }
}

impl Functional for PathMax {
    fn name(&self) -> String {
        format!("max over path nodes of {}", self.f.name())
    }

    fn eval(&self, path: &[f64]) -> f64 {
        match self.argmax(path) {
            Some((_, x)) if x.is_nan() => f64::INFINITY,
            Some((_, x)) => x.max(self.ends),
            None => self.ends,
        }
    }

    /// A subgradient: the node gradient at the argmax, zero if an end wins.
    fn gradient(&self, path: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; path.len()];
        if let Some((k, x)) = self.argmax(path) {
            if x > self.ends {
                let node = &path[k * self.n..(k + 1) * self.n];
                let gk = self.f.gradient(node).unwrap_or_else(|| fd_gradient(&|z: &[f64]| self.f.eval(z), node));
                g[k * self.n..(k + 1) * self.n].copy_from_slice(&gk);
            }
        }
        Some(g)
    }
}

/// Paths in the cone with consecutive nodes at most `link` apart in L^2.
pub struct LinkedPath {
    space: Arc<GridSpace>,
    psi: Vec<f64>,
    link: f64,
}

impl LinkedPath {
    pub fn new(space: &Arc<GridSpace>, psi: Vec<f64>, link: f64) -> Self {
        LinkedPath { space: space.clone(), psi, link }
    }

    fn gap(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.space.norm(NormKind::L(2.0), &d)
    }

    fn max_excess(&self, path: &[f64]) -> f64 {
        let n = self.psi.len();
        let zero = vec![0.0; n];
        let k = path.len() / n;
        (0..=k)
            .map(|j| {
                let a = if j == 0 { &zero[..] } else { &path[(j - 1) * n..j * n] };
                let b = if j == k { &self.psi[..] } else { &path[j * n..(j + 1) * n] };
                self.gap(a, b) - self.link
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Domain for LinkedPath {
    fn contains(&self, path: &[f64]) -> bool {
        path.iter().all(|x| *x >= 0.0) && self.max_excess(path) <= 1e-12 * (1.0 + self.link)
    }

    /// Cyclic projections: clamp to the cone, then pull each overlong link
    /// together (an end node does not move).
    fn project(&self, path: &[f64]) -> Vec<f64> {
        let n = self.psi.len();
        let k = path.len() / n;
        let mut x: Vec<f64> = path.iter().map(|v| v.max(0.0)).collect();
        for _ in 0..2000 {
            if self.contains(&x) {
                break;
            }
            for j in 0..=k {
                let a: Vec<f64> = if j == 0 { vec![0.0; n] } else { x[(j - 1) * n..j * n].to_vec() };
                let b: Vec<f64> = if j == k { self.psi.clone() } else { x[j * n..(j + 1) * n].to_vec() };
                let g = self.gap(&a, &b);
                if g <= self.link {
                    continue;
                }
                let (wa, wb) = match (j == 0, j == k) {
                    (true, true) => continue,
                    (true, false) => (0.0, 1.0),
                    (false, true) => (1.0, 0.0),
                    _ => (0.5, 0.5),
                };
                // slightly past the boundary so the sweep settles
                let c = (g - self.link * (1.0 - 1e-13)) / g;
                for i in 0..n {
                    let d = b[i] - a[i];
                    if j > 0 {
                        x[(j - 1) * n + i] = a[i] + wa * c * d;
                    }
                    if j < k {
                        x[j * n + i] = b[i] - wb * c * d;
                    }
                }
            }
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
        }
        x
    }

    fn describe(&self) -> String {
        format!("nonnegative paths with L2 links at most {:.3e}", self.link)
    }
}

/// Symmetric almost critical point at the minimax level over paths from 0 to
/// psi, with ||u - u*||_V, ||df(u)|| and f(u) - c all at most epsilon.
pub fn path_minimax(problem: &PathProblem, setup: &Setup) -> Result<Certificate> {
    let eps = problem.epsilon;
    if !(eps > 0.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, inf)".into() });
    }
    let space = &setup.space;
    let n = space.n_cells();
    if problem.psi.len() != n {
        return Err(SymError::InvalidFunction(format!("psi has {} values, grid has {n} cells", problem.psi.len())));
    }
    if !space.is_nonnegative(&problem.psi) || !is_family_fixed(space, &problem.psi) {
        return Err(SymError::NotSymmetricInput("psi must be fixed by every registered polarizer".into()));
    }
    let m = problem.segments;
    if m < 2 {
        return Err(SymError::NoMountainPass(format!("{m} segment(s) leave no interior node")));
    }
    super::symmetric::check_class(problem.f.as_ref(), setup)?;
    let fhat = PathMax::new(problem.f.clone(), problem.psi.clone());
    let psi_l2 = space.norm(NormKind::L(2.0), &problem.psi);
    if !(psi_l2 > 0.0) {
        return Err(SymError::NoMountainPass("psi = 0".into()));
    }
    let link = 1.5 * psi_l2 / m as f64;
    let kind = setup.metric.spec().kind;
    let metric: Arc<dyn Metric> = Arc::new(PathMetric::new(space, kind, m - 1));
    let domain = Arc::new(LinkedPath::new(space, problem.psi.clone(), link));
    let ps = Setup::new(space, metric.clone())
        .with_domain(domain)
        .with_samples(setup.samples)
        .with_seed(setup.seed);

    let start = fhat.straight(m);
    let f0 = fhat.eval(&start);
    let margin0 = f0 - fhat.ends();
    if !(margin0 > 1e-12 * (1.0 + f0.abs())) {
        return Err(SymError::NoMountainPass(format!(
            "max over the straight path exceeds the end level by {margin0:.3e}"
        )));
    }
    // nodewise iterated polarization
    let mut specs = Vec::new();
    let mut ut = Vec::with_capacity(start.len());
    for node in start.chunks(n) {
        let a = approximate(space, node, eps)?;
        if specs.is_empty() {
            specs = a.specs(space);
        }
        ut.extend(a.values);
    }
    let chain = ekeland_chain(&fhat, &ps, &ut, eps, &ChainOptions::default())?;
    let path = chain.v.clone();
    let (k, fu) = fhat.argmax(&path).expect("at least one interior node");
    let margin = fu - fhat.ends();
    if !(margin > 1e-12 * (1.0 + fu.abs())) {
        return Err(SymError::NoMountainPass(format!("the chain pushed the path below the end level ({margin:.3e})")));
    }
    let u = path[k * n..(k + 1) * n].to_vec();
    let f = problem.f.as_ref();
    let df = f.gradient(&u).unwrap_or_else(|| fd_gradient(&|z: &[f64]| f.eval(z), &u));

    let mut cert = ps.blank(Variant::PathMinimax, path, eps, eps, 1.0, Inequality::Ekeland { sigma: eps, strict: false });
    cert.node = Some(u.clone());
    cert.iterations = chain.iterations;
    cert.t_rho_sequence = specs;
    cert.measure("(a) symmetry: ||u - u*||_V", symmetry_residual_values(space, &u), eps);
    cert.measure("(b) slope: ||df(u)||", setup.metric.dual(&df).0, eps);
    match problem.c_reference {
        Some(c) => {
            cert.measure("(c) level: c - f(u)", c - fu, 0.0);
            cert.measure("(c) level: f(u) - c", fu - c, eps);
        }
        None => cert.report("(c) level estimate f(u)", fu),
    }
    cert.report("node index", (k + 1) as f64);
    cert.report("geometry margin: f_hat - max(f(0), f(psi))", margin);
    cert.report("link length", link);
    cert.notes.push(format!("{} segments, {} interior nodes", m, m - 1));
    ps.finish(&fhat, &mut cert);
    Ok(cert)
}
