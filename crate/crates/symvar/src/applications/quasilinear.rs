//! Energies f(u) = sum over edges of L(u, |Du|) - c sum u, and the symmetric
//! almost-critical point experiment on them.
//!
//! Each edge contributes m/2 [L(u_a, t) + L(u_b, t)] with t the absolute
//! difference quotient and u = 0 on ghost cells, so L is sampled at cell
//! values and at forward differences.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::grid::{dot, theta, GridSpace, NormKind};
use crate::principles::engine::{inf_estimate, level_point, Setup};
use crate::principles::{symmetric_ekeland, Certificate, EkelandVariant};
use crate::rearrange::symmetry_residual_values;
use crate::sampling::{derive_seed, rng, uniform_vec};

/// Integrand L(s, t), t = |xi| >= 0, with its partial derivatives and the
/// growth envelopes
/// |L| <= alpha(|s|) t^p + b t^p + a,
/// |L_s| <= beta(|s|) t^p,
/// |L_xi| <= gamma(|s|) t^(p-1) + b t^(p-1) + a.
pub trait Integrand: Send + Sync {
    fn name(&self) -> String;
    fn l(&self, s: f64, t: f64) -> f64;
    fn l_s(&self, s: f64, t: f64) -> f64;
    fn l_xi(&self, s: f64, t: f64) -> f64;
    fn p(&self) -> f64;
    /// (a, b)
    fn constants(&self) -> (f64, f64);
    fn alpha(&self, _s: f64) -> f64 {
        0.0
    }
    fn beta(&self, _s: f64) -> f64 {
        0.0
    }
    fn gamma(&self, _s: f64) -> f64 {
        0.0
    }
}

pub type IntegrandRef = Arc<dyn Integrand>;

/// t^2 / 2
pub struct Dirichlet;

impl Integrand for Dirichlet {
    fn name(&self) -> String {
        "dirichlet".into()
    }
    fn l(&self, _s: f64, t: f64) -> f64 {
        0.5 * t * t
    }
    fn l_s(&self, _s: f64, _t: f64) -> f64 {
        0.0
    }
    fn l_xi(&self, _s: f64, t: f64) -> f64 {
        t
    }
    fn p(&self) -> f64 {
        2.0
    }
    fn constants(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// t^p / p
pub struct PDirichlet {
    pub p: f64,
}

impl Integrand for PDirichlet {
    fn name(&self) -> String {
        format!("p-dirichlet(p={})", self.p)
    }
    fn l(&self, _s: f64, t: f64) -> f64 {
        t.powf(self.p) / self.p
    }
    fn l_s(&self, _s: f64, _t: f64) -> f64 {
        0.0
    }
    fn l_xi(&self, _s: f64, t: f64) -> f64 {
        t.powf(self.p - 1.0)
    }
    fn p(&self) -> f64 {
        self.p
    }
    fn constants(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// (1 + k s^2 / (1 + s^2)) t^2 / 2: a bounded, even coefficient in s.
pub struct SaturatedWeight {
    pub k: f64,
}

impl SaturatedWeight {
    fn weight(&self, s: f64) -> f64 {
        1.0 + self.k * s * s / (1.0 + s * s)
    }
}

impl Integrand for SaturatedWeight {
    fn name(&self) -> String {
        format!("saturated-weight(k={})", self.k)
    }
    fn l(&self, s: f64, t: f64) -> f64 {
        0.5 * self.weight(s) * t * t
    }
    fn l_s(&self, s: f64, t: f64) -> f64 {
        let d = 1.0 + s * s;
        self.k * s / (d * d) * t * t
    }
    fn l_xi(&self, s: f64, t: f64) -> f64 {
        self.weight(s) * t
    }
    fn p(&self) -> f64 {
        2.0
    }
    fn constants(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn alpha(&self, _s: f64) -> f64 {
        0.5 * self.k.abs()
    }
    fn beta(&self, s: f64) -> f64 {
        let d = 1.0 + s * s;
        self.k.abs() * s.abs() / (d * d)
    }
    fn gamma(&self, _s: f64) -> f64 {
        self.k.abs()
    }
}

/// Samples L >= 0, L(-s, t) <= L(s, t) for s <= 0, and the growth envelopes
/// on (s, t) in [-4, 4] x [0, 4].
pub fn check_integrand(integrand: &dyn Integrand, n_samples: usize, seed: u64) -> Result<()> {
    let p = integrand.p();
    if !(p > 1.0) {
        return Err(SymError::InvalidExponent(format!("integrand exponent {p} must exceed 1")));
    }
    let (a, b) = integrand.constants();
    let mut r = rng(derive_seed(seed, 0x1A7E));
    let tol = |x: f64| 1e-12 * (1.0 + x.abs());
    for _ in 0..n_samples {
        let st = uniform_vec(&mut r, 2, 0.0, 1.0);
        let (s, t) = (8.0 * st[0] - 4.0, 4.0 * st[1]);
        let (l, ls, lx) = (integrand.l(s, t), integrand.l_s(s, t), integrand.l_xi(s, t));
        if !(l.is_finite() && ls.is_finite() && lx.is_finite()) {
            return Err(SymError::IntegrandError(format!("non-finite value at s = {s}, t = {t}")));
        }
        let fail = |what: &str| SymError::AssumptionViolated { what: format!("{what} at s = {s}, t = {t}"), witness: Some(vec![s, t]) };
        if l < -tol(l) {
            return Err(fail("L < 0"));
        }
        if s <= 0.0 && integrand.l(-s, t) > l + tol(l) {
            return Err(fail("L(-s, t) > L(s, t)"));
        }
        let tp = t.powf(p);
        let tp1 = t.powf(p - 1.0);
        if l.abs() > (integrand.alpha(s.abs()) + b) * tp + a + tol(l) {
            return Err(fail("|L| above its envelope"));
        }
        if ls.abs() > integrand.beta(s.abs()) * tp + tol(ls) {
            return Err(fail("|L_s| above its envelope"));
        }
        if lx.abs() > (integrand.gamma(s.abs()) + b) * tp1 + a + tol(lx) {
            return Err(fail("|L_xi| above its envelope"));
        }
    }
    Ok(())
}

/// The discrete energy with a constant linear forcing c: f = E_L(u) - c m sum u.
pub struct QuasilinearEnergy {
    space: Arc<GridSpace>,
    integrand: IntegrandRef,
    forcing: f64,
}

impl QuasilinearEnergy {
    pub fn new(space: &Arc<GridSpace>, integrand: IntegrandRef, forcing: f64) -> Self {
        QuasilinearEnergy { space: space.clone(), integrand, forcing }
    }

    fn value(&self, u: &[f64]) -> f64 {
        let sp = &self.space;
        let l = self.integrand.as_ref();
        let mut e = 0.0;
        for edge in sp.edges() {
            let sa = edge.from.map_or(0.0, |i| u[i]);
            let sb = edge.to.map_or(0.0, |i| u[i]);
            let t = sp.diff(edge, u).abs();
            e += 0.5 * (l.l(sa, t) + l.l(sb, t));
        }
        let m = sp.cell_measure();
        m * e - self.forcing * m * u.iter().sum::<f64>()
    }

    fn grad(&self, u: &[f64]) -> Vec<f64> {
        let sp = &self.space;
        let l = self.integrand.as_ref();
        let (m, h) = (sp.cell_measure(), sp.spacing());
        let mut g = vec![-self.forcing * m; u.len()];
        for edge in sp.edges() {
            let sa = edge.from.map_or(0.0, |i| u[i]);
            let sb = edge.to.map_or(0.0, |i| u[i]);
            let d = sp.diff(edge, u);
            let t = d.abs();
            // d t / d u_b = sign(d) / h; L_xi(s, 0) = 0 for p > 1
            let flux = 0.5 * m * (l.l_xi(sa, t) + l.l_xi(sb, t)) * d.signum() / h;
            if let Some(a) = edge.from {
                g[a] += 0.5 * m * l.l_s(sa, t) - flux;
            }
            if let Some(b) = edge.to {
                g[b] += 0.5 * m * l.l_s(sb, t) + flux;
            }
        }
        g
    }
}

impl Functional for QuasilinearEnergy {
    fn name(&self) -> String {
        if self.forcing == 0.0 {
            format!("quasilinear energy ({})", self.integrand.name())
        } else {
            format!("quasilinear energy ({}) with forcing {}", self.integrand.name(), self.forcing)
        }
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let v = self.value(u);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        Some(self.grad(u))
    }

    fn lower_bound(&self) -> Option<f64> {
        (self.forcing == 0.0).then_some(0.0)
    }
}

/// Energy value; a non-finite integrand evaluation is an error.
pub fn quasilinear_energy(space: &Arc<GridSpace>, integrand: IntegrandRef, u: &[f64]) -> Result<f64> {
    let e = QuasilinearEnergy::new(space, integrand, 0.0).value(u);
    if e.is_finite() {
        Ok(e)
    } else {
        Err(SymError::IntegrandError(format!("energy evaluates to {e}")))
    }
}

/// The pairing sum L_xi(u, |Du|) Dv + sum L_s(u, |Du|) v (plus the forcing),
/// i.e. the directional derivative of the energy along v. Every grid function
/// is bounded, so every v is an admissible test direction.
pub fn quasilinear_residual(space: &Arc<GridSpace>, integrand: IntegrandRef, forcing: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    let g = QuasilinearEnergy::new(space, integrand, forcing).grad(u);
    let r = dot(&g, v);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(SymError::IntegrandError(format!("residual evaluates to {r}")))
    }
}

/// H^-1 norm of a linear form by a Cholesky solve with the Dirichlet matrix.
pub fn h_minus_one_solve(space: &GridSpace, g: &[f64]) -> f64 {
    dot(g, &space.solve_laplacian(g)).max(0.0).sqrt()
}

/// The same norm from the eigen-decomposition of the Dirichlet matrix.
pub fn h_minus_one_spectral(space: &GridSpace, g: &[f64]) -> f64 {
    let eig = space.gram_laplacian().clone().symmetric_eigen();
    let gv = DVector::from_column_slice(g);
    let mut s = 0.0;
    for k in 0..eig.eigenvalues.len() {
        let c = eig.eigenvectors.column(k).dot(&gv);
        s += c * c / eig.eigenvalues[k];
    }
    s.max(0.0).sqrt()
}

#[derive(Clone)]
pub struct QuasilinearProblem {
    pub integrand: IntegrandRef,
    pub forcing: f64,
}

/// Symmetric Ekeland point (variant II, sigma = rho = eps) of the energy with
/// the residual form w = df(u) measured in X' and, for p = 2, in H^-1.
pub fn quasilinear_experiment(problem: &QuasilinearProblem, setup: &Setup, eps: f64) -> Result<Certificate> {
    if !(eps > 0.0) {
        return Err(SymError::InvalidEpsilon { epsilon: eps, range: "(0, inf)".into() });
    }
    if problem.forcing < 0.0 {
        return Err(SymError::InvalidArgument("forcing must be nonnegative so that Theta does not raise the energy".into()));
    }
    let integrand = problem.integrand.as_ref();
    check_integrand(integrand, 4096, setup.seed)?;
    let space = &setup.space;
    let f = QuasilinearEnergy::new(space, problem.integrand.clone(), problem.forcing);
    let zero = vec![0.0; space.n_cells()];
    let inf = inf_estimate(&f, setup, &zero);
    if !inf.value.is_finite() || inf.value < -1e12 {
        return Err(SymError::NotBoundedBelow { value: inf.value });
    }
    // a start within eps^2 / 2 of the infimum, in S
    let base = theta(&inf.argmin);
    let target = inf.value.min(f.eval(&base)) + 0.5 * eps * eps;
    let u0 = level_point(&f, &base, &zero, target);
    let anchored = setup.clone().with_anchors([setup.anchors.clone(), vec![inf.argmin.clone(), base]].concat());
    let mut cert = symmetric_ekeland(&f, &anchored, &u0, eps, eps, EkelandVariant::II)?;

    let v = cert.v.clone();
    let w = f.grad(&v);
    if w.iter().any(|x| !x.is_finite()) {
        return Err(SymError::IntegrandError("non-finite residual form".into()));
    }
    let x_dual = space.dual_norm(NormKind::X, &w).0;
    cert.measure("(i) dual-norm residual: ||w||_X'", x_dual, eps);
    if integrand.p() == 2.0 {
        let a = h_minus_one_solve(space, &w);
        let b = h_minus_one_spectral(space, &w);
        cert.report("(i) residual ||w||_H^-1 (solve)", a);
        cert.report("(i) residual ||w||_H^-1 (spectral)", b);
        cert.measure("consistency: |H^-1 solve - H^-1 spectral|", (a - b).abs(), 1e-8);
    }
    cert.measure("(ii) symmetry: ||u - u*||_V", symmetry_residual_values(space, &v), eps);
    cert.report("energy f(u)", f.eval(&v));
    cert.notes.push(format!("integrand {}; forcing {}", integrand.name(), problem.forcing));
    cert.notes.push("test directions: all grid functions (V_u = X on a grid)".into());
    cert.seal();
    Ok(cert)
}
