//! f(u) = 1/2 |Du|^2 - sum G(u) for an odd nonlinearity g = G', run through
//! the smooth symmetric sequence engine.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::quasilinear::h_minus_one_solve;
use crate::error::{Result, SymError};
use crate::functional::{Boxed, Functional, FunctionalRef};
use crate::grid::{dot, GridSpace};
use crate::principles::engine::Setup;
use crate::principles::sqps::{monotone, sqps_sequence, SqpsStep, TOL_Q};
use crate::sampling::{derive_seed, rng, uniform_vec};
use crate::slopes::lower_derivative;

/// Odd nonlinearity with antiderivative G (G(0) = 0) and growth
/// |g(s)| <= a1 + b |s|^(p-1).
pub trait Nonlinearity: Send + Sync {
    fn name(&self) -> String;
    fn g(&self, s: f64) -> f64;
    #[allow(non_snake_case)]
    fn G(&self, s: f64) -> f64;
    /// g', when available, for exact Hessians.
    fn dg(&self, _s: f64) -> Option<f64> {
        None
    }
    /// (a1, b, p)
    fn growth(&self) -> (f64, f64, f64);
}

pub type NonlinearityRef = Arc<dyn Nonlinearity>;

pub struct Zero;

impl Nonlinearity for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn g(&self, _s: f64) -> f64 {
        0.0
    }
    fn G(&self, _s: f64) -> f64 {
        0.0
    }
    fn dg(&self, _s: f64) -> Option<f64> {
        Some(0.0)
    }
    fn growth(&self) -> (f64, f64, f64) {
        (0.0, 0.0, 4.0)
    }
}

/// g(s) = k s
pub struct LinearG {
    pub k: f64,
}

impl Nonlinearity for LinearG {
    fn name(&self) -> String {
        format!("linear(k={})", self.k)
    }
    fn g(&self, s: f64) -> f64 {
        self.k * s
    }
    fn G(&self, s: f64) -> f64 {
        0.5 * self.k * s * s
    }
    fn dg(&self, _s: f64) -> Option<f64> {
        Some(self.k)
    }
    fn growth(&self) -> (f64, f64, f64) {
        // |k s| <= |k| + |k| |s|^3 for every s
        (self.k.abs(), self.k.abs(), 4.0)
    }
}

/// g(s) = k s^3
pub struct Cubic {
    pub k: f64,
}

impl Nonlinearity for Cubic {
    fn name(&self) -> String {
        format!("cubic(k={})", self.k)
    }
    fn g(&self, s: f64) -> f64 {
        self.k * s * s * s
    }
    fn G(&self, s: f64) -> f64 {
        0.25 * self.k * s.powi(4)
    }
    fn dg(&self, s: f64) -> Option<f64> {
        Some(3.0 * self.k * s * s)
    }
    fn growth(&self) -> (f64, f64, f64) {
        (0.0, self.k.abs(), 4.0)
    }
}

/// Samples oddness (exact) and the growth bound on s in [-8, 8].
pub fn check_nonlinearity(nl: &dyn Nonlinearity, n_samples: usize, seed: u64) -> Result<()> {
    let (a1, b, p) = nl.growth();
    if !(p > 2.0 && p <= 6.0) {
        return Err(SymError::InvalidExponent(format!("growth exponent {p} outside (2, 6]")));
    }
    let mut r = rng(derive_seed(seed, 0x0DD));
    for s in uniform_vec(&mut r, n_samples, -8.0, 8.0) {
        let (gp, gm) = (nl.g(s), nl.g(-s));
        if !(gp.is_finite() && gm.is_finite()) {
            return Err(SymError::InvalidFunction(format!("g is not finite at {s}")));
        }
        if gm != -gp {
            return Err(SymError::AssumptionViolated { what: format!("g(-s) != -g(s) at s = {s}"), witness: Some(vec![s]) });
        }
        if gp.abs() > a1 + b * s.abs().powf(p - 1.0) + 1e-12 * (1.0 + gp.abs()) {
            return Err(SymError::AssumptionViolated { what: format!("|g(s)| above a1 + b|s|^(p-1) at s = {s}"), witness: Some(vec![s]) });
        }
    }
    Ok(())
}

/// 1/2 u^T L u - m sum G(u_i), L the Dirichlet matrix.
pub struct SemilinearEnergy {
    space: Arc<GridSpace>,
    nl: NonlinearityRef,
}

impl SemilinearEnergy {
    pub fn new(space: &Arc<GridSpace>, nl: NonlinearityRef) -> Self {
        SemilinearEnergy { space: space.clone(), nl }
    }
}

impl Functional for SemilinearEnergy {
    fn name(&self) -> String {
        format!("semilinear energy ({})", self.nl.name())
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let m = self.space.cell_measure();
        let v = 0.5 * self.space.gradient_part(u, 2.0) - m * u.iter().map(|&s| self.nl.G(s)).sum::<f64>();
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let m = self.space.cell_measure();
        let lu = self.space.gram_laplacian() * DVector::from_column_slice(u);
        Some(u.iter().zip(lu.iter()).map(|(&s, &l)| l - m * self.nl.g(s)).collect())
    }

    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        let m = self.space.cell_measure();
        let mut h = self.space.gram_laplacian().clone();
        for (i, &s) in u.iter().enumerate() {
            h[(i, i)] -= m * self.nl.dg(s)?;
        }
        Some(h)
    }
}

/// sqrt of the smallest eigenvalue of the Dirichlet matrix per unit cell
/// measure: on [-M, M]^n with this M a cubic with k = 1 stays convex enough
/// that 0 is the unique minimizer.
pub fn default_box(space: &GridSpace) -> f64 {
    let eig = space.gram_laplacian().clone().symmetric_eigen().eigenvalues;
    let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (lmin / space.cell_measure()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemilinearReport {
    pub steps: Vec<SqpsStep>,
    /// H^-1 norm of the Euler-Lagrange residual per step.
    pub h_minus_one: Vec<f64>,
    /// min over ||w||_X = 1 of w^T L w - m sum D g(u_i) w_i^2 per step.
    pub second_order: Vec<f64>,
    pub symmetry_monotone: bool,
    pub slope_monotone: bool,
    pub box_half_width: Option<f64>,
}

impl SemilinearReport {
    pub fn passed(&self) -> bool {
        self.symmetry_monotone && self.slope_monotone && self.steps.iter().all(|s| s.certificate.passed())
    }
}

/// Smallest generalized eigenvalue of (A, B), B positive definite.
fn min_generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let l = b.clone().cholesky().expect("positive definite").l();
    let li = l.clone().try_inverse().expect("invertible factor");
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Probes f along t * 1 (t = 2^k) and -t * 1 inside the box; a value below
/// -1e10 means the energy is unbounded below.
fn probe_unbounded(f: &dyn Functional, n: usize) -> Result<()> {
    for k in 0..=40 {
        let t = 2f64.powi(k);
        for sign in [1.0, -1.0] {
            let v = f.eval(&vec![sign * t; n]);
            if v < -1e10 {
                return Err(SymError::NotBoundedBelow { value: v });
            }
        }
    }
    Ok(())
}

/// One smooth symmetric point per epsilon, each with the H^-1 norm of its
/// Euler-Lagrange residual, its symmetry residual and the exact second-order
/// bound from the lower derivative of g. `half_width` restricts f to the
/// box [-M, M]^n.
pub fn semilinear_experiment(
    nl: NonlinearityRef,
    setup: &Setup,
    u0: &[f64],
    schedule: &[f64],
    half_width: Option<f64>,
) -> Result<SemilinearReport> {
    check_nonlinearity(nl.as_ref(), 4096, setup.seed)?;
    let space = &setup.space;
    let energy: FunctionalRef = Arc::new(SemilinearEnergy::new(space, nl.clone()));
    let f: FunctionalRef = match half_width {
        Some(m) => Arc::new(Boxed::new(energy.clone(), -m, m)?),
        None => energy.clone(),
    };
    probe_unbounded(f.as_ref(), space.n_cells())?;
    let mut steps = sqps_sequence(f.as_ref(), setup, u0, schedule)?;

    let m = space.cell_measure();
    let gram = space.gram_x();
    let lap = space.gram_laplacian();
    let mut h1 = Vec::with_capacity(steps.len());
    let mut second = Vec::with_capacity(steps.len());
    for step in steps.iter_mut() {
        let v = step.certificate.v.clone();
        let psi = energy.gradient(&v).expect("closed-form gradient");
        let h = h_minus_one_solve(space, &psi);
        let g = |s: f64| nl.g(s);
        let mut q = lap.clone();
        for (i, &s) in v.iter().enumerate() {
            q[(i, i)] -= m * lower_derivative(&g, s, 1e-4, 64);
        }
        let so = min_generalized_eigen(&q, gram);
        let eps = step.epsilon;
        let cert = &mut step.certificate;
        cert.report("Euler-Lagrange residual ||psi||_H^-1", h);
        cert.report("symmetry: ||u - u*||_V", step.symmetry);
        cert.measure("second order: -min (|Dw|^2 - D g(u) w^2) over ||w||_X = 1", -so, 2.0 * eps + TOL_Q);
        if let Some(mw) = half_width {
            cert.notes.push(format!("energy restricted to the box [-{mw}, {mw}]^n"));
        }
        cert.seal();
        h1.push(h);
        second.push(so);
    }
    let (sym, slope) = monotone(&steps);
    Ok(SemilinearReport {
        steps,
        h_minus_one: h1,
        second_order: second,
        symmetry_monotone: sym,
        slope_monotone: slope,
        box_half_width: half_width,
    })
}

/// The pairing psi(u) . w of the Euler-Lagrange residual with w.
pub fn euler_lagrange_pairing(space: &Arc<GridSpace>, nl: NonlinearityRef, u: &[f64], w: &[f64]) -> f64 {
    let e = SemilinearEnergy::new(space, nl);
    dot(&e.gradient(u).expect("closed-form gradient"), w)
}
