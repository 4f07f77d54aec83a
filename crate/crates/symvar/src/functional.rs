//! Functionals f: X -> R u {+inf} as evaluation oracles.
//!
//! Gradients are Euclidean (partial derivatives in the cell values); the
//! Riesz representative in X is `space.solve_gram_x(grad)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymError};
use crate::grid::{dot, GridSpace, NormKind};
use crate::rearrange::{is_family_fixed, schwarz_values};
use crate::sampling::{derive_seed, rng, uniform_vec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    PolarizationNonincreasing,
    PolarizationInvariant,
    Unverified,
}

pub trait Functional: Send + Sync {
    fn name(&self) -> String;

    /// Value at u; `f64::INFINITY` outside the effective domain, never -inf.
    fn eval(&self, u: &[f64]) -> f64;

    fn gradient(&self, _u: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn hessian(&self, _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn symmetry_class(&self) -> SymmetryClass {
        SymmetryClass::Unverified
    }

    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Coordinate box outside which the functional is +inf.
    fn bounds(&self) -> Option<(f64, f64)> {
        None
    }
}

impl fmt::Debug for dyn Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional({})", self.name())
    }
}

pub type FunctionalRef = Arc<dyn Functional>;

/// Scalar profile phi applied to a norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// coef * r^exponent
    Power { coef: f64, exponent: f64 },
    /// (r^2 - 1)^2
    DoubleWell,
    /// r^2 (r - 1)^2
    MountainPass,
    /// r^2/2 - r^4/4
    SoftQuartic,
}

impl Profile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::Power { coef, exponent } => coef * r.powf(exponent),
            Profile::DoubleWell => (r * r - 1.0).powi(2),
            Profile::MountainPass => r * r * (r - 1.0).powi(2),
            Profile::SoftQuartic => 0.5 * r * r - 0.25 * r.powi(4),
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        match *self {
            Profile::Power { coef, exponent } => {
                if r == 0.0 {
                    0.0
                } else {
                    coef * exponent * r.powf(exponent - 1.0)
                }
            }
            Profile::DoubleWell => 4.0 * r * (r * r - 1.0),
            Profile::MountainPass => 2.0 * r * (r - 1.0) * (2.0 * r - 1.0),
            Profile::SoftQuartic => r - r.powi(3),
        }
    }

    pub fn d2(&self, r: f64) -> f64 {
        match *self {
            Profile::Power { coef, exponent } => {
                if exponent == 2.0 {
                    2.0 * coef
                } else if r == 0.0 {
                    0.0
                } else {
                    coef * exponent * (exponent - 1.0) * r.powf(exponent - 2.0)
                }
            }
            Profile::DoubleWell => 12.0 * r * r - 4.0,
            Profile::MountainPass => 12.0 * r * r - 12.0 * r + 2.0,
            Profile::SoftQuartic => 1.0 - 3.0 * r * r,
        }
    }

    /// phi'(r)/r as r -> 0 stays finite for the smooth profiles.
    fn d1_over_r(&self, r: f64) -> f64 {
        if r > 0.0 {
            return self.d1(r) / r;
        }
        match *self {
            Profile::Power { coef, exponent } if exponent == 2.0 => 2.0 * coef,
            Profile::Power { .. } => 0.0,
            Profile::DoubleWell => -4.0,
            Profile::MountainPass => 2.0,
            Profile::SoftQuartic => 1.0,
        }
    }

    fn nondecreasing(&self) -> bool {
        matches!(*self, Profile::Power { coef, exponent } if coef >= 0.0 && exponent > 0.0)
    }

    fn min_value(&self) -> Option<f64> {
        match *self {
            Profile::Power { coef, .. } if coef >= 0.0 => Some(0.0),
            Profile::Power { .. } | Profile::SoftQuartic => None,
            Profile::DoubleWell | Profile::MountainPass => Some(0.0),
        }
    }

    fn smooth_at_zero(&self) -> bool {
        match *self {
            Profile::Power { exponent, .. } => exponent >= 2.0 || exponent == 0.0,
            _ => true,
        }
    }
}

/// phi(||u - center||_kind).
pub struct NormProfile {
    space: Arc<GridSpace>,
    kind: NormKind,
    center: Vec<f64>,
    profile: Profile,
    label: String,
}

impl NormProfile {
    pub fn new(space: &Arc<GridSpace>, kind: NormKind, center: Option<Vec<f64>>, profile: Profile) -> Result<Self> {
        let center = center.unwrap_or_else(|| vec![0.0; space.n_cells()]);
        if center.len() != space.n_cells() {
            return Err(SymError::InvalidFunction(format!(
                "center has {} values for {} cells",
                center.len(),
                space.n_cells()
            )));
        }
        let label = format!("{profile:?}(||u - a||_{kind})");
        Ok(NormProfile { space: space.clone(), kind, center, profile, label })
    }

    /// ||u - a||^2 in the given norm.
    pub fn squared_distance(space: &Arc<GridSpace>, kind: NormKind, center: Vec<f64>) -> Result<Self> {
        Self::new(space, kind, Some(center), Profile::Power { coef: 1.0, exponent: 2.0 })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Gram matrix G with ||d||^2 = d^T G d, for the Hilbert kinds.
    fn quadratic_form(&self) -> Option<DMatrix<f64>> {
        match self.kind {
            NormKind::X if self.space.p() == 2.0 => Some(self.space.gram_x().clone()),
            NormKind::L(r) if r == 2.0 => {
                let n = self.space.n_cells();
                Some(DMatrix::identity(n, n) * self.space.cell_measure())
            }
            _ => None,
        }
    }

    fn offset(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.center).map(|(a, b)| a - b).collect()
    }
}

impl Functional for NormProfile {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.profile.value(self.space.norm(self.kind, &self.offset(u)))
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let d = self.offset(u);
        let r = self.space.norm(self.kind, &d);
        if r == 0.0 {
            return self.profile.smooth_at_zero().then(|| vec![0.0; d.len()]);
        }
        let g = self.space.norm_grad(self.kind, &d)?;
        let c = self.profile.d1(r);
        Some(g.into_iter().map(|x| c * x).collect())
    }

    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        let gm = self.quadratic_form()?;
        let d = nalgebra::DVector::from_vec(self.offset(u));
        let gd = &gm * &d;
        let r = d.dot(&gd).max(0.0).sqrt();
        if r == 0.0 {
            return self.profile.smooth_at_zero().then(|| gm * self.profile.d1_over_r(0.0));
        }
        // phi'' grad r grad r^T + phi' (G/r - G d d^T G / r^3)
        let a = self.profile.d2(r) / (r * r) - self.profile.d1(r) / (r * r * r);
        Some(&gm * self.profile.d1_over_r(r) + (&gd * gd.transpose()) * a)
    }

    fn symmetry_class(&self) -> SymmetryClass {
        let lebesgue = !matches!(self.kind, NormKind::X);
        let centered = self.center.iter().all(|&x| x == 0.0);
        if lebesgue && centered {
            // equimeasurable rearrangements keep every L^r norm
            SymmetryClass::PolarizationInvariant
        } else if lebesgue && self.profile.nondecreasing() && is_family_fixed(&self.space, &self.center) {
            SymmetryClass::PolarizationNonincreasing
        } else {
            SymmetryClass::Unverified
        }
    }

    fn lower_bound(&self) -> Option<f64> {
        self.profile.min_value()
    }
}

/// w -> c.w (Euclidean pairing).
pub struct Linear {
    c: Vec<f64>,
}

impl Linear {
    pub fn new(c: Vec<f64>) -> Self {
        Linear { c }
    }

    /// w -> sum_i rho_i w_i m, the discrete integral against a density.
    pub fn from_density(space: &GridSpace, density: &[f64]) -> Self {
        let m = space.cell_measure();
        Linear { c: density.iter().map(|x| x * m).collect() }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }
}

impl Functional for Linear {
    fn name(&self) -> String {
        "linear".into()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        dot(&self.c, u)
    }

    fn gradient(&self, _u: &[f64]) -> Option<Vec<f64>> {
        Some(self.c.clone())
    }

    fn hessian(&self, _u: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.c.len();
        Some(DMatrix::zeros(n, n))
    }
}

pub struct Sum {
    parts: Vec<FunctionalRef>,
}

impl Sum {
    pub fn new(parts: Vec<FunctionalRef>) -> Self {
        Sum { parts }
    }
}

impl Functional for Sum {
    fn name(&self) -> String {
        self.parts.iter().map(|p| p.name()).collect::<Vec<_>>().join(" + ")
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.eval(u)).sum()
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; u.len()];
        for p in &self.parts {
            for (a, g) in acc.iter_mut().zip(p.gradient(u)?) {
                *a += g;
            }
        }
        Some(acc)
    }

    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        let mut acc = DMatrix::zeros(u.len(), u.len());
        for p in &self.parts {
            acc += p.hessian(u)?;
        }
        Some(acc)
    }

    fn symmetry_class(&self) -> SymmetryClass {
        use SymmetryClass::*;
        self.parts.iter().fold(PolarizationInvariant, |acc, p| match (acc, p.symmetry_class()) {
            (Unverified, _) | (_, Unverified) => Unverified,
            (PolarizationInvariant, PolarizationInvariant) => PolarizationInvariant,
            _ => PolarizationNonincreasing,
        })
    }

    fn lower_bound(&self) -> Option<f64> {
        self.parts.iter().map(|p| p.lower_bound()).sum()
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        self.parts.iter().filter_map(|p| p.bounds()).reduce(|a, b| (a.0.max(b.0), a.1.min(b.1)))
    }
}

/// f restricted to the coordinate box [lo, hi]^n (+inf outside).
pub struct Boxed {
    inner: FunctionalRef,
    lo: f64,
    hi: f64,
}

impl Boxed {
    pub fn new(inner: FunctionalRef, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(SymError::InvalidArgument(format!("empty box [{lo}, {hi}]")));
        }
        Ok(Boxed { inner, lo, hi })
    }

    fn inside(&self, u: &[f64]) -> bool {
        u.iter().all(|&x| x >= self.lo && x <= self.hi)
    }
}

impl Functional for Boxed {
    fn name(&self) -> String {
        format!("{} on [{}, {}]", self.inner.name(), self.lo, self.hi)
    }

    fn eval(&self, u: &[f64]) -> f64 {
        if self.inside(u) {
            self.inner.eval(u)
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(u)
    }

    fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        self.inner.hessian(u)
    }

    fn symmetry_class(&self) -> SymmetryClass {
        // a symmetric box (lo <= 0 <= hi) is stable under polarization
        if self.lo <= 0.0 && self.hi >= 0.0 {
            self.inner.symmetry_class()
        } else {
            SymmetryClass::Unverified
        }
    }

    fn lower_bound(&self) -> Option<f64> {
        self.inner.lower_bound()
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Functional from closures.
pub struct FnFunctional {
    label: String,
    eval: Box<EvalFn>,
    grad: Option<Box<GradFn>>,
    class: SymmetryClass,
    lower: Option<f64>,
}

impl FnFunctional {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FnFunctional {
            label: label.into(),
            eval: Box::new(eval),
            grad: None,
            class: SymmetryClass::Unverified,
            lower: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    pub fn with_class(mut self, class: SymmetryClass) -> Self {
        self.class = class;
        self
    }

    pub fn with_lower_bound(mut self, lb: f64) -> Self {
        self.lower = Some(lb);
        self
    }
}

impl Functional for FnFunctional {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(u))
    }

    fn symmetry_class(&self) -> SymmetryClass {
        self.class
    }

    fn lower_bound(&self) -> Option<f64> {
        self.lower
    }
}

/// Samples f(u^H) <= f(u) + tol over random u in S and every registered H,
/// plus f(u*) <= f(u) + tol. Functionals declared nonincreasing or invariant
/// are sampled as well; the declaration is not trusted blindly.
pub fn check_symmetry(f: &dyn Functional, space: &GridSpace, n_samples: usize, seed: u64, tol: f64) -> Result<()> {
    let mut r = rng(derive_seed(seed, 0x5E11));
    let (lo, hi) = f.bounds().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let top = hi.min(2.0).max(0.0);
    for _ in 0..n_samples {
        let u = uniform_vec(&mut r, space.n_cells(), 0.0_f64.max(lo), top);
        let fu = f.eval(&u);
        if !fu.is_finite() {
            continue;
        }
        for (k, h) in space.family().iter().enumerate() {
            let w = h.apply(&u);
            let fw = f.eval(&w);
            if fw > fu + tol * (1.0 + fu.abs()) {
                return Err(SymError::SymmetryViolation { excess: fw - fu, polarizer: k, witness: u });
            }
        }
        let s = schwarz_values(space, &u);
        let fs = f.eval(&s);
        if fs > fu + tol * (1.0 + fu.abs()) {
            return Err(SymError::SymmetryViolation { excess: fs - fu, polarizer: usize::MAX, witness: u });
        }
    }
    Ok(())
}
