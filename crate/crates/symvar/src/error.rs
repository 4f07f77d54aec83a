use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SymError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid grid function: {0}")]
    InvalidFunction(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("polarizer is not registered for this grid space")]
    SpaceMismatch,
    #[error("no convergence after {iterations} iterations (residual {residual:.6e}): {context}")]
    ConvergenceFailure {
        context: String,
        iterations: usize,
        residual: f64,
        best: Option<Vec<f64>>,
    },
    #[error("functional is +inf at the requested point")]
    OutsideDomain,
    #[error("start point fails the energy precondition: f(u0) = {f_u0:.6e} > {required:.6e}")]
    BadStart { f_u0: f64, required: f64 },
    #[error("symmetry violation: f(u^H) - f(u) = {excess:.6e} for polarizer #{polarizer}")]
    SymmetryViolation {
        excess: f64,
        polarizer: usize,
        witness: Vec<f64>,
    },
    #[error("weight integral does not reach {rho} before the search cap {cap}")]
    DivergenceAssumptionViolated { rho: f64, cap: f64 },
    #[error("saturated constraint gradients are rank deficient (relative eigenvalue {relative_eigenvalue:.3e})")]
    ConstraintDegeneracy { relative_eigenvalue: f64 },
    #[error("no mountain-pass geometry: {0}")]
    NoMountainPass(String),
    #[error("integrand error: {0}")]
    IntegrandError(String),
    #[error("energy is not bounded below (probe reached {value:.6e})")]
    NotBoundedBelow { value: f64 },
    #[error("epsilon {epsilon} outside the admissible range {range}")]
    InvalidEpsilon { epsilon: f64, range: String },
    #[error("assumption violated: {what}")]
    AssumptionViolated {
        what: String,
        witness: Option<Vec<f64>>,
    },
    #[error("separation violated: {0}")]
    SeparationViolated(String),
    #[error("input is not fixed by the polarizer family: {0}")]
    NotSymmetricInput(String),
    #[error("unknown {kind} `{name}`; known: {known}")]
    UnknownName {
        kind: String,
        name: String,
        known: String,
    },
}

pub type Result<T> = std::result::Result<T, SymError>;
