//! Experiments built on the principles: quasilinear and semilinear energies,
//! symmetric fixed points, drops and petals.

pub mod drops;
pub mod fixed_point;
pub mod quasilinear;
pub mod semilinear;

pub use drops::{
    drop_membership, petal_inclusions, petal_membership, symmetric_drop_point, symmetric_petal_point, Drop, DropProblem,
    InclusionReport, Petal, PetalProblem,
};
pub use fixed_point::{caristi_fixed_point, clarke_fixed_point, Affine, FixedPoint, Identity, SelfMap, SelfMapRef};
pub use quasilinear::{
    quasilinear_energy, quasilinear_experiment, quasilinear_residual, Dirichlet, Integrand, IntegrandRef, PDirichlet,
    QuasilinearEnergy, QuasilinearProblem, SaturatedWeight,
};
pub use semilinear::{semilinear_experiment, Cubic, LinearG, Nonlinearity, NonlinearityRef, SemilinearEnergy, SemilinearReport, Zero};
