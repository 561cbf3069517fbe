//! Exact finite-support computations for Rényi thinning, the Poisson
//! entropy power `V = E^{-1}(H)` and discrete entropy-power inequalities.

pub mod acceptance;
pub mod checks;
pub mod error;
pub mod functionals;
pub mod hessian;
pub mod numeric;
pub mod pmf;
pub mod reproduce;
pub mod search;
pub mod semigroup;
pub mod tolerance;
pub mod transforms;
pub mod verdict;

pub use checks::{Checker, EpilikeOutcome, TepisCondition};
pub use error::{Error, Result};
pub use functionals::{
    entropy, entropy_power, inverse_poisson_entropy, l_functional, lambda_functional, poisson_entropy,
    poisson_entropy_derivative, rel_entropy_poisson, u_functional, EntropyValue,
};
pub use hessian::{
    build_joint, check_quadratic_form, hessian_analytic, hessian_fd, margin_identity, phi, positive_splitting, JointTable,
    SplittingWitness,
};
pub use pmf::{construct, total_variation, FamilySpec, FinitePmf, PmfDocument, PmfInput};
pub use search::{random_ulc, search, search_with, Conjecture, SearchOptions, SearchReport, Violation};
pub use semigroup::{
    default_grid, entropy_preserving_path, evolve, isoperimetric_check, log_grid, pde_residual, PathReport,
};
pub use tolerance::{ToleranceConfig, ToleranceProfile};
pub use transforms::{convolve, convolve_all, inverse_thin, thin};
pub use verdict::{InequalityVerdict, Units};
