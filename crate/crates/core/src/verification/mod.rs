//! Manufactured solutions, error norms and refinement studies.

pub mod cases;
pub mod norms;
pub mod study;

pub use cases::{build_case, ManufacturedCase, CATALOGUE};
pub use norms::{adjoint_errors, h1_error, state_errors, ErrorNorms, NormQuadrature};
pub use study::{run_convergence, Coupling, RateTable, StudyConfig, StudyFailure, StudyKind};
