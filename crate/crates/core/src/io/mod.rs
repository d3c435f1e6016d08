//! Run configuration, expression fields and VTK field files.

pub mod config;
pub mod expr;
pub mod vtk;

pub use config::{Purpose, RunConfig};
pub use expr::{Expr, ExprField};
pub use vtk::VtkGrid;
