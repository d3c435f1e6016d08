pub mod adjoint;
pub mod cli;
pub mod control;
pub mod error;
pub mod fem;
pub mod frontal;
pub mod io;
pub mod field;
pub mod lu;
pub mod mesh;
pub mod optimize;
pub mod problem;
pub mod projections;
pub mod quadrature;
pub mod saddle;
pub mod sparse;
pub mod state;
pub mod time;
pub mod verification;

pub use error::{Error, Result};
