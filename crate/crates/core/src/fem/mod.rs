//! Taylor-Hood P2/P1 spaces, discrete functions and form assembly.

pub mod assembly;
pub mod function;
pub mod space;

pub use assembly::{
    apply_trilinear, assemble_a_alpha, assemble_convection, assemble_div, assemble_mass,
    assemble_pressure_mass, assemble_stiffness, ConvectionMode,
};
pub use function::FeFunction;
pub use space::{CellEval, MixedSpace};
