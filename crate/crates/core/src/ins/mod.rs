pub mod advection;
pub mod fastsolve;
pub mod step;
pub mod stokes;

pub use advection::advect;
pub use fastsolve::{AxisSpec, Basis, SeparableSolver};
pub use step::{FluidParams, Simulation, Structure, StructureModel, TimeStepState};
pub use stokes::{SaddleOptions, SaddleSolution, SaddleSolveReport, SaddleSolver};
