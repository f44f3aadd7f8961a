//! Geometry of the quarter disk and the polar annulus, densities, grids and quadrature.

mod density;
mod grid;
mod preset;
mod target;

pub use density::{check_compatibility, normalize_target_per_theta, quadrature_2d, DensityPair, Region};
pub use grid::{AngularGrid, Field2, LambdaGrid, RadialGrid};
pub use preset::{
    notch_bump, notched_bv, notched_r1, PresetKind, Problem, Tables, NOTCH_DEPTH, NOTCH_END, NOTCH_START,
};
pub use target::PolarTarget;
