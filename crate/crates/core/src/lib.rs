//! Solvers for the linear Boltzmann-BGK equation written in the multiplicative
//! form `f = M g`, where `M` is the isothermal Maxwellian built from the
//! density `rho`.
//!
//! The crate provides
//!
//! - [`discretization`]: Gauss-Hermite velocity grids, periodic finite
//!   difference stencils and the hyperbolic CFL rule,
//! - [`full_solver`]: the stable conservative-form scheme and the naive
//!   advection-form scheme on the full `(x, v)` grid,
//! - [`dlra`]: a rank-adaptive basis-update & Galerkin integrator for `g` with
//!   a truncation that keeps the discrete density moment of `g` exact,
//! - [`diagnostics`]: the weighted stability norm, moment bounds, the CFL
//!   inequality evaluator and a checkable suite of the stability results.
//!
//! Both one and two spatial dimensions are handled by the same code path: the
//! phase space is always stored as a matrix with flattened spatial rows and
//! flattened velocity columns.

pub mod diagnostics;
pub mod discretization;
pub mod dlra;
mod error;
pub mod full_solver;
pub mod linalg;
pub mod par;

pub use discretization::{
    build_stencils, cfl_timestep, cfl_timestep_unchecked, gauss_hermite_rule,
    tensor_velocity_grid_2d, BoundaryVariant, PhaseSpace, SpatialGrid, Stencil, StencilSet,
    VelocityGrid,
};
pub use error::{Error, Result};
pub use full_solver::{FullState, SchemeVariant};

pub use nalgebra::{DMatrix, DVector};
