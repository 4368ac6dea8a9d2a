//! Hybridizable discontinuous Galerkin (HDG) solver for the Stokes equations
//! on hierarchies of uniformly refined triangular meshes.
//!
//! The velocity-pressure-gradient form of the Stokes system is discretized by
//! one of three hybrid methods (single-face hybridizable, hybrid
//! Raviart-Thomas, hybrid Brezzi-Douglas-Marini). Element unknowns are
//! statically condensed onto a trace unknown living on the mesh skeleton,
//! yielding one symmetric positive definite system per pseudo-time step of an
//! augmented-Lagrangian outer iteration. The condensed systems on all mesh
//! levels use the same discretization ("homogeneous" hierarchy) and are
//! solved by a V-cycle multigrid method with block smoothers and a linear
//! endpoint-interpolation injection between skeleton spaces.
//!
//! Entry points:
//! - [`mesh`]: the 16-triangle initial mesh of the unit square and red
//!   refinement into a [`mesh::MeshHierarchy`].
//! - [`basis`]: orthonormal polynomial bases on edges and triangles,
//!   Raviart-Thomas fields, and quadrature rules.
//! - [`local`]: element-local saddle-point solvers and static condensation.
//! - [`assembly`]: skeleton trace space, global condensed operator,
//!   right-hand sides, field reconstruction, and error norms.
//! - [`multigrid`]: injection operators, block smoothers, V-cycle, and the
//!   stationary multigrid solver.
//! - [`al`]: the augmented-Lagrangian outer iteration.
//! - [`problem`], [`harness`]: the manufactured test problem and the
//!   experiment commands behind the `stokes-mg` binary.
//!
//! The `examples/` directory contains one runnable example per capability;
//! see the README for the full list.

pub mod al;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod harness;
pub mod local;
pub mod mesh;
pub mod multigrid;
pub mod problem;
pub mod sparse;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
