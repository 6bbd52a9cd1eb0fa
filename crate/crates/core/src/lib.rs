//! Hybridized Nitsche finite elements for trimmed multipatch geometries with
//! gaps and overlaps at the patch interfaces.
//!
//! Each patch carries a tensor-product B-spline space on a structured grid in
//! its reference square, restricted to the cells touched by the trimmed
//! domain. The patches never talk to each other directly: every interface
//! term couples a patch to a hybrid variable that lives on a band of
//! hexahedra cut out of a three-dimensional background grid, and that band is
//! stiffened across the interface so the hybrid field carries values over
//! the gap.
//!
//! The crate is organised bottom up:
//!
//! * [`splines`] tensor-product B-spline spaces and evaluation,
//! * [`quadrature`] Gauss rules on intervals, boxes and triangles,
//! * [`geometry`] patch maps, trims, the torus test surface, the artificial
//!   interface and its tangent projector,
//! * [`mesh`] active and cut cells, the hybrid hexahedral band, face sets,
//! * [`problem`] the two-patch model problems,
//! * [`assembly`] the bilinear form and load vector,
//! * [`solve_post`] the linear solve, error norms and rate fits,
//! * [`harness`] configuration and study drivers behind the `gapfem` CLI.

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solve_post;
pub mod splines;

pub use error::{Error, Result};
