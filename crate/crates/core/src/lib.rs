//! Low-rank solvers for the 2D Poisson and Stokes problems on uniform grids.
//!
//! Fields are `U·Vᵀ` factorizations ([`LowRankMatrix`]). Poisson solves divide
//! by the Laplacian spectrum in DST frequency space through a cross
//! approximation; Stokes is solved by Uzawa on the pressure Schur complement
//! with a relaxed inexact GMRES.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross;
pub mod error;
pub mod experiments;
pub mod lowrank;
pub mod operators;
pub mod poisson;
pub mod refsolver;
pub mod stokes;

pub use error::{Error, Result};
pub use lowrank::{LowRankMatrix, Truncation, TruncationPolicy};
pub use operators::{Component, Grid2D, Operators};
pub use stokes::{uzawa_solve, GmresConfig, SolveReport, StokesProblem};
