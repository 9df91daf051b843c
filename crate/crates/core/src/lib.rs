//! Geometric multigrid for the Poisson equation with sparse approximate
//! inverse (SAI) smoothers, plus local Fourier analysis tools for choosing
//! and checking them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod lfa;
pub mod multigrid;
pub mod problems;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::Grid;
pub use multigrid::{solve, CycleType, MgConfig, Multigrid, SmootherChoice, SolveReport};
pub use problems::{assemble_rhs, error_inf, example, Problem};
pub use stencil::{laplacian, named, tee, upsilon, Frequency, NamedSmoother, SmootherId, Stencil};
