//! Numerical solver and verification toolkit for the one-dimensional repulsive
//! aggregation-diffusion equation
//!
//! ```text
//! u_t = ε u_xx + (u K' * u)_x,      K'(x) = -(A/2) sign(x) + V(x),
//! ```
//!
//! together with its reference profiles (rarefaction wave, viscous
//! rarefaction), the interacting-particle model it is the continuum limit of,
//! and the diagnostics used to measure long-time behaviour.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the double-precision instantiation used by the CLI.

// `!(x > 0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod particles;
pub mod quadrature;
pub mod reference;
pub mod scalar;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use kernel::{make_kernel, KernelFamily, KernelSpec};
pub use scalar::Scalar;

pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type Kernel64 = kernel::KernelSpec<f64>;
pub type Ensemble64 = particles::ParticleEnsemble<f64>;
pub type DiagnosticsRecord64 = diagnostics::DiagnosticsRecord<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type RunOutput64 = solver::RunOutput<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type Field32 = grid::Field<f32>;
pub type Kernel32 = kernel::KernelSpec<f32>;
