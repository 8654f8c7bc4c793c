//! Density evolution of the scalar noising chain.
//!
//! The chain u ← √(1−β)·u + √β·ξ has the continuum limit
//! ∂_t p = ½·∂_uu(m2·p) + ∂_u(m1·p) with m1 = β(t)·u/2 and m2 = β(t), for
//! which N(0,1) is stationary. This module houses the 1-D pieces: density
//! grids and histograms, the moment fields, an explicit conservative solver
//! (mass-conserving, positivity-preserving, second order in space), residual
//! checks showing the closed-form transition kernel solves both the forward
//! equation and its backward counterpart (where the diffusion term flips
//! sign), and a Monte-Carlo bridge comparing chain histograms with the
//! solved densities.

mod compare;
mod grid;
mod moments;
mod residual;
mod solver;

pub use compare::chain_vs_pde_compare;
pub use grid::{histogram_density, DensityGrid};
pub use moments::{moments_from_schedule, MomentFields};
pub use residual::{fp_backward_residual, fp_forward_residual, GaussianKernel, ResidualNorms};
pub use solver::fp_forward_solve;
