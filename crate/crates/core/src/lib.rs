//! Numerical laboratory for drift-diffusion scale-spaces.
//!
//! Three views of the same smoothing idea live here: the stochastic forward
//! noising chain on images ([`probdiff`]), its Fokker-Planck density
//! evolution ([`fokker_planck`]), and the deterministic osmosis filter that
//! steers an image toward a prescribed steady state ([`osmosis`]). The
//! shared scaffolding (images, permutations, reproducible random streams,
//! sparse solves) sits in the small support modules.

pub mod error;
pub mod fokker_planck;
pub mod image;
pub mod linalg;
pub mod osmosis;
pub mod perm;
pub mod probdiff;
pub mod rng;

pub use error::{Error, Result};
pub use image::{mean_value, ImageBuffer};
pub use linalg::{bicgstab, matvec, SolveReport, SolveStatus, SparseMatrixCSR};
pub use perm::{apply_permutation, Permutation};
pub use rng::{sample_standard_normal, NoiseSource, PermutedNoise, RngStream};
