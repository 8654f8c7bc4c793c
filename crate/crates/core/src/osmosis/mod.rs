//! Drift-diffusion osmosis filtering.
//!
//! A deterministic companion to the probabilistic chain: images evolve under
//! ∂_t u = Δu − div(d·u) with reflecting boundaries, discretised in space so
//! that the evolution conserves the mean grey value exactly (zero column
//! sums), preserves positivity (M-matrix structure under the grid bound
//! |d|·h/2 ≤ 1), and converges to a steady state fixed by the drift field.
//! For the canonical drift d = 2·∇v/(v_L + v_R) built from a positive
//! guidance image v, that steady state is the rescaled guidance
//! (μ_f/μ_v)·v, and the relative entropy −h²·Σ u·ln(u/w) is a Lyapunov
//! functional along the trajectory.

mod drift;
mod evolve;
mod operator;

pub use drift::{canonical_drift, DriftField};
pub use evolve::{
    evolve, evolve_observed, implicit_step, relative_entropy, theoretical_steady_state,
    EvolveResult,
};
pub use operator::{assemble_operator, OsmosisOperator};
