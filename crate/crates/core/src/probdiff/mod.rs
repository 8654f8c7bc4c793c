//! The forward noising Markov chain U_i = √(1−β_i)·U_{i−1} + √β_i·G and its
//! scale-space structure: exact Gaussian marginals, entropy Lyapunov
//! sequences, admissibility of noise schedules, permutation invariance, and
//! convergence to the N(0, I) steady state. A nonparametric k-NN entropy
//! estimator cross-checks the closed-form oracles on low-dimensional toys.

mod forward;
mod gaussian;
mod knn;
mod schedule;
mod trajectory;

pub use forward::{forward_step, jump_to_step};
pub use gaussian::{differential_entropy_gaussian, gaussian_marginal, Covariance, GaussianStats};
pub use knn::knn_entropy_estimate;
pub use schedule::{
    admissible_beta_interval, conditional_entropy, entropy_increment, ln_2pi_e, validate_schedule,
    NoiseSchedule, StepAdmissibility,
};
pub use trajectory::{run_trajectory, steady_state_diagnostics, SteadyStateReport, TrajectoryRecord};
