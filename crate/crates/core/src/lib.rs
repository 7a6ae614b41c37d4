//! Blind sensor calibration for compressed sensing by approximate message passing.
//!
//! `P` sparse signals are measured through a known matrix `F` by sensors
//! with unknown multiplicative gains. The [`solver`] recovers signals and
//! gains jointly; [`harness`] runs seeded parameter sweeps and writes the
//! results as CSV.

pub mod channel;
pub mod error;
pub mod harness;
pub mod model;
pub mod priors;
pub mod quadrature;
pub mod solver;

pub use channel::{gain_ct, numeric_g, product_eh, OutputChannel, ProductChannel};
pub use error::{Error, Result};
pub use model::{
    forward_product_channel, generate_gains, generate_k_sparse_signals, generate_matrix,
    generate_signals, Sparsity,
    GaussBernoulliPrior, GenerationConfig, ProblemInstance, UniformGainPrior,
};
pub use priors::{
    gain_posterior_moments, quadrature_oracle, signal_posterior_moments, GainMoments,
    PosteriorStats, Support,
};
pub use solver::{
    compute_crit, compute_mse_corr, Camp, GainMode, SolveResult, SolveSummary, SolverConfig,
    SolverState, Status,
};
pub use harness::{
    alpha_min, run_phase_diagram, run_sigma_p_diagram, run_sweep, run_transition_profile, Axes,
    GridResult, GridRow, Outcome, SweepSpec,
};
