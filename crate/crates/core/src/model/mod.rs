//! The LP-Net forward pass.
//!
//! Per window: encode the history into polynomial coefficients and a latent
//! code, evaluate the transfer network on a normalized grid, assemble
//! `Y(s) = H(s)(B X(s) + P(s))` at the query points, and invert.

mod config;
mod net;
mod oracle;
mod plan;

pub use config::{LpType, ModelConfig, ENCODER_ACTIVATION};
pub use net::{assemble_tape, initial_term_tape, invert_tape, EncoderOutput, History, LpNet, Scaling};
pub use oracle::{oracle_forcings, rmse, smd_forecast, smd_oracle_rmse, smd_reference, SmdParams, BENCHMARK_SMD};
pub use plan::{
    assemble_y, build_grid, eval_p, forcing_transform, local_times, normalize_times, series_weights,
    window_bounds, Grid, SamplePlan, WindowPlan,
};
