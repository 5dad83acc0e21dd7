//! Training harness: run configuration, full-batch training, evaluation and
//! metrics.

mod config;
mod run;

pub use config::{RunConfig, DEFAULT_CLIP_NORM, DEFAULT_D_Z, DEFAULT_EPOCHS, TRAINING_EPSILON};
pub use run::{
    evaluate, load_model, mean_std, median, mse, save_model, save_outcome, seed_dir, train_run, train_run_with,
    EpochRecord, Metrics, RunData, RunSummary, SeedSummary, SplitData, TrainOutcome, CHECKPOINT_FILE, METRICS_FILE,
    MODEL_FILE, SUMMARY_FILE,
};
