//! Ground-truth trajectories for the benchmark systems.

mod dataset;
mod dynamics;
mod forcing;

pub use dataset::{
    build_dataset, dataset_dir, fmt_f64, generate_split, load_split, read_columns, read_sample_csv,
    sample_rng, write_dataset, write_sample_csv, Dataset, DatasetSpec, ForcingFamily, GeneratedSample,
    Manifest, ManifestEntry, Split, N_FORE, N_HIST,
};
pub use dynamics::{
    integrate_dde, integrate_rk4, integrate_rk4_substeps, pulse_onset, simulate, uniform_grid, Pulse, System,
    SystemSpec, TimeSeriesSample, SUBSTEPS,
};
pub use forcing::ForcingSignal;
