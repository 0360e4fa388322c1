//! Experiment configuration, orchestration and result files.

mod config;
mod log;
mod plot;
mod run;
mod sweep;

pub use config::{DurationKind, PeModeKind, RunConfig, KEYS};
pub use log::{read_checkpoints, Checkpoint, Counters, RunLog};
pub use plot::{emit_plots, render_bars, render_curves, Series};
pub use run::{run, write_run};
pub use sweep::{
    derive_seed, preset, sweep, Experiment, ExperimentResult, Overrides, SeriesResult,
    SweepOptions, PROCEDURAL_ENV_SEEDS,
};
