//! Experiment driver: data collection, training, evaluation, bound checks and
//! the mixture toy, all reproducible from a config file and a seed.
//!
//! Every command writes into an output directory: the resolved config as
//! `config.txt`, its CSV outputs (each starting with a `# config_hash=` line
//! and a header row) and a `manifest_<command>.json` listing the SHA-256 of
//! every input and output file.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{
    cmd_collect, cmd_eval, cmd_toy, cmd_train, cmd_verify, front_region_fraction, run_toy, solve_instance,
    summarize_toy, CollectSummary, EvalRow, Instance, ToyRun, ToySummary, TrainSummary, VerifySummary,
};
pub use config::{ExperimentConfig, ImportanceKind, Method, SamplerTag};
pub use io::{read_dataset, stream, EpisodeSample, RunDir};
