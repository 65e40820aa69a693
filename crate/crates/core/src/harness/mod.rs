//! Experiment harness: data loading, epoch-budget calibration, multi-trial
//! method comparisons and report files.

pub mod experiment;
pub mod loaders;
pub mod methods;
pub mod report;
pub mod stats;
pub mod synth;

pub use experiment::{
    calibrate_epochs, run_experiment, DataSource, EpochBudget, Experiment, ExperimentConfig, TrainSettings,
};
pub use loaders::{load_dataset, parse_csv, parse_idx, parse_tsv_text, DataFormat};
pub use methods::{Method, ScoreSource, ScoringSpec, TrainerKind};
pub use report::{read_report, render_curves, render_table, write_report, Calibration, Report};
pub use synth::{synth_dataset, synth_text, BlobSpec, SynthData, TextSpec};
