//! End-to-end pipeline: configuration, the fit/score/train/experiment/report
//! commands, artifact formats, and SVG rendering.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod svg;

pub use artifacts::{
    read_score_csv, run_stem, FitStats, RewardModelFile, RunRecord, ScoreRow, ScorerModel,
};
pub use commands::{
    experiment, fit, report, score, train, CellRow, ExperimentOutput, FitOutput, ReportOutput,
    ScoreOutput, TrainOutput,
};
pub use config::{
    DatasetConfig, DqnSettings, EnvConfig, EstimatorConfig, GenerateConfig, RewardConfig,
    RlConfig, RunConfig, ScoreGridConfig, SweepConfig, TabularSettings,
};
