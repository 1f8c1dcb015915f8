//! Configuration documents, experiment orchestration and artifact writers.

mod config;
mod output;
mod run;

pub use config::{
    nearest, parse_config, AxisName, Bounds, DiscretizationConfig, DomainConfig, ExperimentConfig,
    InitialConfig, OutputConfig, ProblemConfig, ProfileName, RunConfig, SourceConfig, StepperBlock,
    SweepAxis,
};
pub use output::{dat, fmt_num, snapshot_csv, trajectory_csv, TRAJECTORY_HEADER};
pub use run::{
    draw_ghidaglia, random_family, resolve_out_dir, run, Outcome, RunOptions, Summary,
    DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
