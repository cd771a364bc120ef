//! Scenario generation, the Monte Carlo experiment runner, aggregation,
//! and the CSV outputs consumed by external plotting.

mod config;
mod generate;
mod run;

use thiserror::Error;

use crate::hetnet::HetnetError;
use crate::optimizer::OptimizerError;

pub use config::{ExperimentConfig, PowerConfig, SweepValues};
pub use generate::generate_scenario;
pub use run::{
    aggregate, run_experiment, simulate, sweep_points, write_summary_csv, write_trials_csv,
    SummaryRow, TrialReport, SUMMARY_HEADER, TRIALS_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("could not place {n_sbs} small cells {separation} m apart within {attempts} attempts")]
    Placement {
        n_sbs: usize,
        separation: f64,
        attempts: usize,
    },
    #[error("scenario generation failed {attempts} times; last violation: {last}")]
    InfeasibleGeneration { attempts: usize, last: HetnetError },
    #[error("every trial failed in every method")]
    AllTrialsFailed,
    #[error(transparent)]
    Hetnet(#[from] HetnetError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
