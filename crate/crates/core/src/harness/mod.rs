//! Experiment orchestration: campaigns over instance sets, the results
//! store, regime-conditioned summaries, Welch tests and plot data.

pub mod aggregate;
pub mod campaign;
pub mod plotdata;
pub mod record;
pub mod stats;

use std::path::Path;

use thiserror::Error;

pub use aggregate::{aggregate, GroupSummary, Grouping};
pub use campaign::{run_campaign, AlgoSpec, CampaignInstance, CampaignOptions, CampaignReport, RhoPolicy};
pub use plotdata::{alpha_histograms, binned_series, Axis};
pub use record::RunRecord;
pub use stats::{welch_t, WelchResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("configuration: {0}")]
    Config(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(source: std::io::Error) -> Self {
        HarnessError::Io { path: String::new(), source }
    }
}
