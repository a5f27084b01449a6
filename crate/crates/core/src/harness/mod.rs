//! Dataset ingestion, the payment experiment pipelines and the statistics
//! reported on their output.

mod data;
mod experiment;
mod stats;

pub use data::{NetworkDataset, RankingDataset};
pub use experiment::{
    experiment_comparison, experiment_network, experiment_network_model, AgentPayments, ModelRunConfig, Setting,
    DEFAULT_TRIALS,
};
pub use stats::{
    dominance_test, empirical_transitivity, summarize, DominanceOutcome, Ecdf, SummaryStats, TransitivityStats,
    DOMINANCE_TOLERANCE,
};
