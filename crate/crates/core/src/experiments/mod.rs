//! Synthetic chains and replication studies.

pub mod generators;
pub mod studies;

pub use generators::{
    ar1_generate, ar1_series, ar1_truth, logistic_mh_generate, logistic_mh_run, mixture_mh_generate,
    mixture_mh_run, stream_rng, Ar1Config, Ar1Start, BiasTruth, LogisticConfig, McmcRun, MixtureConfig,
};
pub use studies::{
    ar1_estimator_grid, coverage_study, ess_study, replication_study, timing_bench, timing_estimator_grid,
    timing_ordered, ChainGenerator, CoverageRow, EssRow, NamedEstimator, StudyConfig, StudyRow, TimingRow,
};
