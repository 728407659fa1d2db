//! Curation of Git repository collections into engineered and not-engineered
//! classes.
//!
//! The pipeline runs in stages: repositories are cloned and their commit logs
//! exported ([`gitlog`]), each log becomes five weekly activity series
//! ([`measures`]), every series is summarised by a fixed 43-slot feature vector
//! ([`features`]), and a two-cluster k-means model is fitted on the
//! de-correlated, standardised features ([`model`]). [`evaluation`] scores
//! models against labelled data and [`store`] persists every artifact.

pub mod evaluation;
pub mod features;
pub mod gitlog;
pub mod kmeans;
pub mod measures;
pub mod model;
pub mod pipeline;
pub mod store;

pub use evaluation::{
    metrics, naive_baselines, select_best, sweep, ConfusionMatrix, EvaluationReport, SweepCell,
    SweepResult,
};
pub use features::{detect_peaks, extract_features, Feature, FeatureVector, Peak, FEATURE_COUNT};
pub use gitlog::{
    anonymize, parse_log, CommitRecord, GitLog, IngestStats, LogFormat, ParseOptions, RepoRef,
};
pub use measures::{build_series, week_index, MeasureKind, MeasureSeries, WeekIndex};
pub use model::{
    fit_model, pearson_matrix, predict, select_features, FeatureTable, PhantomModel, Scaler,
};
