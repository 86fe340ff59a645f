//! Dispute analysis, cross-round grade-fluctuation attribution and the
//! evaluator training lifecycle.

mod dispute;
mod fluctuation;
mod lifecycle;

use thiserror::Error;

use crate::ids::{CampaignId, DimensionId, ModelId, QaId};
use crate::taxonomy::WeightError;

pub use dispute::{
    analyze_disputes, evaluator_dispute_flag, question_dispute_flag, DisputeConfig, DisputeReport, EvaluatorDispute,
    EvaluatorRule, FlaggedCell, QuestionDispute, QuestionRule, QuestionScore, QUALITY_SCHEMA,
};
pub use fluctuation::{
    attribute_change, decompose_statistic, fluctuation, scenario_partition, tag_pairs, CauseContributions,
    FluctuationBreakdown, ManualTag, PairTag, PanelScenario, QaScenario, RoundBreakdown, RoundSnapshot,
    ScenarioPartition, Statistic, TagSource,
};
pub use lifecycle::{next_state, EvaluatorProfile, LifecycleError, LifecycleEvent, LifecycleState, LIFECYCLE_EDGES};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum QualityError {
    #[error("panel size {0} is below 2")]
    PanelTooSmall(usize),
    #[error("dimension `{0}` has no questions")]
    EmptyDimension(DimensionId),
    #[error("dimension `{0}` is not in the table or has no weight")]
    UnknownDimension(DimensionId),
    #[error("model `{0}` is not in the round")]
    UnknownModel(ModelId),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("question `{0}` is not graded by the full panel for every model")]
    IncompletePanel(QaId),
    #[error("top_n must be at least 1")]
    InvalidTopN,
    #[error("unknown round `{0}`")]
    UnknownRound(CampaignId),
    #[error("round `{0}` is not closed")]
    RoundNotClosed(CampaignId),
    #[error("no tag covers question `{0}`")]
    UncoveredPair(QaId),
    #[error("round `{0}` has no cells for this dimension")]
    EmptyRound(CampaignId),
    #[error("breakdowns differ in dimension, model or statistic")]
    DimensionMismatch,
}

#[cfg(test)]
mod tests;
