//! Dimension grades, weighted totals, accuracy, group rollups and
//! disagreement ratios, plus report rendering.

mod published;
mod report;
mod rollup;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::campaign::CampaignStatus;
use crate::grading::DimensionBlock;
use crate::ids::DimensionId;
use crate::scalar::Scalar;
use crate::taxonomy::{check_weight_sum, WeightError};

pub use published::{
    PublishedGroupRow, PublishedModel, PublishedRatio, PublishedResults, PublishedRow, PUBLISHED_SCHEMA,
};
pub use report::{
    build_report, report_from_published, table_weights, DimensionGrade, DimensionMeta, ModelReport, Report,
    ReportFormat, ReportSource, DISAGREEMENT_NOTE, REPORT_SCHEMA,
};
pub use rollup::{mean, rollup, rollup_available, rollup_with, RollupGroup, RollupSpec};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("dimension `{0}` has no graded cells")]
    EmptyDimension(DimensionId),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("group `{group}` references unknown dimension `{dimension}`")]
    UnknownDimensionInGroup { group: String, dimension: DimensionId },
    #[error("group `{group}` references unknown group `{member}`")]
    UnknownGroup { group: String, member: String },
    #[error("group `{0}` has no members")]
    EmptyGroup(String),
    #[error("panel size {0} is below 2")]
    PanelTooSmall(usize),
    #[error("model index {0} is out of range")]
    UnknownModel(usize),
    #[error("report needs a grading or closed campaign with grades, found {0}")]
    WrongStatus(CampaignStatus),
    #[error("published results do not list dimension `{0}`")]
    MissingPublishedDimension(DimensionId),
    #[error("published value `{0}` is not a decimal")]
    BadPublishedValue(String),
}

/// `Grade(qj) = ΣΣ AS_qki / ΣΣ TS_k` for model `q` on one dimension.
/// Gaps drop out of both sums.
pub fn dimension_grade<T: Scalar>(block: &DimensionBlock, model: usize) -> Result<T, AnalyticsError> {
    let (mut got, mut max) = (0u64, 0u64);
    for q in &block.questions {
        if model >= q.model_count() {
            return Err(AnalyticsError::UnknownModel(model));
        }
        for g in q.panel(model).into_iter().flatten() {
            got += u64::from(g);
            max += u64::from(q.max_grade);
        }
    }
    if max == 0 {
        return Err(AnalyticsError::EmptyDimension(block.dimension_id.clone()));
    }
    Ok(T::ratio(got, max))
}

/// Share of present `(question, evaluator)` cells with a non-zero grade.
pub fn accuracy<T: Scalar>(block: &DimensionBlock, model: usize) -> Result<T, AnalyticsError> {
    let (mut nonzero, mut present) = (0u64, 0u64);
    for q in &block.questions {
        if model >= q.model_count() {
            return Err(AnalyticsError::UnknownModel(model));
        }
        for g in q.panel(model).into_iter().flatten() {
            present += 1;
            nonzero += u64::from(g > 0);
        }
    }
    if present == 0 {
        return Err(AnalyticsError::EmptyDimension(block.dimension_id.clone()));
    }
    Ok(T::ratio(nonzero, present))
}

/// `Grade(q) = Σ_j w_j Grade(qj)`. Every graded dimension needs a weight and
/// the weights must sum to one.
pub fn total_grade<T: Scalar>(
    grades: &BTreeMap<DimensionId, T>,
    weights: &BTreeMap<DimensionId, T>,
) -> Result<T, AnalyticsError> {
    check_weight_sum(weights.values())?;
    let mut total = T::zero();
    for (dim, g) in grades {
        let w = weights.get(dim).ok_or_else(|| WeightError::MissingWeight(dim.clone()))?;
        total = total + w.clone() * g.clone();
    }
    Ok(total)
}

/// Share of `(question, model)` cells whose present panel grades are not all
/// identical.
pub fn disagreement_ratio<T: Scalar>(block: &DimensionBlock) -> Result<T, AnalyticsError> {
    let Some(first) = block.questions.first() else {
        return Err(AnalyticsError::EmptyDimension(block.dimension_id.clone()));
    };
    if first.panel_size() < 2 {
        return Err(AnalyticsError::PanelTooSmall(first.panel_size()));
    }
    let (mut split, mut cells) = (0u64, 0u64);
    for q in &block.questions {
        for m in 0..q.model_count() {
            let grades = q.present_panel(m);
            cells += 1;
            split += u64::from(grades.windows(2).any(|w| w[0] != w[1]));
        }
    }
    if cells == 0 {
        return Err(AnalyticsError::EmptyDimension(block.dimension_id.clone()));
    }
    Ok(T::ratio(split, cells))
}

#[cfg(test)]
mod tests;
