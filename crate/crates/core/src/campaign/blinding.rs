use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, Campaign, CampaignError, SampledQuestion};
use crate::grading::{GradeRecord, ScaleLevel};
use crate::ids::{CampaignId, EvaluatorId, ModelId, QaId};

/// Uniform permutation of `models` for one question, keyed by `(seed, qa)`.
/// Element `p` is the model shown at position `p + 1`.
pub fn permutation_for(seed: u64, qa: &QaId, models: &[ModelId]) -> Vec<ModelId> {
    let mut layout = models.to_vec();
    let mut rng = seeded_rng(seed, "blind", qa.as_str());
    layout.shuffle(&mut rng);
    layout
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionedResponse {
    /// 1-based.
    pub position: usize,
    pub response_text: String,
}

/// What an evaluator sees. Carries no model identity beyond the response
/// text itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedTask {
    pub campaign_id: CampaignId,
    pub qa_id: QaId,
    pub evaluator_id: EvaluatorId,
    pub question: String,
    pub standard_answer: String,
    pub grading_principle: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub timeliness_note: String,
    pub positioned_responses: Vec<PositionedResponse>,
    pub rubric_scale: Vec<ScaleLevel>,
}

pub(super) fn task_for(
    campaign: &Campaign,
    map: &BTreeMap<QaId, Vec<ModelId>>,
    s: &SampledQuestion,
    evaluator: &EvaluatorId,
) -> BlindedTask {
    let layout = &map[&s.qa_id];
    let positioned_responses = layout
        .iter()
        .enumerate()
        .map(|(p, model)| PositionedResponse {
            position: p + 1,
            response_text: campaign.response(&s.qa_id, model).map(|r| r.response_text.clone()).unwrap_or_default(),
        })
        .collect();
    BlindedTask {
        campaign_id: campaign.id.clone(),
        qa_id: s.qa_id.clone(),
        evaluator_id: evaluator.clone(),
        question: s.question.clone(),
        standard_answer: s.standard_answer.clone(),
        grading_principle: s.grading_principle.clone(),
        timeliness_note: s.timeliness_note.clone(),
        positioned_responses,
        rubric_scale: s.rubric_scale.clone(),
    }
}

/// A grade as submitted against a blinded position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGrade {
    pub qa_id: QaId,
    pub evaluator_id: EvaluatorId,
    /// 1-based.
    pub position: usize,
    pub grade: i64,
    pub submitted_at: DateTime<Utc>,
    #[serde(default)]
    pub amended: bool,
}

pub(super) fn unblind(campaign: &Campaign, raw: &[RawGrade]) -> Result<Vec<GradeRecord>, CampaignError> {
    raw.iter()
        .map(|r| {
            let s = campaign.question(&r.qa_id).ok_or_else(|| CampaignError::UnknownQaId(r.qa_id.clone()))?;
            let model = campaign.model_at(&r.qa_id, r.position)?;
            Ok(GradeRecord {
                campaign_id: campaign.id.clone(),
                dimension_id: s.dimension_id.clone(),
                qa_id: r.qa_id.clone(),
                evaluator_id: r.evaluator_id.clone(),
                model_id: model.clone(),
                grade: r.grade,
                submitted_at: r.submitted_at,
                amended: r.amended,
                rubric_version: s.rubric_version,
            })
        })
        .collect()
}
