use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::QualityError;
use crate::campaign::{Campaign, CampaignStatus};
use crate::grading::{CellRef, GradeTable};
use crate::ids::{CampaignId, DimensionId, EvaluatorId, ModelId, QaId};
use crate::scalar::{format_fixed, Scalar};

/// Everything the fluctuation analysis needs from one closed round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundSnapshot {
    pub round_id: CampaignId,
    pub closed: bool,
    pub questions: BTreeMap<QaId, String>,
    pub responses: BTreeMap<(QaId, ModelId), String>,
    pub table: GradeTable,
}

impl RoundSnapshot {
    pub fn from_campaign(campaign: &Campaign, table: GradeTable) -> Self {
        Self {
            round_id: campaign.id.clone(),
            closed: campaign.status == CampaignStatus::Closed,
            questions: campaign.sampled.iter().map(|s| (s.qa_id.clone(), s.question.clone())).collect(),
            responses: campaign
                .responses()
                .map(|r| ((r.qa_id.clone(), r.model_id.clone()), r.response_text.clone()))
                .collect(),
            table,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagSource {
    AutoExact,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTag {
    pub qa_id: QaId,
    pub round_pair: (CampaignId, CampaignId),
    pub question_same: bool,
    /// Per model; empty whenever `question_same` is false.
    pub response_same: BTreeMap<ModelId, bool>,
    pub tag_source: TagSource,
}

/// A human judgement that replaces the byte-equality tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualTag {
    pub qa_id: QaId,
    pub question_same: bool,
    #[serde(default)]
    pub response_same: BTreeMap<ModelId, bool>,
}

/// Tags every QA pair that appears in either round. Byte equality decides
/// sameness unless a manual tag for the pair is supplied.
pub fn tag_pairs(a: &RoundSnapshot, b: &RoundSnapshot, manual: &[ManualTag]) -> Result<Vec<PairTag>, QualityError> {
    for r in [a, b] {
        if !r.closed {
            return Err(QualityError::RoundNotClosed(r.round_id.clone()));
        }
    }
    let ids: BTreeSet<&QaId> = a.questions.keys().chain(b.questions.keys()).collect();
    let models: BTreeSet<&ModelId> = a.table.models().iter().chain(b.table.models()).collect();
    let round_pair = (a.round_id.clone(), b.round_id.clone());
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        if let Some(m) = manual.iter().find(|m| &m.qa_id == id) {
            let response_same = if m.question_same { m.response_same.clone() } else { BTreeMap::new() };
            out.push(PairTag {
                qa_id: id.clone(),
                round_pair: round_pair.clone(),
                question_same: m.question_same,
                response_same,
                tag_source: TagSource::Manual,
            });
            continue;
        }
        let question_same = matches!((a.questions.get(id), b.questions.get(id)), (Some(x), Some(y)) if x == y);
        let mut response_same = BTreeMap::new();
        if question_same {
            for m in &models {
                let key = ((*id).clone(), (*m).clone());
                let same = matches!((a.responses.get(&key), b.responses.get(&key)), (Some(x), Some(y)) if x == y);
                response_same.insert((*m).clone(), same);
            }
        }
        out.push(PairTag {
            qa_id: id.clone(),
            round_pair: round_pair.clone(),
            question_same,
            response_same,
            tag_source: TagSource::AutoExact,
        });
    }
    Ok(out)
}

/// QA axis: question changed, response changed, both unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QaScenario {
    Q1,
    Q2,
    Q3,
}

/// Evaluator axis: present in both rounds, or not.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PanelScenario {
    P1,
    P2,
}

impl QaScenario {
    pub const ALL: [QaScenario; 3] = [QaScenario::Q1, QaScenario::Q2, QaScenario::Q3];
}

impl PanelScenario {
    pub const ALL: [PanelScenario; 2] = [PanelScenario::P1, PanelScenario::P2];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Cell value 1 if the grade is non-zero.
    Accuracy,
    /// Cell value `AS / TS`.
    NormalizedGrade,
}

impl Statistic {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accuracy" => Some(Statistic::Accuracy),
            "normalized_grade" | "normalized" | "grade" => Some(Statistic::NormalizedGrade),
            _ => None,
        }
    }
}

/// Cells of one round's dimension split into the six scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioPartition<T> {
    pub round_id: CampaignId,
    pub dimension_id: DimensionId,
    /// `None` pools every model.
    pub model: Option<ModelId>,
    pub cells: BTreeMap<(QaScenario, PanelScenario), Vec<CellRef>>,
    /// `W_q1, W_q2, W_q3`.
    pub w_q: [T; 3],
    /// `W_p1, W_p2`.
    pub w_p: [T; 2],
}

/// Partitions one round's cells for a dimension (optionally one model).
/// `other_panel` is the panel of the round being compared against.
pub fn scenario_partition<T: Scalar>(
    tags: &[PairTag],
    round: &RoundSnapshot,
    other_panel: &[EvaluatorId],
    dimension: &DimensionId,
    model: Option<&ModelId>,
) -> Result<ScenarioPartition<T>, QualityError> {
    let table = &round.table;
    let block = table.dimension(dimension).map_err(|_| QualityError::UnknownDimension(dimension.clone()))?;
    let model_ix: Vec<usize> = match model {
        Some(m) => vec![table.model_index(m).map_err(|_| QualityError::UnknownModel(m.clone()))?],
        None => (0..table.model_count()).collect(),
    };
    let tag_of: BTreeMap<&QaId, &PairTag> = tags.iter().map(|t| (&t.qa_id, t)).collect();
    let mut cells: BTreeMap<(QaScenario, PanelScenario), Vec<CellRef>> = BTreeMap::new();
    let mut q_counts = [0u64; 3];
    let mut p_counts = [0u64; 2];
    for e in table.evaluators() {
        p_counts[usize::from(!other_panel.contains(e))] += 1;
    }
    for q in &block.questions {
        let tag = tag_of.get(&q.qa_id).ok_or_else(|| QualityError::UncoveredPair(q.qa_id.clone()))?;
        if !q.is_complete() {
            return Err(QualityError::IncompletePanel(q.qa_id.clone()));
        }
        for &m in &model_ix {
            let model_id = &table.models()[m];
            let qs = if !tag.question_same {
                QaScenario::Q1
            } else if tag.response_same.get(model_id).copied().unwrap_or(false) {
                QaScenario::Q3
            } else {
                QaScenario::Q2
            };
            q_counts[qs as usize] += 1;
            for e in table.evaluators() {
                let ps = if other_panel.contains(e) { PanelScenario::P1 } else { PanelScenario::P2 };
                cells.entry((qs, ps)).or_default().push(CellRef {
                    dimension_id: dimension.clone(),
                    qa_id: q.qa_id.clone(),
                    evaluator_id: e.clone(),
                    model_id: model_id.clone(),
                });
            }
        }
    }
    let q_total: u64 = q_counts.iter().sum();
    let p_total: u64 = p_counts.iter().sum();
    if q_total == 0 || p_total == 0 {
        return Err(QualityError::EmptyRound(round.round_id.clone()));
    }
    Ok(ScenarioPartition {
        round_id: round.round_id.clone(),
        dimension_id: dimension.clone(),
        model: model.cloned(),
        cells,
        w_q: q_counts.map(|c| T::ratio(c, q_total)),
        w_p: p_counts.map(|c| T::ratio(c, p_total)),
    })
}

/// One round's six-scenario view of a statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundBreakdown<T> {
    pub round_id: CampaignId,
    pub dimension_id: DimensionId,
    pub model: Option<ModelId>,
    pub statistic: Statistic,
    pub w_q: [T; 3],
    pub w_p: [T; 2],
    /// `Avg_{qi pj}`, zero for empty scenarios.
    pub avg: [[T; 2]; 3],
    pub cell_counts: [[usize; 2]; 3],
    /// `Σ W_qi · W_pj · Avg_{qi pj}`.
    pub reconstruction: T,
    /// Mean cell value computed straight from the table.
    pub direct: T,
}

fn cell_value<T: Scalar>(table: &GradeTable, c: &CellRef, stat: Statistic) -> T {
    let (_, q) = table.question(&c.qa_id).expect("partition cells come from the table");
    let i = table.evaluator_index(&c.evaluator_id).expect("partition cells come from the table");
    let m = table.model_index(&c.model_id).expect("partition cells come from the table");
    let g = q.grade(i, m).expect("partition requires complete panels");
    match stat {
        Statistic::Accuracy => T::from_count(u64::from(g > 0)),
        Statistic::NormalizedGrade => T::ratio(u64::from(g), u64::from(q.max_grade)),
    }
}

/// Scenario averages plus the weighted reconstruction of the statistic.
pub fn decompose_statistic<T: Scalar>(
    partition: &ScenarioPartition<T>,
    round: &RoundSnapshot,
    statistic: Statistic,
) -> Result<RoundBreakdown<T>, QualityError> {
    let mut avg: [[T; 2]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    let mut cell_counts = [[0usize; 2]; 3];
    let mut all_sum = T::zero();
    let mut all_count = 0u64;
    for qs in QaScenario::ALL {
        for ps in PanelScenario::ALL {
            let Some(cells) = partition.cells.get(&(qs, ps)) else { continue };
            if cells.is_empty() {
                continue;
            }
            let sum: T = cells.iter().map(|c| cell_value::<T>(&round.table, c, statistic)).sum();
            all_sum = all_sum + sum.clone();
            all_count += cells.len() as u64;
            cell_counts[qs as usize][ps as usize] = cells.len();
            avg[qs as usize][ps as usize] = sum / T::from_count(cells.len() as u64);
        }
    }
    if all_count == 0 {
        return Err(QualityError::EmptyRound(round.round_id.clone()));
    }
    let mut reconstruction = T::zero();
    for (wq, row) in partition.w_q.iter().zip(&avg) {
        for (wp, a) in partition.w_p.iter().zip(row) {
            reconstruction = reconstruction + wq.clone() * wp.clone() * a.clone();
        }
    }
    Ok(RoundBreakdown {
        round_id: partition.round_id.clone(),
        dimension_id: partition.dimension_id.clone(),
        model: partition.model.clone(),
        statistic,
        w_q: partition.w_q.clone(),
        w_p: partition.w_p.clone(),
        avg,
        cell_counts,
        reconstruction,
        direct: all_sum / T::from_count(all_count),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauseContributions<T> {
    pub question_change: T,
    pub response_change: T,
    pub evaluator_inconsistency: T,
    pub evaluator_change: T,
}

impl<T: Scalar> CauseContributions<T> {
    pub fn sum(&self) -> T {
        self.question_change.clone()
            + self.response_change.clone()
            + self.evaluator_inconsistency.clone()
            + self.evaluator_change.clone()
    }

    pub fn all_zero(&self) -> bool {
        [&self.question_change, &self.response_change, &self.evaluator_inconsistency, &self.evaluator_change]
            .iter()
            .all(|x| x.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationBreakdown<T> {
    pub statistic: Statistic,
    pub dimension_id: DimensionId,
    pub model: Option<ModelId>,
    pub before: RoundBreakdown<T>,
    pub after: RoundBreakdown<T>,
    pub causes: CauseContributions<T>,
    /// `after.reconstruction − before.reconstruction`.
    pub total_change: T,
    /// Whether both rounds share every scenario weight, in which case the
    /// weight-shift components below are exactly zero.
    pub weights_matched: bool,
    /// `Σ_ij (W'_qi − W_qi) · W'_pj · Avg'_ij`, folded into `question_change`.
    pub question_weight_shift: T,
    /// `Σ_ij W_qi · (W'_pj − W_pj) · Avg'_ij`, folded into `evaluator_change`.
    pub evaluator_weight_shift: T,
}

/// Splits `after − before` into the four causes.
///
/// Average changes are weighted by the earlier round's scenario weights:
/// the question-changed row (both evaluator columns) goes to question change,
/// the response-changed row to response change, and the unchanged row splits
/// into evaluator inconsistency (same evaluator) and evaluator change (new
/// evaluator). When the weights differ between rounds, the shift in QA
/// weights is added to question change and the shift in evaluator weights to
/// evaluator change; the four causes still add up to the total change.
pub fn attribute_change<T: Scalar>(
    before: &RoundBreakdown<T>,
    after: &RoundBreakdown<T>,
) -> Result<FluctuationBreakdown<T>, QualityError> {
    if before.dimension_id != after.dimension_id || before.statistic != after.statistic || before.model != after.model {
        return Err(QualityError::DimensionMismatch);
    }
    let (wq, wp, a) = (&before.w_q, &before.w_p, &before.avg);
    let (wq2, wp2, a2) = (&after.w_q, &after.w_p, &after.avg);
    let delta = |i: usize, j: usize| a2[i][j].clone() - a[i][j].clone();
    let row = |i: usize| -> T { (0..2).map(|j| wp[j].clone() * delta(i, j)).sum::<T>() * wq[i].clone() };

    let mut q_shift = T::zero();
    let mut p_shift = T::zero();
    for i in 0..3 {
        for j in 0..2 {
            q_shift = q_shift + (wq2[i].clone() - wq[i].clone()) * wp2[j].clone() * a2[i][j].clone();
            p_shift = p_shift + wq[i].clone() * (wp2[j].clone() - wp[j].clone()) * a2[i][j].clone();
        }
    }
    let causes = CauseContributions {
        question_change: row(0) + q_shift.clone(),
        response_change: row(1),
        evaluator_inconsistency: wq[2].clone() * wp[0].clone() * delta(2, 0),
        evaluator_change: wq[2].clone() * wp[1].clone() * delta(2, 1) + p_shift.clone(),
    };
    let weights_matched = wq == wq2 && wp == wp2;
    Ok(FluctuationBreakdown {
        statistic: before.statistic,
        dimension_id: before.dimension_id.clone(),
        model: before.model.clone(),
        total_change: after.reconstruction.clone() - before.reconstruction.clone(),
        before: before.clone(),
        after: after.clone(),
        causes,
        weights_matched,
        question_weight_shift: q_shift,
        evaluator_weight_shift: p_shift,
    })
}

/// Convenience wrapper: tags, partitions and decomposes both rounds, then
/// attributes the change.
pub fn fluctuation<T: Scalar>(
    a: &RoundSnapshot,
    b: &RoundSnapshot,
    manual: &[ManualTag],
    dimension: &DimensionId,
    model: Option<&ModelId>,
    statistic: Statistic,
) -> Result<FluctuationBreakdown<T>, QualityError> {
    let tags = tag_pairs(a, b, manual)?;
    let pa = scenario_partition::<T>(&tags, a, b.table.evaluators(), dimension, model)?;
    let pb = scenario_partition::<T>(&tags, b, a.table.evaluators(), dimension, model)?;
    let ba = decompose_statistic(&pa, a, statistic)?;
    let bb = decompose_statistic(&pb, b, statistic)?;
    attribute_change(&ba, &bb)
}

fn num<T: Scalar>(x: &T) -> Value {
    json!(x.to_f64())
}

fn round_json<T: Scalar>(r: &RoundBreakdown<T>) -> Value {
    let avg: Vec<Vec<Value>> = r.avg.iter().map(|row| row.iter().map(num).collect()).collect();
    json!({
        "round_id": r.round_id,
        "w_q": r.w_q.iter().map(num).collect::<Vec<_>>(),
        "w_p": r.w_p.iter().map(num).collect::<Vec<_>>(),
        "avg": avg,
        "cell_counts": r.cell_counts,
        "reconstruction": num(&r.reconstruction),
        "direct": num(&r.direct),
    })
}

impl<T: Scalar> FluctuationBreakdown<T> {
    pub fn to_json(&self) -> String {
        let doc = json!({
            "schema": super::QUALITY_SCHEMA,
            "kind": "fluctuation",
            "statistic": self.statistic,
            "dimension_id": self.dimension_id,
            "model_id": self.model,
            "before": round_json(&self.before),
            "after": round_json(&self.after),
            "total_change": num(&self.total_change),
            "weights_matched": self.weights_matched,
            "cause_contributions": {
                "question_change": num(&self.causes.question_change),
                "response_change": num(&self.causes.response_change),
                "evaluator_inconsistency": num(&self.causes.evaluator_inconsistency),
                "evaluator_change": num(&self.causes.evaluator_change),
            },
            "question_weight_shift": num(&self.question_weight_shift),
            "evaluator_weight_shift": num(&self.evaluator_weight_shift),
        });
        serde_json::to_string_pretty(&doc).expect("fluctuation serializes") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let f = |x: &T| format_fixed(x, 4);
        let mut out = format!(
            "# Grade fluctuation: {} ({:?})\n\nRounds {} → {}; total change {}.\n\n",
            self.dimension_id,
            self.statistic,
            self.before.round_id,
            self.after.round_id,
            f(&self.total_change)
        );
        out.push_str(
            "| Scenario | W_q (before) | W_p (before) | Avg (before) | W_q (after) | W_p (after) | Avg (after) |\n",
        );
        out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
        for (i, qs) in ["q1", "q2", "q3"].iter().enumerate() {
            for (j, ps) in ["p1", "p2"].iter().enumerate() {
                out.push_str(&format!(
                    "| {qs}{ps} | {} | {} | {} | {} | {} | {} |\n",
                    f(&self.before.w_q[i]),
                    f(&self.before.w_p[j]),
                    f(&self.before.avg[i][j]),
                    f(&self.after.w_q[i]),
                    f(&self.after.w_p[j]),
                    f(&self.after.avg[i][j])
                ));
            }
        }
        out.push_str("\n| Cause | Contribution |\n|---|---:|\n");
        out.push_str(&format!("| Question change | {} |\n", f(&self.causes.question_change)));
        out.push_str(&format!("| Response change | {} |\n", f(&self.causes.response_change)));
        out.push_str(&format!("| Evaluator inconsistency | {} |\n", f(&self.causes.evaluator_inconsistency)));
        out.push_str(&format!("| Evaluator change | {} |\n", f(&self.causes.evaluator_change)));
        out
    }
}
