use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::QualityError;
use crate::grading::GradeTable;
use crate::ids::{DimensionId, EvaluatorId, ModelId, QaId};
use crate::scalar::{format_fixed, Scalar};
use crate::taxonomy::check_weight_sum;

pub const QUALITY_SCHEMA: &str = "lalaeval.quality/1";

/// Evaluator-level dispute predicate `F_ikq`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EvaluatorRule {
    /// Evaluator `i` alone sits on one side of the zero / non-zero split.
    #[default]
    LoneDissenter,
    /// Evaluator `i`'s grade is more than `max_gap` away from every other
    /// grade on the panel.
    Outlier { max_gap: u32 },
}

/// Question-level dispute predicate `G_kq`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum QuestionRule {
    /// Both the zero and the non-zero side hold at least `⌊n/2⌋` evaluators.
    #[default]
    SplitPanel,
    /// Highest minus lowest panel grade is at least `min_range`.
    Spread { min_range: u32 },
}

/// Which `C(k)` drives the ranking. Both are always reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionScore {
    /// `w1 · Σ_q G_kq + w2 · ΣΣ F_ikq / n`, first term unnormalized.
    #[default]
    Verbatim,
    /// First term divided by `Q`, so both terms lie in `[0, 1]`.
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisputeConfig<T> {
    pub evaluator_rule: EvaluatorRule,
    pub question_rule: QuestionRule,
    pub dimension_weights: BTreeMap<DimensionId, T>,
    pub w1: T,
    pub w2: T,
    pub top_n: usize,
    pub ranking: QuestionScore,
}

impl<T: Scalar> DisputeConfig<T> {
    /// Default rules, equal dimension weights over the table, `w1 = w2 = ½`.
    pub fn defaults_for(table: &GradeTable, top_n: usize) -> Self {
        let j = table.dimensions().len().max(1) as u64;
        Self {
            evaluator_rule: EvaluatorRule::default(),
            question_rule: QuestionRule::default(),
            dimension_weights: table.dimensions().iter().map(|d| (d.dimension_id.clone(), T::ratio(1, j))).collect(),
            w1: T::ratio(1, 2),
            w2: T::ratio(1, 2),
            top_n,
            ranking: QuestionScore::default(),
        }
    }

    fn check(&self) -> Result<(), QualityError> {
        if self.top_n == 0 {
            return Err(QualityError::InvalidTopN);
        }
        check_weight_sum(self.dimension_weights.values())?;
        check_weight_sum([&self.w1, &self.w2])?;
        Ok(())
    }
}

/// `F_ikq` for evaluator `i` on one panel.
pub fn evaluator_dispute_flag(panel: &[u32], i: usize, rule: EvaluatorRule) -> Result<bool, QualityError> {
    if panel.len() < 2 {
        return Err(QualityError::PanelTooSmall(panel.len()));
    }
    let mine = panel[i];
    let others = panel.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| *g);
    Ok(match rule {
        EvaluatorRule::LoneDissenter => others.into_iter().all(|g| (g > 0) != (mine > 0)),
        EvaluatorRule::Outlier { max_gap } => others.into_iter().all(|g| g.abs_diff(mine) > max_gap),
    })
}

/// `G_kq` for one panel.
pub fn question_dispute_flag(panel: &[u32], rule: QuestionRule) -> Result<bool, QualityError> {
    let n = panel.len();
    if n < 2 {
        return Err(QualityError::PanelTooSmall(n));
    }
    Ok(match rule {
        QuestionRule::SplitPanel => {
            let zeros = panel.iter().filter(|g| **g == 0).count();
            let half = n / 2;
            zeros >= half && n - zeros >= half
        }
        QuestionRule::Spread { min_range } => {
            let hi = *panel.iter().max().expect("non-empty");
            let lo = *panel.iter().min().expect("non-empty");
            hi - lo >= min_range
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluatorDispute<T> {
    pub evaluator_id: EvaluatorId,
    /// `C(ij)`.
    pub per_dimension: BTreeMap<DimensionId, T>,
    /// `C(i)`.
    pub overall: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionDispute<T> {
    pub qa_id: QaId,
    pub dimension_id: DimensionId,
    /// `Σ_q G_kq`.
    pub split_cells: usize,
    /// `Σ_i Σ_q F_ikq`.
    pub dissent_flags: usize,
    /// `C(k)` as written.
    pub score: T,
    /// `C(k)` with the first term divided by `Q`.
    pub normalized_score: T,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub evaluator_id: EvaluatorId,
    pub qa_id: QaId,
    pub model_id: ModelId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisputeReport<T> {
    pub evaluators: Vec<EvaluatorDispute<T>>,
    /// All questions, ranked.
    pub questions: Vec<QuestionDispute<T>>,
    /// First `top_n` entries of the ranking.
    pub top: Vec<QaId>,
    pub ranking: QuestionScore,
    pub flagged_evaluator_cells: Vec<FlaggedCell>,
    pub flagged_question_cells: Vec<(QaId, ModelId)>,
}

/// Full dispute analysis. Every question must be graded by the full panel
/// for every model.
pub fn analyze_disputes<T: Scalar>(
    table: &GradeTable,
    config: &DisputeConfig<T>,
) -> Result<DisputeReport<T>, QualityError> {
    config.check()?;
    let n = table.panel_size();
    let models = table.model_count();
    if n < 2 {
        return Err(QualityError::PanelTooSmall(n));
    }
    let mut per_eval: Vec<BTreeMap<DimensionId, T>> = vec![BTreeMap::new(); n];
    let mut questions = Vec::new();
    let mut flagged_evaluator_cells = Vec::new();
    let mut flagged_question_cells = Vec::new();
    for block in table.dimensions() {
        if block.questions.is_empty() {
            return Err(QualityError::EmptyDimension(block.dimension_id.clone()));
        }
        if !config.dimension_weights.contains_key(&block.dimension_id) {
            return Err(QualityError::UnknownDimension(block.dimension_id.clone()));
        }
        let mut f_per_eval = vec![0u64; n];
        for q in &block.questions {
            let (mut g_sum, mut f_sum) = (0usize, 0usize);
            for m in 0..models {
                let panel: Vec<u32> = q
                    .panel(m)
                    .into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| QualityError::IncompletePanel(q.qa_id.clone()))?;
                if question_dispute_flag(&panel, config.question_rule)? {
                    g_sum += 1;
                    flagged_question_cells.push((q.qa_id.clone(), table.models()[m].clone()));
                }
                for (i, count) in f_per_eval.iter_mut().enumerate() {
                    if evaluator_dispute_flag(&panel, i, config.evaluator_rule)? {
                        f_sum += 1;
                        *count += 1;
                        flagged_evaluator_cells.push(FlaggedCell {
                            evaluator_id: table.evaluators()[i].clone(),
                            qa_id: q.qa_id.clone(),
                            model_id: table.models()[m].clone(),
                        });
                    }
                }
            }
            let first = config.w1.clone() * T::from_count(g_sum as u64);
            let second = config.w2.clone() * T::ratio(f_sum as u64, n as u64);
            questions.push(QuestionDispute {
                qa_id: q.qa_id.clone(),
                dimension_id: block.dimension_id.clone(),
                split_cells: g_sum,
                dissent_flags: f_sum,
                score: first.clone() + second.clone(),
                normalized_score: first / T::from_count(models as u64) + second,
            });
        }
        let cells = (block.questions.len() * models) as u64;
        for (i, f) in f_per_eval.into_iter().enumerate() {
            per_eval[i].insert(block.dimension_id.clone(), T::ratio(f, cells));
        }
    }
    let evaluators = per_eval
        .into_iter()
        .enumerate()
        .map(|(i, per_dimension)| {
            let overall = per_dimension.iter().map(|(d, c)| config.dimension_weights[d].clone() * c.clone()).sum();
            EvaluatorDispute { evaluator_id: table.evaluators()[i].clone(), per_dimension, overall }
        })
        .collect();
    let key = |q: &QuestionDispute<T>| match config.ranking {
        QuestionScore::Verbatim => q.score.clone(),
        QuestionScore::Normalized => q.normalized_score.clone(),
    };
    questions.sort_by(|a, b| {
        key(b).partial_cmp(&key(a)).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.qa_id.cmp(&b.qa_id))
    });
    let top = questions.iter().take(config.top_n).map(|q| q.qa_id.clone()).collect();
    flagged_evaluator_cells.sort();
    flagged_question_cells.sort();
    Ok(DisputeReport {
        evaluators,
        questions,
        top,
        ranking: config.ranking,
        flagged_evaluator_cells,
        flagged_question_cells,
    })
}

fn num<T: Scalar>(x: &T) -> Value {
    json!(x.to_f64())
}

impl<T: Scalar> DisputeReport<T> {
    pub fn to_json(&self) -> String {
        let evaluators: Vec<Value> = self
            .evaluators
            .iter()
            .map(|e| {
                let per: serde_json::Map<String, Value> =
                    e.per_dimension.iter().map(|(d, c)| (d.to_string(), num(c))).collect();
                json!({"evaluator_id": e.evaluator_id, "c_ij": per, "c_i": num(&e.overall)})
            })
            .collect();
        let questions: Vec<Value> = self
            .questions
            .iter()
            .map(|q| {
                json!({
                    "qa_id": q.qa_id,
                    "dimension_id": q.dimension_id,
                    "sum_g": q.split_cells,
                    "sum_f": q.dissent_flags,
                    "c_k": num(&q.score),
                    "c_k_normalized": num(&q.normalized_score),
                })
            })
            .collect();
        let doc = json!({
            "schema": QUALITY_SCHEMA,
            "kind": "dispute",
            "ranking": self.ranking,
            "evaluators": evaluators,
            "questions": questions,
            "top": self.top,
            "flagged_evaluator_cells": self.flagged_evaluator_cells,
            "flagged_question_cells": self.flagged_question_cells,
        });
        serde_json::to_string_pretty(&doc).expect("dispute report serializes") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Dispute analysis\n\n## Evaluators\n\n| Evaluator |");
        let dims: Vec<&DimensionId> =
            self.evaluators.first().map(|e| e.per_dimension.keys().collect()).unwrap_or_default();
        for d in &dims {
            out.push_str(&format!(" C(i, {d}) |"));
        }
        out.push_str(" C(i) |\n|---|");
        for _ in &dims {
            out.push_str("---:|");
        }
        out.push_str("---:|\n");
        for e in &self.evaluators {
            out.push_str(&format!("| {} |", e.evaluator_id));
            for d in &dims {
                out.push_str(&format!(" {} |", format_fixed(&e.per_dimension[*d], 4)));
            }
            out.push_str(&format!(" {} |\n", format_fixed(&e.overall, 4)));
        }
        out.push_str(
            "\n## Most disputed questions\n\n| Rank | Question | Dimension | ΣG | ΣF | C(k) | C(k) normalized |\n",
        );
        out.push_str("|---:|---|---|---:|---:|---:|---:|\n");
        for (rank, id) in self.top.iter().enumerate() {
            let q = self.questions.iter().find(|q| &q.qa_id == id).expect("top ids come from questions");
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} |\n",
                rank + 1,
                q.qa_id,
                q.dimension_id,
                q.split_cells,
                q.dissent_flags,
                format_fixed(&q.score, 4),
                format_fixed(&q.normalized_score, 4)
            ));
        }
        out
    }
}
