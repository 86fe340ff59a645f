use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ledger::GradeLedger;
use crate::campaign::Campaign;
use crate::ids::{CampaignId, DimensionId, EvaluatorId, ModelId, QaId};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("unknown dimension `{0}`")]
    UnknownDimension(DimensionId),
    #[error("unknown question `{0}`")]
    UnknownQuestion(QaId),
    #[error("unknown evaluator `{0}`")]
    UnknownEvaluator(EvaluatorId),
    #[error("unknown model `{0}`")]
    UnknownModel(ModelId),
    #[error("grade {grade} exceeds TS_k = {max} for question `{qa}`")]
    AboveMaximum { qa: QaId, grade: u32, max: u32 },
}

/// Grades of one question: `n × Q` cells, evaluator-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionBlock {
    pub qa_id: QaId,
    /// `TS_k`, the top grade of the question's rubric.
    pub max_grade: u32,
    cells: Vec<Option<u32>>,
    models: usize,
}

impl QuestionBlock {
    pub fn grade(&self, evaluator: usize, model: usize) -> Option<u32> {
        self.cells[evaluator * self.models + model]
    }

    /// Panel grades for one model, in evaluator order.
    pub fn panel(&self, model: usize) -> Vec<Option<u32>> {
        (0..self.panel_size()).map(|i| self.grade(i, model)).collect()
    }

    /// Panel grades for one model with gaps removed.
    pub fn present_panel(&self, model: usize) -> Vec<u32> {
        self.panel(model).into_iter().flatten().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn model_count(&self) -> usize {
        self.models
    }

    pub fn panel_size(&self) -> usize {
        self.cells.len() / self.models.max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionBlock {
    pub dimension_id: DimensionId,
    pub questions: Vec<QuestionBlock>,
}

/// Position of one grade cell, by identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub dimension_id: DimensionId,
    pub qa_id: QaId,
    pub evaluator_id: EvaluatorId,
    pub model_id: ModelId,
}

/// Dense `(j, k, i, q) → AS_qki` view of a campaign's effective grades.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeTable {
    pub campaign_id: CampaignId,
    models: Vec<ModelId>,
    evaluators: Vec<EvaluatorId>,
    dimensions: Vec<DimensionBlock>,
}

impl GradeTable {
    pub fn new(campaign_id: CampaignId, models: Vec<ModelId>, evaluators: Vec<EvaluatorId>) -> Self {
        Self { campaign_id, models, evaluators, dimensions: Vec::new() }
    }

    /// Adds an empty dimension block with `(qa_id, TS_k)` questions.
    pub fn add_dimension(&mut self, dimension_id: DimensionId, questions: Vec<(QaId, u32)>) {
        let cells = self.evaluators.len() * self.models.len();
        let questions = questions
            .into_iter()
            .map(|(qa_id, max_grade)| QuestionBlock {
                qa_id,
                max_grade,
                cells: vec![None; cells],
                models: self.models.len(),
            })
            .collect();
        match self.dimensions.iter_mut().find(|d| d.dimension_id == dimension_id) {
            Some(d) => d.questions.extend(questions),
            None => self.dimensions.push(DimensionBlock { dimension_id, questions }),
        }
    }

    pub fn models(&self) -> &[ModelId] {
        &self.models
    }

    pub fn evaluators(&self) -> &[EvaluatorId] {
        &self.evaluators
    }

    pub fn dimensions(&self) -> &[DimensionBlock] {
        &self.dimensions
    }

    /// Panel size `n`.
    pub fn panel_size(&self) -> usize {
        self.evaluators.len()
    }

    /// Model count `Q`.
    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn model_index(&self, id: &ModelId) -> Result<usize, TableError> {
        self.models.iter().position(|m| m == id).ok_or_else(|| TableError::UnknownModel(id.clone()))
    }

    pub fn evaluator_index(&self, id: &EvaluatorId) -> Result<usize, TableError> {
        self.evaluators.iter().position(|e| e == id).ok_or_else(|| TableError::UnknownEvaluator(id.clone()))
    }

    pub fn dimension(&self, id: &DimensionId) -> Result<&DimensionBlock, TableError> {
        self.dimensions.iter().find(|d| &d.dimension_id == id).ok_or_else(|| TableError::UnknownDimension(id.clone()))
    }

    fn locate(&self, qa: &QaId) -> Result<(usize, usize), TableError> {
        for (j, d) in self.dimensions.iter().enumerate() {
            if let Some(k) = d.questions.iter().position(|q| &q.qa_id == qa) {
                return Ok((j, k));
            }
        }
        Err(TableError::UnknownQuestion(qa.clone()))
    }

    pub fn question(&self, qa: &QaId) -> Result<(&DimensionId, &QuestionBlock), TableError> {
        let (j, k) = self.locate(qa)?;
        let d = &self.dimensions[j];
        Ok((&d.dimension_id, &d.questions[k]))
    }

    pub fn set(
        &mut self,
        qa: &QaId,
        evaluator: &EvaluatorId,
        model: &ModelId,
        grade: Option<u32>,
    ) -> Result<(), TableError> {
        let (j, k) = self.locate(qa)?;
        let i = self.evaluator_index(evaluator)?;
        let q = self.model_index(model)?;
        self.set_at(j, k, i, q, grade)
    }

    /// Index-level setter; panics on out-of-range indices.
    pub fn set_at(&mut self, j: usize, k: usize, i: usize, q: usize, grade: Option<u32>) -> Result<(), TableError> {
        let block = &mut self.dimensions[j].questions[k];
        if let Some(g) = grade {
            if g > block.max_grade {
                return Err(TableError::AboveMaximum { qa: block.qa_id.clone(), grade: g, max: block.max_grade });
            }
        }
        let width = block.models;
        block.cells[i * width + q] = grade;
        Ok(())
    }

    pub fn grade_count(&self) -> usize {
        self.dimensions.iter().flat_map(|d| &d.questions).map(|q| q.cells.iter().filter(|c| c.is_some()).count()).sum()
    }

    pub fn cell_count(&self) -> usize {
        self.dimensions.iter().map(|d| d.questions.len()).sum::<usize>() * self.panel_size() * self.model_count()
    }

    /// Cells without an effective grade.
    pub fn gaps(&self) -> Vec<CellRef> {
        let mut out = Vec::new();
        for d in &self.dimensions {
            for q in &d.questions {
                for (i, e) in self.evaluators.iter().enumerate() {
                    for (m, model) in self.models.iter().enumerate() {
                        if q.grade(i, m).is_none() {
                            out.push(CellRef {
                                dimension_id: d.dimension_id.clone(),
                                qa_id: q.qa_id.clone(),
                                evaluator_id: e.clone(),
                                model_id: model.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// CSV with columns `dimension,question,evaluator,model,grade,ts_k`.
    /// Gaps have an empty grade field.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dimension", "question", "evaluator", "model", "grade", "ts_k"]).expect("in-memory csv");
        for d in &self.dimensions {
            for q in &d.questions {
                for (i, e) in self.evaluators.iter().enumerate() {
                    for (m, model) in self.models.iter().enumerate() {
                        let grade = q.grade(i, m).map(|g| g.to_string()).unwrap_or_default();
                        w.write_record([
                            d.dimension_id.as_str(),
                            q.qa_id.as_str(),
                            e.as_str(),
                            model.as_str(),
                            &grade,
                            &q.max_grade.to_string(),
                        ])
                        .expect("in-memory csv");
                    }
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// Returns a copy with every grade and every `TS_k` multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        let mut out = self.clone();
        for d in &mut out.dimensions {
            for q in &mut d.questions {
                q.max_grade *= factor;
                for c in q.cells.iter_mut().flatten() {
                    *c *= factor;
                }
            }
        }
        out
    }
}

/// Builds the table from a campaign's sampled questions and the effective
/// ledger grades. Missing grades show up in [`GradeTable::gaps`].
pub fn build_grade_table(ledger: &GradeLedger, campaign: &Campaign) -> GradeTable {
    let mut table = GradeTable::new(campaign.id.clone(), campaign.model_ids(), campaign.panel.clone());
    let mut order: Vec<DimensionId> = Vec::new();
    let mut per_dim: HashMap<DimensionId, Vec<(QaId, u32)>> = HashMap::new();
    for s in &campaign.sampled {
        if !per_dim.contains_key(&s.dimension_id) {
            order.push(s.dimension_id.clone());
        }
        per_dim.entry(s.dimension_id.clone()).or_default().push((s.qa_id.clone(), s.max_grade));
    }
    for d in order {
        let qs = per_dim.remove(&d).unwrap_or_default();
        table.add_dimension(d, qs);
    }
    for r in ledger.effective_records() {
        if r.campaign_id != campaign.id {
            continue;
        }
        // Grades were validated on append; anything that no longer fits the
        // campaign shape is left out rather than failing the build.
        if let Ok(g) = u32::try_from(r.grade) {
            let _ = table.set(&r.qa_id, &r.evaluator_id, &r.model_id, Some(g));
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> GradeTable {
        let mut t =
            GradeTable::new("c".into(), vec!["m1".into(), "m2".into()], vec!["e1".into(), "e2".into(), "e3".into()]);
        t.add_dimension("d".into(), vec![("q1".into(), 2), ("q2".into(), 2)]);
        t
    }

    #[test]
    fn dense_table_counts_and_gaps() {
        let mut t = table();
        assert_eq!(t.cell_count(), 12);
        let evs = t.evaluators().to_vec();
        let ms = t.models().to_vec();
        for qa in ["q1", "q2"] {
            for e in &evs {
                for m in &ms {
                    t.set(&qa.into(), e, m, Some(1)).unwrap();
                }
            }
        }
        assert!(t.gaps().is_empty());
        t.set(&"q2".into(), &"e3".into(), &"m2".into(), None).unwrap();
        assert_eq!(t.gaps().len(), 1);
        assert_eq!(t.grade_count(), 11);
    }

    #[test]
    fn csv_mirrors_cells() {
        let mut t = table();
        t.set(&"q1".into(), &"e1".into(), &"m2".into(), Some(2)).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dimension,question,evaluator,model,grade,ts_k");
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[2], "d,q1,e1,m2,2,2");
        assert_eq!(lines[1], "d,q1,e1,m1,,2");
    }

    #[test]
    fn grades_above_ts_are_rejected() {
        let mut t = table();
        assert!(matches!(
            t.set(&"q1".into(), &"e1".into(), &"m1".into(), Some(3)),
            Err(TableError::AboveMaximum { .. })
        ));
    }
}
