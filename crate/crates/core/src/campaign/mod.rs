//! Evaluation rounds: stratified sampling, response ingestion, single-blind
//! position randomization and evaluator task construction.

mod blinding;
mod fetch;
mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grading::{GradeRecord, IssuedTasks, ScaleLevel};
use crate::ids::{CampaignId, DimensionId, EvaluatorId, ModelId, QaId, RubricId};
use crate::qa_bank::{Bank, Quota, Stratum};
use crate::taxonomy::{Catalog, Difficulty};

pub use blinding::{permutation_for, BlindedTask, PositionedResponse, RawGrade};
pub use fetch::{render_prompt, FetchError, FetchOrCampaign, ResponseFetcher};
pub use sampling::{sample_questions, seeded_rng};

pub const CAMPAIGN_SCHEMA: &str = "lalaeval.campaign/1";
pub const RESPONSES_SCHEMA: &str = "lalaeval.responses/1";
pub const MIN_PANEL: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignStatus {
    Draft,
    Sampled,
    ResponsesIngested,
    TasksIssued,
    Grading,
    Closed,
}

impl fmt::Display for CampaignStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CampaignStatus::Draft => "draft",
            CampaignStatus::Sampled => "sampled",
            CampaignStatus::ResponsesIngested => "responses_ingested",
            CampaignStatus::TasksIssued => "tasks_issued",
            CampaignStatus::Grading => "grading",
            CampaignStatus::Closed => "closed",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelAccess {
    OfflineImport,
    HttpEndpoint {
        base_uri: String,
        auth_header_name: Option<String>,
        /// `{question}` is replaced with the question text.
        prompt_template: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelUnderTest {
    pub id: ModelId,
    pub display_name: String,
    #[serde(default = "offline")]
    pub access: ModelAccess,
    #[serde(default)]
    pub capabilities_note: String,
}

fn offline() -> ModelAccess {
    ModelAccess::OfflineImport
}

impl ModelUnderTest {
    pub fn offline(id: impl Into<ModelId>, display_name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
            access: ModelAccess::OfflineImport,
            capabilities_note: String::new(),
        }
    }
}

/// Snapshot of a QA pair taken at sampling time, so later bank edits do not
/// change what evaluators of this round see.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledQuestion {
    pub qa_id: QaId,
    pub dimension_id: DimensionId,
    pub difficulty: Difficulty,
    pub question: String,
    pub standard_answer: String,
    pub grading_principle: String,
    pub rubric_id: RubricId,
    pub rubric_version: u32,
    pub rubric_scale: Vec<ScaleLevel>,
    #[serde(default)]
    pub timeliness_note: String,
    /// `TS_k`.
    pub max_grade: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub campaign_id: CampaignId,
    pub qa_id: QaId,
    pub model_id: ModelId,
    pub response_text: String,
    pub captured_at: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct ResponseLine {
    schema: String,
    #[serde(flatten)]
    record: ResponseRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CampaignError {
    #[error("panel has {0} evaluators; at least {MIN_PANEL} are required")]
    PanelTooSmall(usize),
    #[error("a campaign needs at least two models, got {0}")]
    TooFewModels(usize),
    #[error("model `{0}` is listed twice")]
    DuplicateModel(ModelId),
    #[error("evaluator `{0}` is listed twice")]
    DuplicateEvaluator(EvaluatorId),
    #[error("campaign is {actual}; operation needs one of {expected:?}")]
    WrongStatus { expected: Vec<CampaignStatus>, actual: CampaignStatus },
    #[error("stratum {stratum} has {have} active pairs, quota needs {need}")]
    InsufficientStock { stratum: Stratum, have: usize, need: usize },
    #[error("question `{0}` is not part of this campaign")]
    UnknownQaId(QaId),
    #[error("model `{0}` is not part of this campaign")]
    UnknownModel(ModelId),
    #[error("evaluator `{0}` is not on the panel")]
    UnknownEvaluator(EvaluatorId),
    #[error("campaign `{0}` does not match this campaign")]
    WrongCampaign(CampaignId),
    #[error("a response for (`{qa}`, `{model}`) already exists")]
    DuplicateResponse { qa: QaId, model: ModelId },
    #[error("{} (question, model) responses are missing", missing.len())]
    IncompleteMatrix { missing: Vec<(QaId, ModelId)> },
    #[error("position {position} is outside 1..={models} for question `{qa}`")]
    UnknownPosition { qa: QaId, position: usize, models: usize },
    #[error("dimension `{0}` has no rubric")]
    MissingRubric(DimensionId),
    #[error("responses line {line}: {message}")]
    ResponseSchema { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub schema: String,
    pub id: CampaignId,
    pub plan: Vec<Quota>,
    pub models: Vec<ModelUnderTest>,
    pub panel: Vec<EvaluatorId>,
    pub seed: u64,
    #[serde(default)]
    pub sampled: Vec<SampledQuestion>,
    /// Per question, the model shown at each position (index 0 is position 1).
    #[serde(default)]
    pub blinding: Option<BTreeMap<QaId, Vec<ModelId>>>,
    pub status: CampaignStatus,
    #[serde(skip)]
    responses: BTreeMap<(QaId, ModelId), ResponseRecord>,
}

impl Campaign {
    pub fn new(
        id: impl Into<CampaignId>,
        plan: Vec<Quota>,
        models: Vec<ModelUnderTest>,
        panel: Vec<EvaluatorId>,
        seed: u64,
    ) -> Result<Self, CampaignError> {
        if panel.len() < MIN_PANEL {
            return Err(CampaignError::PanelTooSmall(panel.len()));
        }
        if models.len() < 2 {
            return Err(CampaignError::TooFewModels(models.len()));
        }
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.id == m.id) {
                return Err(CampaignError::DuplicateModel(m.id.clone()));
            }
        }
        for (i, e) in panel.iter().enumerate() {
            if panel[..i].contains(e) {
                return Err(CampaignError::DuplicateEvaluator(e.clone()));
            }
        }
        Ok(Self {
            schema: CAMPAIGN_SCHEMA.to_owned(),
            id: id.into(),
            plan,
            models,
            panel,
            seed,
            sampled: Vec::new(),
            blinding: None,
            status: CampaignStatus::Draft,
            responses: BTreeMap::new(),
        })
    }

    pub fn model_ids(&self) -> Vec<ModelId> {
        self.models.iter().map(|m| m.id.clone()).collect()
    }

    pub fn sampled_qa_ids(&self) -> Vec<QaId> {
        self.sampled.iter().map(|s| s.qa_id.clone()).collect()
    }

    pub fn question(&self, qa: &QaId) -> Option<&SampledQuestion> {
        self.sampled.iter().find(|s| &s.qa_id == qa)
    }

    fn require(&self, expected: &[CampaignStatus]) -> Result<(), CampaignError> {
        if expected.contains(&self.status) {
            Ok(())
        } else {
            Err(CampaignError::WrongStatus { expected: expected.to_vec(), actual: self.status })
        }
    }

    /// Draws the question set. Re-sampling is allowed until responses arrive.
    pub fn sample(&mut self, bank: &Bank, catalog: &Catalog) -> Result<Vec<QaId>, CampaignError> {
        self.require(&[CampaignStatus::Draft, CampaignStatus::Sampled])?;
        let ids = sample_questions(bank, &self.plan, self.seed)?;
        let mut sampled = Vec::with_capacity(ids.len());
        for id in &ids {
            let pair = bank.get(id).expect("sampled ids come from the bank");
            let rubric = catalog
                .rubric_for(&pair.dimension_id)
                .ok_or_else(|| CampaignError::MissingRubric(pair.dimension_id.clone()))?;
            sampled.push(SampledQuestion {
                qa_id: pair.id.clone(),
                dimension_id: pair.dimension_id.clone(),
                difficulty: pair.difficulty,
                question: pair.question.clone(),
                standard_answer: pair.standard_answer.clone(),
                grading_principle: pair.grading_principle.clone(),
                rubric_id: rubric.id.clone(),
                rubric_version: rubric.version,
                rubric_scale: rubric.scale.clone(),
                timeliness_note: rubric.timeliness_note.clone(),
                max_grade: rubric.max_grade,
            });
        }
        self.sampled = sampled;
        self.responses.clear();
        self.blinding = None;
        self.status = CampaignStatus::Sampled;
        Ok(ids)
    }

    pub fn responses(&self) -> impl Iterator<Item = &ResponseRecord> {
        self.responses.values()
    }

    pub fn response(&self, qa: &QaId, model: &ModelId) -> Option<&ResponseRecord> {
        self.responses.get(&(qa.clone(), model.clone()))
    }

    /// Sampled `(question, model)` pairs that still lack a response.
    pub fn missing_responses(&self) -> Vec<(QaId, ModelId)> {
        let mut out = Vec::new();
        for s in &self.sampled {
            for m in &self.models {
                if !self.responses.contains_key(&(s.qa_id.clone(), m.id.clone())) {
                    out.push((s.qa_id.clone(), m.id.clone()));
                }
            }
        }
        out
    }

    /// Commits a batch of responses atomically: either every row is valid and
    /// stored, or none is. Returns the number stored when the matrix is now
    /// complete; otherwise the rows stay committed and the remaining gaps are
    /// reported as [`CampaignError::IncompleteMatrix`].
    pub fn ingest_responses(&mut self, rows: Vec<ResponseRecord>) -> Result<usize, CampaignError> {
        self.require(&[CampaignStatus::Sampled])?;
        let mut batch: BTreeMap<(QaId, ModelId), ResponseRecord> = BTreeMap::new();
        for row in rows {
            if row.campaign_id != self.id {
                return Err(CampaignError::WrongCampaign(row.campaign_id));
            }
            if self.question(&row.qa_id).is_none() {
                return Err(CampaignError::UnknownQaId(row.qa_id));
            }
            if !self.models.iter().any(|m| m.id == row.model_id) {
                return Err(CampaignError::UnknownModel(row.model_id));
            }
            let key = (row.qa_id.clone(), row.model_id.clone());
            if self.responses.contains_key(&key) || batch.contains_key(&key) {
                return Err(CampaignError::DuplicateResponse { qa: key.0, model: key.1 });
            }
            batch.insert(key, row);
        }
        let count = batch.len();
        self.responses.extend(batch);
        let missing = self.missing_responses();
        if !missing.is_empty() {
            return Err(CampaignError::IncompleteMatrix { missing });
        }
        self.status = CampaignStatus::ResponsesIngested;
        Ok(count)
    }

    /// Restores responses from storage without status checks.
    pub fn restore_responses(&mut self, rows: Vec<ResponseRecord>) {
        for row in rows {
            self.responses.insert((row.qa_id.clone(), row.model_id.clone()), row);
        }
    }

    pub fn responses_to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.responses.values() {
            let line = ResponseLine { schema: RESPONSES_SCHEMA.to_owned(), record: r.clone() };
            out.push_str(&serde_json::to_string(&line).expect("responses serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_responses_jsonl(reader: impl BufRead) -> Result<Vec<ResponseRecord>, CampaignError> {
        let mut out = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let violation = |message: String| CampaignError::ResponseSchema { line: line_no, message };
            let line = line.map_err(|e| violation(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ResponseLine = serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
            if parsed.schema != RESPONSES_SCHEMA {
                return Err(violation(format!("unsupported schema `{}`", parsed.schema)));
            }
            out.push(parsed.record);
        }
        Ok(out)
    }

    /// Draws the per-question position layout. Deterministic in
    /// `(seed, qa_id)`, so calling it again reproduces the same map.
    pub fn blind(&mut self) -> Result<&BTreeMap<QaId, Vec<ModelId>>, CampaignError> {
        self.require(&[CampaignStatus::ResponsesIngested])?;
        let models = self.model_ids();
        let map =
            self.sampled.iter().map(|s| (s.qa_id.clone(), permutation_for(self.seed, &s.qa_id, &models))).collect();
        Ok(self.blinding.insert(map))
    }

    /// Evaluator-facing tasks, one per evaluator and question.
    pub fn build_tasks(&self) -> Result<Vec<BlindedTask>, CampaignError> {
        let map = self.blinding.as_ref().ok_or(CampaignError::WrongStatus {
            expected: vec![CampaignStatus::ResponsesIngested],
            actual: self.status,
        })?;
        let mut tasks = Vec::with_capacity(self.panel.len() * self.sampled.len());
        for evaluator in &self.panel {
            for s in &self.sampled {
                tasks.push(blinding::task_for(self, map, s, evaluator));
            }
        }
        Ok(tasks)
    }

    pub fn tasks_for(&self, evaluator: &EvaluatorId) -> Result<Vec<BlindedTask>, CampaignError> {
        if !self.panel.contains(evaluator) {
            return Err(CampaignError::UnknownEvaluator(evaluator.clone()));
        }
        Ok(self.build_tasks()?.into_iter().filter(|t| &t.evaluator_id == evaluator).collect())
    }

    /// Issues tasks: an atomic move to `tasks_issued`.
    pub fn issue(&mut self) -> Result<Vec<BlindedTask>, CampaignError> {
        self.require(&[CampaignStatus::ResponsesIngested])?;
        let tasks = self.build_tasks()?;
        self.status = CampaignStatus::TasksIssued;
        Ok(tasks)
    }

    pub fn begin_grading(&mut self) -> Result<(), CampaignError> {
        self.require(&[CampaignStatus::TasksIssued, CampaignStatus::Grading])?;
        self.status = CampaignStatus::Grading;
        Ok(())
    }

    pub fn close(&mut self) -> Result<(), CampaignError> {
        self.require(&[CampaignStatus::TasksIssued, CampaignStatus::Grading])?;
        self.status = CampaignStatus::Closed;
        Ok(())
    }

    /// Maps positional grades back to models.
    pub fn unblind(&self, raw: &[RawGrade]) -> Result<Vec<GradeRecord>, CampaignError> {
        self.require(&[CampaignStatus::Grading, CampaignStatus::Closed])?;
        blinding::unblind(self, raw)
    }

    /// Model shown at a 1-based position.
    pub fn model_at(&self, qa: &QaId, position: usize) -> Result<&ModelId, CampaignError> {
        let map = self.blinding.as_ref().ok_or(CampaignError::WrongStatus {
            expected: vec![CampaignStatus::TasksIssued, CampaignStatus::Grading],
            actual: self.status,
        })?;
        let layout = map.get(qa).ok_or_else(|| CampaignError::UnknownQaId(qa.clone()))?;
        position.checked_sub(1).and_then(|p| layout.get(p)).ok_or_else(|| CampaignError::UnknownPosition {
            qa: qa.clone(),
            position,
            models: layout.len(),
        })
    }

    /// Whether grades from `evaluator` on `qa` are currently accepted.
    pub fn accepts_grades_from(&self, qa: &QaId, evaluator: &EvaluatorId) -> bool {
        matches!(self.status, CampaignStatus::TasksIssued | CampaignStatus::Grading)
            && self.panel.contains(evaluator)
            && self.question(qa).is_some()
    }
}

impl IssuedTasks for Campaign {
    fn is_issued(&self, campaign: &CampaignId, qa: &QaId, evaluator: &EvaluatorId) -> bool {
        campaign == &self.id && self.accepts_grades_from(qa, evaluator)
    }
}
