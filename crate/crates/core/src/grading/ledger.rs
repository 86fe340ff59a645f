use std::collections::HashMap;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::rubric::{validate_grade, Rubric, RubricError};
use crate::ids::{CampaignId, DimensionId, EvaluatorId, ModelId, QaId};

pub const GRADES_SCHEMA: &str = "lalaeval.grades/1";

/// One grade `AS_qki`: evaluator `i` grading model `q` on question `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub campaign_id: CampaignId,
    pub dimension_id: DimensionId,
    pub qa_id: QaId,
    pub evaluator_id: EvaluatorId,
    pub model_id: ModelId,
    pub grade: i64,
    pub submitted_at: DateTime<Utc>,
    #[serde(default)]
    pub amended: bool,
    #[serde(default = "default_rubric_version")]
    pub rubric_version: u32,
}

fn default_rubric_version() -> u32 {
    1
}

impl GradeRecord {
    pub fn key(&self) -> GradeKey {
        GradeKey {
            campaign_id: self.campaign_id.clone(),
            qa_id: self.qa_id.clone(),
            evaluator_id: self.evaluator_id.clone(),
            model_id: self.model_id.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradeKey {
    pub campaign_id: CampaignId,
    pub qa_id: QaId,
    pub evaluator_id: EvaluatorId,
    pub model_id: ModelId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum LedgerEntry {
    Grade(GradeRecord),
    /// Invalidates the grade at ledger position `target` without erasing it.
    Tombstone {
        target: u64,
        reason: String,
        at: DateTime<Utc>,
    },
}

/// Persisted form of an entry: position plus a hash chained over all
/// earlier lines, which makes edits anywhere in the file detectable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerLine {
    pub schema: String,
    pub seq: u64,
    pub chain: String,
    #[serde(flatten)]
    pub entry: LedgerEntry,
}

/// Lets the ledger ask whether a task was issued before accepting a grade.
pub trait IssuedTasks {
    fn is_issued(&self, campaign: &CampaignId, qa: &QaId, evaluator: &EvaluatorId) -> bool;
}

impl<F> IssuedTasks for F
where
    F: Fn(&CampaignId, &QaId, &EvaluatorId) -> bool,
{
    fn is_issued(&self, campaign: &CampaignId, qa: &QaId, evaluator: &EvaluatorId) -> bool {
        self(campaign, qa, evaluator)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("grade for {0:?} already recorded; set `amended` to supersede it")]
    DuplicateGrade(GradeKey),
    #[error("no task for question `{qa}` was issued to evaluator `{evaluator}`")]
    UnissuedTask { qa: QaId, evaluator: EvaluatorId },
    #[error(transparent)]
    GradeOutOfScale(#[from] RubricError),
    #[error("amendment for {0:?} has no original grade")]
    NothingToAmend(GradeKey),
    #[error("ledger position {0} does not hold a grade")]
    NotAGrade(u64),
}

#[derive(Debug, Error)]
pub enum LedgerLoadError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("line {line}: unsupported schema `{found}`")]
    SchemaVersionUnsupported { line: usize, found: String },
    #[error("line {line}: hash chain mismatch")]
    HashMismatch { line: usize },
    #[error("line {line}: {source}")]
    Replay { line: usize, source: LedgerError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

fn chain_hash(prev: &str, entry: &LedgerEntry) -> String {
    let body = serde_json::to_string(entry).expect("ledger entries serialize");
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(b"\n");
    h.update(body.as_bytes());
    hex::encode(h.finalize())
}

/// Append-only grade log. The effective grade for a key is the latest
/// non-tombstoned record; superseded records stay in the log.
#[derive(Clone, Debug, Default)]
pub struct GradeLedger {
    lines: Vec<LedgerLine>,
    effective: HashMap<GradeKey, u64>,
}

impl PartialEq for GradeLedger {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines
    }
}

impl GradeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[LedgerLine] {
        &self.lines
    }

    pub fn head(&self) -> &str {
        self.lines.last().map(|l| l.chain.as_str()).unwrap_or(GENESIS)
    }

    /// Validates and appends a grade, returning its ledger position.
    pub fn append_grade(
        &mut self,
        record: GradeRecord,
        rubric: &Rubric,
        issued: &impl IssuedTasks,
    ) -> Result<u64, LedgerError> {
        validate_grade(record.grade, rubric)?;
        if !issued.is_issued(&record.campaign_id, &record.qa_id, &record.evaluator_id) {
            return Err(LedgerError::UnissuedTask { qa: record.qa_id, evaluator: record.evaluator_id });
        }
        self.check_key(&record)?;
        Ok(self.push(LedgerEntry::Grade(record)))
    }

    fn check_key(&self, record: &GradeRecord) -> Result<(), LedgerError> {
        let key = record.key();
        match (self.effective.contains_key(&key), record.amended) {
            (true, false) => Err(LedgerError::DuplicateGrade(key)),
            (false, true) => Err(LedgerError::NothingToAmend(key)),
            _ => Ok(()),
        }
    }

    /// Marks the grade at `target` invalid. If it was the effective grade
    /// for its key, that cell becomes a gap.
    pub fn tombstone(&mut self, target: u64, reason: impl Into<String>, at: DateTime<Utc>) -> Result<u64, LedgerError> {
        self.grade_at(target).ok_or(LedgerError::NotAGrade(target))?;
        Ok(self.push(LedgerEntry::Tombstone { target, reason: reason.into(), at }))
    }

    fn push(&mut self, entry: LedgerEntry) -> u64 {
        let seq = self.lines.len() as u64;
        self.apply(seq, &entry);
        let chain = chain_hash(self.head(), &entry);
        self.lines.push(LedgerLine { schema: GRADES_SCHEMA.to_owned(), seq, chain, entry });
        seq
    }

    fn apply(&mut self, seq: u64, entry: &LedgerEntry) {
        match entry {
            LedgerEntry::Grade(r) => {
                self.effective.insert(r.key(), seq);
            }
            LedgerEntry::Tombstone { target, .. } => {
                if let Some(r) = self.grade_at(*target) {
                    let key = r.key();
                    if self.effective.get(&key) == Some(target) {
                        self.effective.remove(&key);
                    }
                }
            }
        }
    }

    pub fn grade_at(&self, seq: u64) -> Option<&GradeRecord> {
        match self.lines.get(seq as usize).map(|l| &l.entry) {
            Some(LedgerEntry::Grade(r)) => Some(r),
            _ => None,
        }
    }

    pub fn effective(&self, key: &GradeKey) -> Option<(u64, &GradeRecord)> {
        let seq = *self.effective.get(key)?;
        self.grade_at(seq).map(|r| (seq, r))
    }

    /// Effective grades in ledger order.
    pub fn effective_records(&self) -> Vec<&GradeRecord> {
        let mut seqs: Vec<u64> = self.effective.values().copied().collect();
        seqs.sort_unstable();
        seqs.into_iter().filter_map(|s| self.grade_at(s)).collect()
    }

    /// Every grade ever recorded for `key`, oldest first.
    pub fn history(&self, key: &GradeKey) -> Vec<&GradeRecord> {
        self.lines
            .iter()
            .filter_map(|l| match &l.entry {
                LedgerEntry::Grade(r) if &r.key() == key => Some(r),
                _ => None,
            })
            .collect()
    }

    /// Rebuilds a ledger from raw entries, re-checking key uniqueness and
    /// amendment rules but not rubric membership (already checked on append).
    pub fn replay(entries: impl IntoIterator<Item = LedgerEntry>) -> Result<Self, (usize, LedgerError)> {
        let mut ledger = Self::new();
        for (i, entry) in entries.into_iter().enumerate() {
            match &entry {
                LedgerEntry::Grade(r) => ledger.check_key(r).map_err(|e| (i, e))?,
                LedgerEntry::Tombstone { target, .. } => {
                    ledger.grade_at(*target).ok_or((i, LedgerError::NotAGrade(*target)))?;
                }
            }
            ledger.push(entry);
        }
        Ok(ledger)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&Self::encode_line(line));
        }
        out
    }

    pub fn encode_line(line: &LedgerLine) -> String {
        let mut s = serde_json::to_string(line).expect("ledger lines serialize");
        s.push('\n');
        s
    }

    /// Loads a persisted ledger, verifying schema and hash chain.
    ///
    /// A final line without a trailing newline is a torn write from a crash
    /// and is dropped; the second tuple element reports whether that happened.
    pub fn from_jsonl(reader: impl BufRead) -> Result<(Self, bool), LedgerLoadError> {
        let mut ledger = Self::new();
        let mut torn = false;
        let mut reader = reader;
        let mut buf = String::new();
        let mut line_no = 0usize;
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if !buf.ends_with('\n') {
                torn = true;
                break;
            }
            let text = buf.trim_end();
            if text.is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(text)
                .map_err(|e| LedgerLoadError::SchemaViolation { line: line_no, message: e.to_string() })?;
            let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or_default().to_owned();
            if schema != GRADES_SCHEMA {
                return Err(LedgerLoadError::SchemaVersionUnsupported { line: line_no, found: schema });
            }
            let line: LedgerLine = serde_json::from_value(value)
                .map_err(|e| LedgerLoadError::SchemaViolation { line: line_no, message: e.to_string() })?;
            if line.seq != ledger.lines.len() as u64 || line.chain != chain_hash(ledger.head(), &line.entry) {
                return Err(LedgerLoadError::HashMismatch { line: line_no });
            }
            match &line.entry {
                LedgerEntry::Grade(r) => {
                    ledger.check_key(r).map_err(|source| LedgerLoadError::Replay { line: line_no, source })?
                }
                LedgerEntry::Tombstone { target, .. } => {
                    if ledger.grade_at(*target).is_none() {
                        return Err(LedgerLoadError::Replay { line: line_no, source: LedgerError::NotAGrade(*target) });
                    }
                }
            }
            ledger.apply(line.seq, &line.entry);
            ledger.lines.push(line);
        }
        Ok((ledger, torn))
    }
}
