//! The evolving bank of QA pairs: designer submissions, quality inspection,
//! iterative question plans and JSONL exchange.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DimensionId, PersonId, PlanId, QaId};
use crate::taxonomy::{Catalog, Difficulty};

pub const QA_SCHEMA: &str = "lalaeval.qa/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaStatus {
    Draft,
    UnderInspection,
    Active,
    Rejected,
    Retired,
}

impl QaStatus {
    pub const ALL: [QaStatus; 5] =
        [QaStatus::Draft, QaStatus::UnderInspection, QaStatus::Active, QaStatus::Rejected, QaStatus::Retired];

    /// The only legal edges of the pair lifecycle.
    pub fn can_transition_to(self, next: QaStatus) -> bool {
        use QaStatus::*;
        matches!(
            (self, next),
            (Draft, UnderInspection)
                | (UnderInspection, Active)
                | (UnderInspection, Rejected)
                | (Rejected, Draft)
                | (Active, Retired)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QaStatus::Draft => "draft",
            QaStatus::UnderInspection => "under_inspection",
            QaStatus::Active => "active",
            QaStatus::Rejected => "rejected",
            QaStatus::Retired => "retired",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.as_str() == s)
    }
}

impl fmt::Display for QaStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Factual,
    OpenEnded,
    Creative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionNote {
    pub inspector_id: PersonId,
    pub verdict: Verdict,
    pub notes: String,
    pub at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub id: QaId,
    pub question: String,
    pub standard_answer: String,
    #[serde(default)]
    pub grading_principle: String,
    pub dimension_id: DimensionId,
    pub difficulty: Difficulty,
    pub question_type: QuestionKind,
    #[serde(default)]
    pub source_citation: String,
    #[serde(default)]
    pub corpus_ref: Option<String>,
    pub designer_id: PersonId,
    pub status: QaStatus,
    /// `TS_k`, copied from the dimension's rubric.
    pub max_grade: u32,
    #[serde(default)]
    pub needs_reinspection: bool,
    #[serde(default)]
    pub inspections: Vec<InspectionNote>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// Designer input for a new pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaDraft {
    pub question: String,
    pub standard_answer: String,
    #[serde(default)]
    pub grading_principle: String,
    pub dimension_id: DimensionId,
    pub difficulty: Difficulty,
    pub question_type: QuestionKind,
    #[serde(default)]
    pub source_citation: String,
    #[serde(default)]
    pub corpus_ref: Option<String>,
    pub designer_id: PersonId,
}

/// Text edits applied when a rejected pair returns to draft.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRevision {
    pub question: Option<String>,
    pub standard_answer: Option<String>,
    pub grading_principle: Option<String>,
    pub source_citation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub dimension_id: DimensionId,
    pub difficulty: Difficulty,
}

impl Stratum {
    pub fn new(dimension_id: impl Into<DimensionId>, difficulty: Difficulty) -> Self {
        Self { dimension_id: dimension_id.into(), difficulty }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.dimension_id, self.difficulty)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quota {
    pub dimension_id: DimensionId,
    pub difficulty: Difficulty,
    pub count: u32,
}

impl Quota {
    pub fn stratum(&self) -> Stratum {
        Stratum { dimension_id: self.dimension_id.clone(), difficulty: self.difficulty }
    }
}

/// One immutable revision of a question plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPlan {
    pub id: PlanId,
    pub revision: u32,
    pub quotas: Vec<Quota>,
    /// Free-text inspection criteria agreed for this revision.
    #[serde(default)]
    pub criteria_checklist: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapEntry {
    pub target: u32,
    pub active_count: u32,
    pub deficit: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BankError {
    #[error("unknown dimension `{0}`")]
    UnknownDimension(DimensionId),
    #[error("dimension `{0}` has no rubric")]
    MissingRubric(DimensionId),
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("standard answer is empty")]
    EmptyAnswer,
    #[error("pair `{0}` has no source citation")]
    MissingCitation(QaId),
    #[error("unknown QA pair `{0}`")]
    UnknownQa(QaId),
    #[error("pair `{id}` cannot move from {from} to {to}")]
    InvalidTransition { id: QaId, from: QaStatus, to: QaStatus },
    #[error("inspector `{0}` designed this pair")]
    SelfInspection(PersonId),
    #[error("pair `{0}` is not flagged for re-inspection")]
    NotFlagged(QaId),
    #[error("unknown plan `{0}`")]
    UnknownPlan(PlanId),
}

#[derive(Debug, Error)]
pub enum BankImportError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct QaLine {
    schema: String,
    #[serde(flatten)]
    pair: QaPair,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bank {
    pairs: BTreeMap<QaId, QaPair>,
    plans: Vec<QuestionPlan>,
    next_seq: u64,
}

impl Bank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: &QaId) -> Option<&QaPair> {
        self.pairs.get(id)
    }

    pub fn pairs(&self) -> impl Iterator<Item = &QaPair> {
        self.pairs.values()
    }

    fn pair_mut(&mut self, id: &QaId) -> Result<&mut QaPair, BankError> {
        self.pairs.get_mut(id).ok_or_else(|| BankError::UnknownQa(id.clone()))
    }

    /// Stores a designer draft; the new pair starts in `draft`.
    pub fn submit(&mut self, draft: QaDraft, catalog: &Catalog, at: DateTime<Utc>) -> Result<QaId, BankError> {
        if catalog.dimension(&draft.dimension_id).is_none() {
            return Err(BankError::UnknownDimension(draft.dimension_id));
        }
        let rubric = catalog
            .rubric_for(&draft.dimension_id)
            .ok_or_else(|| BankError::MissingRubric(draft.dimension_id.clone()))?;
        if draft.question.trim().is_empty() {
            return Err(BankError::EmptyQuestion);
        }
        if draft.standard_answer.trim().is_empty() {
            return Err(BankError::EmptyAnswer);
        }
        self.next_seq += 1;
        let id = QaId::new(format!("qa-{:05}", self.next_seq));
        let pair = QaPair {
            id: id.clone(),
            question: draft.question,
            standard_answer: draft.standard_answer,
            grading_principle: draft.grading_principle,
            dimension_id: draft.dimension_id,
            difficulty: draft.difficulty,
            question_type: draft.question_type,
            source_citation: draft.source_citation,
            corpus_ref: draft.corpus_ref,
            designer_id: draft.designer_id,
            status: QaStatus::Draft,
            max_grade: rubric.max_grade,
            needs_reinspection: false,
            inspections: Vec::new(),
            created_at: at,
            updated_at: at,
        };
        self.pairs.insert(id.clone(), pair);
        Ok(id)
    }

    fn transition(&mut self, id: &QaId, to: QaStatus, at: DateTime<Utc>) -> Result<&mut QaPair, BankError> {
        let pair = self.pair_mut(id)?;
        if !pair.status.can_transition_to(to) {
            return Err(BankError::InvalidTransition { id: id.clone(), from: pair.status, to });
        }
        pair.status = to;
        pair.updated_at = at;
        Ok(pair)
    }

    /// Hands a draft to inspection. Provenance is mandatory from here on.
    pub fn request_inspection(&mut self, id: &QaId, at: DateTime<Utc>) -> Result<(), BankError> {
        let pair = self.pair_mut(id)?;
        if pair.status == QaStatus::Draft && pair.source_citation.trim().is_empty() {
            return Err(BankError::MissingCitation(id.clone()));
        }
        self.transition(id, QaStatus::UnderInspection, at)?;
        Ok(())
    }

    /// Records an inspection verdict: pass activates, fail rejects and keeps
    /// the notes for the designer.
    pub fn inspect(
        &mut self,
        id: &QaId,
        verdict: Verdict,
        inspector: &PersonId,
        notes: impl Into<String>,
        at: DateTime<Utc>,
    ) -> Result<QaStatus, BankError> {
        let pair = self.pair_mut(id)?;
        let to = match verdict {
            Verdict::Pass => QaStatus::Active,
            Verdict::Fail => QaStatus::Rejected,
        };
        if !pair.status.can_transition_to(to) || pair.status != QaStatus::UnderInspection {
            return Err(BankError::InvalidTransition { id: id.clone(), from: pair.status, to });
        }
        if &pair.designer_id == inspector {
            return Err(BankError::SelfInspection(inspector.clone()));
        }
        let pair = self.transition(id, to, at)?;
        pair.inspections.push(InspectionNote { inspector_id: inspector.clone(), verdict, notes: notes.into(), at });
        Ok(to)
    }

    /// Sends a rejected pair back to draft with the designer's edits.
    pub fn revise(&mut self, id: &QaId, edits: QaRevision, at: DateTime<Utc>) -> Result<(), BankError> {
        if let Some(q) = &edits.question {
            if q.trim().is_empty() {
                return Err(BankError::EmptyQuestion);
            }
        }
        if let Some(a) = &edits.standard_answer {
            if a.trim().is_empty() {
                return Err(BankError::EmptyAnswer);
            }
        }
        let pair = self.transition(id, QaStatus::Draft, at)?;
        if let Some(q) = edits.question {
            pair.question = q;
        }
        if let Some(a) = edits.standard_answer {
            pair.standard_answer = a;
        }
        if let Some(p) = edits.grading_principle {
            pair.grading_principle = p;
        }
        if let Some(c) = edits.source_citation {
            pair.source_citation = c;
        }
        Ok(())
    }

    pub fn retire(&mut self, id: &QaId, at: DateTime<Utc>) -> Result<(), BankError> {
        self.transition(id, QaStatus::Retired, at).map(|_| ())
    }

    /// Re-derives `TS_k` from the current rubrics. Pairs whose top grade
    /// changed are updated and flagged; the flagged ids are returned.
    pub fn sync_rubrics(&mut self, catalog: &Catalog, at: DateTime<Utc>) -> Vec<QaId> {
        let mut flagged = Vec::new();
        for pair in self.pairs.values_mut() {
            let Some(rubric) = catalog.rubric_for(&pair.dimension_id) else { continue };
            if rubric.max_grade != pair.max_grade {
                pair.max_grade = rubric.max_grade;
                if pair.status == QaStatus::Active {
                    pair.needs_reinspection = true;
                    flagged.push(pair.id.clone());
                }
                pair.updated_at = at;
            }
        }
        flagged
    }

    /// Clears the re-inspection flag after an inspector re-approves the pair.
    pub fn confirm_reinspection(
        &mut self,
        id: &QaId,
        inspector: &PersonId,
        notes: impl Into<String>,
        at: DateTime<Utc>,
    ) -> Result<(), BankError> {
        let pair = self.pair_mut(id)?;
        if !pair.needs_reinspection {
            return Err(BankError::NotFlagged(id.clone()));
        }
        if &pair.designer_id == inspector {
            return Err(BankError::SelfInspection(inspector.clone()));
        }
        pair.needs_reinspection = false;
        pair.updated_at = at;
        pair.inspections.push(InspectionNote {
            inspector_id: inspector.clone(),
            verdict: Verdict::Pass,
            notes: notes.into(),
            at,
        });
        Ok(())
    }

    /// Active pairs eligible for sampling in a stratum, ordered by id.
    pub fn sampleable(&self, stratum: &Stratum) -> Vec<&QaPair> {
        self.pairs
            .values()
            .filter(|p| {
                p.status == QaStatus::Active
                    && !p.needs_reinspection
                    && p.dimension_id == stratum.dimension_id
                    && p.difficulty == stratum.difficulty
            })
            .collect()
    }

    /// Appends a plan revision. Earlier revisions stay untouched.
    pub fn add_plan_revision(
        &mut self,
        id: PlanId,
        quotas: Vec<Quota>,
        criteria_checklist: Vec<String>,
        catalog: &Catalog,
    ) -> Result<u32, BankError> {
        for q in &quotas {
            if catalog.dimension(&q.dimension_id).is_none() {
                return Err(BankError::UnknownDimension(q.dimension_id.clone()));
            }
        }
        let revision = self.plans.iter().filter(|p| p.id == id).map(|p| p.revision).max().unwrap_or(0) + 1;
        self.plans.push(QuestionPlan { id, revision, quotas, criteria_checklist });
        Ok(revision)
    }

    pub fn plans(&self) -> &[QuestionPlan] {
        &self.plans
    }

    pub fn set_plans(&mut self, plans: Vec<QuestionPlan>) {
        self.plans = plans;
    }

    pub fn latest_plan(&self, id: &PlanId) -> Result<&QuestionPlan, BankError> {
        self.plans
            .iter()
            .filter(|p| &p.id == id)
            .max_by_key(|p| p.revision)
            .ok_or_else(|| BankError::UnknownPlan(id.clone()))
    }

    /// Per-stratum target, active count and non-negative deficit.
    pub fn plan_gap_report(&self, plan: &QuestionPlan) -> BTreeMap<Stratum, GapEntry> {
        let mut out: BTreeMap<Stratum, GapEntry> = BTreeMap::new();
        for q in &plan.quotas {
            out.entry(q.stratum()).or_insert(GapEntry { target: 0, active_count: 0, deficit: 0 }).target += q.count;
        }
        for (stratum, entry) in out.iter_mut() {
            entry.active_count = self
                .pairs
                .values()
                .filter(|p| {
                    p.status == QaStatus::Active && &Stratum::new(p.dimension_id.clone(), p.difficulty) == stratum
                })
                .count() as u32;
            entry.deficit = entry.target.saturating_sub(entry.active_count);
        }
        out
    }

    /// One pair per line, restricted to the given statuses (all if empty).
    pub fn export_jsonl(&self, filter: &[QaStatus]) -> String {
        let mut out = String::new();
        for pair in self.pairs.values() {
            if !filter.is_empty() && !filter.contains(&pair.status) {
                continue;
            }
            let line = QaLine { schema: QA_SCHEMA.to_owned(), pair: pair.clone() };
            out.push_str(&serde_json::to_string(&line).expect("qa pairs serialize"));
            out.push('\n');
        }
        out
    }

    pub fn import_jsonl(reader: impl BufRead) -> Result<Bank, BankImportError> {
        let mut bank = Bank::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let violation = |message: String| BankImportError::SchemaViolation { line: line_no, message };
            let parsed: QaLine = serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
            if parsed.schema != QA_SCHEMA {
                return Err(violation(format!("unsupported schema `{}`", parsed.schema)));
            }
            let pair = parsed.pair;
            if pair.question.trim().is_empty() || pair.standard_answer.trim().is_empty() {
                return Err(violation("empty question or standard answer".into()));
            }
            if pair.status != QaStatus::Draft && pair.source_citation.trim().is_empty() {
                return Err(violation("source_citation required past draft".into()));
            }
            if bank.pairs.contains_key(&pair.id) {
                return Err(violation(format!("duplicate id `{}`", pair.id)));
            }
            if let Some(seq) = pair.id.as_str().strip_prefix("qa-").and_then(|s| s.parse::<u64>().ok()) {
                bank.next_seq = bank.next_seq.max(seq);
            }
            bank.pairs.insert(pair.id.clone(), pair);
        }
        Ok(bank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn now() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn draft(dim: &str) -> QaDraft {
        QaDraft {
            question: "How many hours are there in a day?".into(),
            standard_answer: "24 hours.".into(),
            grading_principle: String::new(),
            dimension_id: dim.into(),
            difficulty: Difficulty::Simple,
            question_type: QuestionKind::Factual,
            source_citation: "Common knowledge".into(),
            corpus_ref: None,
            designer_id: "designer-1".into(),
        }
    }

    fn activate(bank: &mut Bank, catalog: &Catalog, d: QaDraft) -> QaId {
        let id = bank.submit(d, catalog, now()).unwrap();
        bank.request_inspection(&id, now()).unwrap();
        bank.inspect(&id, Verdict::Pass, &"inspector".into(), "", now()).unwrap();
        id
    }

    #[test]
    fn submit_stores_draft_with_rubric_top_grade() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let id = bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        let pair = bank.get(&id).unwrap();
        assert_eq!(pair.status, QaStatus::Draft);
        assert_eq!(pair.max_grade, 2);
        assert_eq!(pair.designer_id.as_str(), "designer-1");
    }

    #[test]
    fn submit_rejects_empty_answer_and_unknown_dimension() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let mut d = draft("gen-factuality");
        d.standard_answer = " ".into();
        assert_eq!(bank.submit(d, &catalog, now()), Err(BankError::EmptyAnswer));
        assert_eq!(
            bank.submit(draft("deleted-dimension"), &catalog, now()),
            Err(BankError::UnknownDimension("deleted-dimension".into()))
        );
        let mut d = draft("gen-factuality");
        d.question.clear();
        assert_eq!(bank.submit(d, &catalog, now()), Err(BankError::EmptyQuestion));
    }

    #[test]
    fn inspection_verdicts() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let a = bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        assert!(matches!(
            bank.inspect(&a, Verdict::Pass, &"inspector".into(), "", now()),
            Err(BankError::InvalidTransition { from: QaStatus::Draft, .. })
        ));
        bank.request_inspection(&a, now()).unwrap();
        assert_eq!(
            bank.inspect(&a, Verdict::Pass, &"designer-1".into(), "", now()),
            Err(BankError::SelfInspection("designer-1".into()))
        );
        assert_eq!(bank.inspect(&a, Verdict::Pass, &"inspector".into(), "", now()), Ok(QaStatus::Active));

        let b = bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        bank.request_inspection(&b, now()).unwrap();
        assert_eq!(
            bank.inspect(&b, Verdict::Fail, &"inspector".into(), "answer lacks a source", now()),
            Ok(QaStatus::Rejected)
        );
        assert_eq!(bank.get(&b).unwrap().inspections[0].notes, "answer lacks a source");
        assert!(matches!(
            bank.inspect(&a, Verdict::Pass, &"inspector".into(), "", now()),
            Err(BankError::InvalidTransition { from: QaStatus::Active, .. })
        ));
    }

    #[test]
    fn citation_required_before_inspection() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let mut d = draft("gen-factuality");
        d.source_citation.clear();
        let id = bank.submit(d, &catalog, now()).unwrap();
        assert_eq!(bank.request_inspection(&id, now()), Err(BankError::MissingCitation(id)));
    }

    #[test]
    fn rejected_goes_back_through_draft() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let id = bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        bank.request_inspection(&id, now()).unwrap();
        bank.inspect(&id, Verdict::Fail, &"inspector".into(), "fix", now()).unwrap();
        let edits = QaRevision { standard_answer: Some("Twenty-four hours.".into()), ..Default::default() };
        bank.revise(&id, edits, now()).unwrap();
        assert_eq!(bank.get(&id).unwrap().status, QaStatus::Draft);
        assert_eq!(bank.get(&id).unwrap().standard_answer, "Twenty-four hours.");
    }

    #[test]
    fn gap_report_clamps_and_counts_active_only() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        for _ in 0..7 {
            activate(&mut bank, &catalog, draft("gen-factuality"));
        }
        bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        let plan = |count| QuestionPlan {
            id: "p".into(),
            revision: 1,
            quotas: vec![Quota { dimension_id: "gen-factuality".into(), difficulty: Difficulty::Simple, count }],
            criteria_checklist: vec![],
        };
        let s = Stratum::new("gen-factuality", Difficulty::Simple);
        assert_eq!(bank.plan_gap_report(&plan(10))[&s], GapEntry { target: 10, active_count: 7, deficit: 3 });
        assert_eq!(bank.plan_gap_report(&plan(0))[&s].deficit, 0);
        for _ in 0..5 {
            activate(&mut bank, &catalog, draft("gen-factuality"));
        }
        assert_eq!(bank.plan_gap_report(&plan(10))[&s], GapEntry { target: 10, active_count: 12, deficit: 0 });
    }

    #[test]
    fn plan_revisions_append() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let q = vec![Quota { dimension_id: "gen-factuality".into(), difficulty: Difficulty::Simple, count: 3 }];
        assert_eq!(bank.add_plan_revision("p".into(), q.clone(), vec![], &catalog), Ok(1));
        assert_eq!(bank.add_plan_revision("p".into(), vec![], vec!["cites a source".into()], &catalog), Ok(2));
        assert_eq!(bank.plans()[0].quotas, q);
        assert_eq!(bank.latest_plan(&"p".into()).unwrap().revision, 2);
        let bad = vec![Quota { dimension_id: "nope".into(), difficulty: Difficulty::Simple, count: 1 }];
        assert!(bank.add_plan_revision("p".into(), bad, vec![], &catalog).is_err());
    }

    #[test]
    fn export_import_round_trip_with_filter() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        for _ in 0..3 {
            activate(&mut bank, &catalog, draft("gen-factuality"));
        }
        bank.submit(draft("gen-factuality"), &catalog, now()).unwrap();
        let text = bank.export_jsonl(&[QaStatus::Active]);
        assert_eq!(text.lines().count(), 3);
        let back = Bank::import_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 3);
        for p in back.pairs() {
            assert_eq!(bank.get(&p.id), Some(p));
        }
        assert_eq!(back.export_jsonl(&[]), text);
        assert_eq!(Bank::new().export_jsonl(&[]), "");
    }

    #[test]
    fn import_reports_offending_line() {
        let catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        activate(&mut bank, &catalog, draft("gen-factuality"));
        let good = bank.export_jsonl(&[]);
        let text = format!("{good}{{not json}}\n");
        match Bank::import_jsonl(text.as_bytes()) {
            Err(BankImportError::SchemaViolation { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rubric_edit_flags_active_pairs() {
        let mut catalog = fixtures::logistics_catalog();
        let mut bank = Bank::new();
        let id = activate(&mut bank, &catalog, draft("gen-factuality"));
        let rubric_id = catalog.dimension(&"gen-factuality".into()).unwrap().rubric_id.clone();
        catalog.rubrics.revise(&rubric_id, (0..=3).map(|g| crate::grading::ScaleLevel::new(g, "x")).collect()).unwrap();
        assert_eq!(bank.sync_rubrics(&catalog, now()), vec![id.clone()]);
        let pair = bank.get(&id).unwrap();
        assert_eq!(pair.max_grade, 3);
        assert!(bank.sampleable(&Stratum::new("gen-factuality", Difficulty::Simple)).is_empty());
        bank.confirm_reinspection(&id, &"inspector".into(), "ok under new scale", now()).unwrap();
        assert_eq!(bank.sampleable(&Stratum::new("gen-factuality", Difficulty::Simple)).len(), 1);
    }
}
