//! Helpers that drive the compiled `lalaeval` binary against a temp store.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{TimeZone, Utc};
use lalaeval_core::campaign::CampaignStatus;
use lalaeval_core::grading::GradeRecord;
use lalaeval_core::store::Store;

pub const BIN: &str = env!("CARGO_BIN_EXE_lalaeval");

pub fn lalaeval(store: &Path, args: &[&str]) -> Output {
    Command::new(BIN).env_remove("LALAEVAL_STORE").arg("--store").arg(store).args(args).output().expect("binary runs")
}

/// Runs and insists on exit 0; returns stdout.
pub fn ok(store: &Path, args: &[&str]) -> String {
    let out = lalaeval(store, args);
    assert!(
        out.status.success(),
        "lalaeval {args:?} exited {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub const QUOTAS: &str = r#"[
  {"dimension_id": "gen-factuality", "difficulty": "simple", "count": 1},
  {"dimension_id": "gen-semantic", "difficulty": "simple", "count": 2},
  {"dimension_id": "dom-legal", "difficulty": "simple", "count": 1},
  {"dimension_id": "dom-legal", "difficulty": "intermediate", "count": 1},
  {"dimension_id": "dom-creativity", "difficulty": "simple", "count": 1}
]"#;

pub const MODELS: &[(&str, &str)] = &[
    ("gpt-4", "GPT-4"),
    ("ernie-bot", "Ernie Bot"),
    ("pllm-alpha", "Logistics Alpha"),
    ("pllm-beta", "Logistics Beta"),
];

pub fn spec_json(id: &str, models: usize) -> String {
    let models: Vec<String> =
        MODELS[..models].iter().map(|(id, name)| format!(r#"{{"id": "{id}", "display_name": "{name}"}}"#)).collect();
    format!(
        r#"{{"id": "{id}", "quotas": {QUOTAS}, "models": [{}], "panel": ["e1", "e2", "e3"], "seed": 1}}"#,
        models.join(", ")
    )
}

/// A store with the built-in catalog and seed bank, and campaign `id`
/// created (not sampled).
pub fn init_store(dir: &Path, id: &str, models: usize) -> PathBuf {
    let store = dir.join("store");
    ok(&store, &["taxonomy", "import"]);
    ok(&store, &["bank", "import", "--builtin"]);
    let spec = dir.join(format!("{id}.json"));
    fs::write(&spec, spec_json(id, models)).unwrap();
    ok(&store, &["campaign", "create", "--spec", spec.to_str().unwrap()]);
    store
}

/// Responses JSONL for every missing (question, model) pair, with fixed
/// timestamps and text derived from the ids.
pub fn responses_file(dir: &Path, store: &Path, id: &str) -> PathBuf {
    let c = Store::open(store).unwrap().campaign(&id.into()).unwrap();
    let mut text = String::new();
    for (qa, model) in c.missing_responses() {
        let _ = writeln!(
            text,
            r#"{{"schema":"lalaeval.responses/1","campaign_id":"{id}","qa_id":"{qa}","model_id":"{model}","response_text":"answer {} to {qa}","captured_at":"2024-03-01T09:00:00Z"}}"#,
            model.as_str().len()
        );
    }
    let path = dir.join(format!("{id}-responses.jsonl"));
    fs::write(&path, text).unwrap();
    path
}

/// Sample, ingest, blind and issue.
pub fn issued_store(dir: &Path, id: &str, models: usize, seed: u64) -> PathBuf {
    let store = init_store(dir, id, models);
    let seed = seed.to_string();
    ok(&store, &["campaign", "sample", "--campaign", id, "--seed", &seed]);
    let rows = responses_file(dir, &store, id);
    ok(&store, &["campaign", "ingest", "--campaign", id, "--file", rows.to_str().unwrap()]);
    ok(&store, &["campaign", "blind", "--campaign", id]);
    ok(&store, &["campaign", "issue", "--campaign", id]);
    store
}

/// Writes a full grade matrix straight into the ledger; `grade` picks a
/// scale index from (question index, evaluator index, model index).
pub fn grade_everything(store: &Path, id: &str, grade: impl Fn(usize, usize, usize, &[u32]) -> u32) {
    let mut s = Store::open(store).unwrap();
    let mut c = s.campaign(&id.into()).unwrap();
    let catalog = s.catalog().unwrap();
    let mut ledger = s.ledger(&c.id).unwrap();
    for (k, q) in c.sampled.iter().enumerate() {
        let rubric = catalog.rubrics.version(&q.rubric_id, q.rubric_version).unwrap().clone();
        let scale = rubric.grades();
        for (i, e) in c.panel.iter().enumerate() {
            for (m, model) in c.models.iter().enumerate() {
                let record = GradeRecord {
                    campaign_id: c.id.clone(),
                    dimension_id: q.dimension_id.clone(),
                    qa_id: q.qa_id.clone(),
                    evaluator_id: e.clone(),
                    model_id: model.id.clone(),
                    grade: i64::from(grade(k, i, m, &scale)),
                    submitted_at: Utc.with_ymd_and_hms(2024, 3, 2, 9, 0, 0).unwrap(),
                    amended: false,
                    rubric_version: q.rubric_version,
                };
                ledger.append_grade(record, &rubric, &c).unwrap();
                s.append_ledger(&c.id, ledger.lines().last().unwrap()).unwrap();
            }
        }
    }
    if c.status == CampaignStatus::TasksIssued {
        c.begin_grading().unwrap();
        s.save_campaign(&c).unwrap();
    }
}

/// Every regular file under `root`, relative path to bytes.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}
