//! File-backed store.
//!
//! Layout under the root:
//!
//! ```text
//! manifest.json
//! catalog.json
//! bank.jsonl
//! plans.json
//! campaigns/<id>/campaign.json
//! campaigns/<id>/responses.jsonl
//! campaigns/<id>/grades.jsonl
//! ```
//!
//! Every file except the grade ledgers is replaced atomically (temp file,
//! fsync, rename) and its SHA-256 recorded in the manifest. Ledgers are
//! append-only and protected by their own hash chain instead.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::campaign::{Campaign, CampaignError, CAMPAIGN_SCHEMA};
use crate::grading::{build_grade_table, GradeLedger, GradeTable, LedgerLine, LedgerLoadError};
use crate::ids::CampaignId;
use crate::qa_bank::{Bank, BankImportError, QuestionPlan};
use crate::taxonomy::{Catalog, CatalogError};

pub const MANIFEST_SCHEMA: &str = "lalaeval.manifest/1";
pub const PLANS_SCHEMA: &str = "lalaeval.plans/1";

const MANIFEST: &str = "manifest.json";
const CATALOG: &str = "catalog.json";
const BANK: &str = "bank.jsonl";
const PLANS: &str = "plans.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no store at {0}; run an import first")]
    NotInitialized(PathBuf),
    #[error("store already exists at {0}")]
    AlreadyInitialized(PathBuf),
    #[error("`{file}` does not match the hash recorded in the manifest")]
    HashMismatch { file: String },
    #[error("`{file}` has unsupported schema `{found}`")]
    SchemaVersionUnsupported { file: String, found: String },
    #[error("`{file}`: {message}")]
    Malformed { file: String, message: String },
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(CampaignId),
    #[error("campaign `{0}` already exists")]
    CampaignExists(CampaignId),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Bank(#[from] BankImportError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error("`{file}`: {source}")]
    Ledger { file: String, source: Box<LedgerLoadError> },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    /// Relative path to hex SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct PlansFile {
    schema: String,
    plans: Vec<QuestionPlan>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

/// Writes `bytes` to `path` via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or_default()));
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    manifest: Manifest,
}

impl Store {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn exists(root: &Path) -> bool {
        root.join(MANIFEST).is_file()
    }

    /// Creates a new store holding `catalog` and an empty bank.
    pub fn init(root: impl Into<PathBuf>, catalog: &Catalog) -> Result<Self, StoreError> {
        let root = root.into();
        if Self::exists(&root) {
            return Err(StoreError::AlreadyInitialized(root));
        }
        let mut store =
            Self { root, manifest: Manifest { schema: MANIFEST_SCHEMA.to_owned(), files: BTreeMap::new() } };
        store.put(CATALOG, catalog.to_json().as_bytes())?;
        store.save_bank(&Bank::new())?;
        Ok(store)
    }

    /// Opens an existing store and checks every manifest hash.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let path = root.join(MANIFEST);
        if !path.is_file() {
            return Err(StoreError::NotInitialized(root));
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| StoreError::Malformed { file: MANIFEST.to_owned(), message: e.to_string() })?;
        if manifest.schema != MANIFEST_SCHEMA {
            return Err(StoreError::SchemaVersionUnsupported { file: MANIFEST.to_owned(), found: manifest.schema });
        }
        let store = Self { root, manifest };
        store.verify()?;
        Ok(store)
    }

    pub fn verify(&self) -> Result<(), StoreError> {
        for (file, hash) in &self.manifest.files {
            let path = self.root.join(file);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            if &sha256_hex(&bytes) != hash {
                return Err(StoreError::HashMismatch { file: file.clone() });
            }
        }
        Ok(())
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<(), StoreError> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.manifest.files.insert(rel.to_owned(), sha256_hex(bytes));
        let manifest = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&self.root.join(MANIFEST), &manifest)
    }

    /// Reads a manifest-tracked file, failing on hash mismatch.
    fn get(&self, rel: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.root.join(rel);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        match self.manifest.files.get(rel) {
            Some(h) if *h == sha256_hex(&bytes) => Ok(bytes),
            _ => Err(StoreError::HashMismatch { file: rel.to_owned() }),
        }
    }

    pub fn catalog(&self) -> Result<Catalog, StoreError> {
        let bytes = self.get(CATALOG)?;
        Ok(Catalog::from_json(&String::from_utf8_lossy(&bytes))?)
    }

    pub fn save_catalog(&mut self, catalog: &Catalog) -> Result<(), StoreError> {
        self.put(CATALOG, catalog.to_json().as_bytes())
    }

    /// The bank with its question plans attached.
    pub fn bank(&self) -> Result<Bank, StoreError> {
        let mut bank = Bank::import_jsonl(self.get(BANK)?.as_slice())?;
        if self.manifest.files.contains_key(PLANS) {
            let bytes = self.get(PLANS)?;
            let plans: PlansFile = serde_json::from_slice(&bytes)
                .map_err(|e| StoreError::Malformed { file: PLANS.to_owned(), message: e.to_string() })?;
            if plans.schema != PLANS_SCHEMA {
                return Err(StoreError::SchemaVersionUnsupported { file: PLANS.to_owned(), found: plans.schema });
            }
            bank.set_plans(plans.plans);
        }
        Ok(bank)
    }

    pub fn save_bank(&mut self, bank: &Bank) -> Result<(), StoreError> {
        self.put(BANK, bank.export_jsonl(&[]).as_bytes())?;
        let plans = PlansFile { schema: PLANS_SCHEMA.to_owned(), plans: bank.plans().to_vec() };
        self.put(PLANS, &serde_json::to_vec_pretty(&plans).expect("plans serialize"))
    }

    fn campaign_file(id: &CampaignId, name: &str) -> String {
        format!("campaigns/{id}/{name}")
    }

    pub fn campaign_ids(&self) -> Vec<CampaignId> {
        self.manifest
            .files
            .keys()
            .filter_map(|f| f.strip_prefix("campaigns/")?.strip_suffix("/campaign.json"))
            .map(CampaignId::from)
            .collect()
    }

    pub fn has_campaign(&self, id: &CampaignId) -> bool {
        self.manifest.files.contains_key(&Self::campaign_file(id, "campaign.json"))
    }

    /// Loads a campaign with its responses.
    pub fn campaign(&self, id: &CampaignId) -> Result<Campaign, StoreError> {
        let rel = Self::campaign_file(id, "campaign.json");
        if !self.manifest.files.contains_key(&rel) {
            return Err(StoreError::UnknownCampaign(id.clone()));
        }
        let bytes = self.get(&rel)?;
        let mut campaign: Campaign = serde_json::from_slice(&bytes)
            .map_err(|e| StoreError::Malformed { file: rel.clone(), message: e.to_string() })?;
        if campaign.schema != CAMPAIGN_SCHEMA {
            return Err(StoreError::SchemaVersionUnsupported { file: rel, found: campaign.schema });
        }
        let rel = Self::campaign_file(id, "responses.jsonl");
        if self.manifest.files.contains_key(&rel) {
            let rows = Campaign::parse_responses_jsonl(self.get(&rel)?.as_slice())?;
            campaign.restore_responses(rows);
        }
        Ok(campaign)
    }

    /// Stores a brand-new campaign.
    pub fn create_campaign(&mut self, campaign: &Campaign) -> Result<(), StoreError> {
        if self.has_campaign(&campaign.id) {
            return Err(StoreError::CampaignExists(campaign.id.clone()));
        }
        self.save_campaign(campaign)
    }

    /// Writes responses first and the campaign record last, so a crash in
    /// between leaves the previous status next to a superset of responses.
    pub fn save_campaign(&mut self, campaign: &Campaign) -> Result<(), StoreError> {
        self.put(&Self::campaign_file(&campaign.id, "responses.jsonl"), campaign.responses_to_jsonl().as_bytes())?;
        let body = serde_json::to_vec_pretty(campaign).expect("campaign serializes");
        self.put(&Self::campaign_file(&campaign.id, "campaign.json"), &body)
    }

    fn ledger_path(&self, id: &CampaignId) -> PathBuf {
        self.root.join(Self::campaign_file(id, "grades.jsonl"))
    }

    /// Loads a campaign's grade ledger. A torn final line left by a crash is
    /// dropped and the file rewritten without it.
    pub fn ledger(&self, id: &CampaignId) -> Result<GradeLedger, StoreError> {
        if !self.has_campaign(id) {
            return Err(StoreError::UnknownCampaign(id.clone()));
        }
        let path = self.ledger_path(id);
        if !path.exists() {
            return Ok(GradeLedger::new());
        }
        let file = File::open(&path).map_err(io_err(&path))?;
        let (ledger, torn) = GradeLedger::from_jsonl(BufReader::new(file)).map_err(|source| StoreError::Ledger {
            file: Self::campaign_file(id, "grades.jsonl"),
            source: Box::new(source),
        })?;
        if torn {
            write_atomic(&path, ledger.to_jsonl().as_bytes())?;
        }
        Ok(ledger)
    }

    /// Appends one ledger line and fsyncs before returning.
    pub fn append_ledger(&self, id: &CampaignId, line: &LedgerLine) -> Result<(), StoreError> {
        let path = self.ledger_path(id);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(GradeLedger::encode_line(line).as_bytes()).map_err(io_err(&path))?;
        f.sync_all().map_err(io_err(&path))
    }

    /// Campaign, its ledger and the grade table built from both.
    pub fn grade_table(&self, id: &CampaignId) -> Result<(Campaign, GradeLedger, GradeTable), StoreError> {
        let campaign = self.campaign(id)?;
        let ledger = self.ledger(id)?;
        let table = build_grade_table(&ledger, &campaign);
        Ok((campaign, ledger, table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trips_and_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("store");
        let mut store = Store::init(&root, &fixtures::logistics_catalog()).unwrap();
        store.save_bank(&fixtures::seed_bank()).unwrap();
        assert!(matches!(Store::init(&root, &fixtures::logistics_catalog()), Err(StoreError::AlreadyInitialized(_))));

        let store = Store::open(&root).unwrap();
        assert_eq!(store.bank().unwrap().len(), 48);
        assert_eq!(store.catalog().unwrap(), fixtures::logistics_catalog());

        let bank = root.join(BANK);
        let mut text = fs::read_to_string(&bank).unwrap();
        text = text.replacen("break the ice", "break the ICE", 1);
        fs::write(&bank, text).unwrap();
        match Store::open(&root) {
            Err(StoreError::HashMismatch { file }) => assert_eq!(file, BANK),
            other => panic!("expected hash mismatch, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_manifest_schema() {
        let dir = tempfile::tempdir().unwrap();
        Store::init(dir.path(), &fixtures::logistics_catalog()).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path).unwrap().replace(MANIFEST_SCHEMA, "lalaeval.manifest/9");
        fs::write(&path, text).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::SchemaVersionUnsupported { .. })));
    }
}
