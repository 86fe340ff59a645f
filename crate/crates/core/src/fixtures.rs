//! Bundled reference data: the logistics capability catalog, the published
//! five-model results and a small seed bank.

use crate::analytics::PublishedResults;
use crate::qa_bank::Bank;
use crate::taxonomy::Catalog;

pub const LOGISTICS_CATALOG_JSON: &str = include_str!("../fixtures/logistics_catalog.json");
pub const PUBLISHED_RESULTS_JSON: &str = include_str!("../fixtures/published_results.json");
pub const SEED_BANK_JSONL: &str = include_str!("../fixtures/seed_bank.jsonl");

/// Name accepted by `report emit --fixture`.
pub const PUBLISHED_FIXTURE: &str = "published";

pub fn logistics_catalog() -> Catalog {
    Catalog::from_json(LOGISTICS_CATALOG_JSON).expect("bundled catalog parses")
}

pub fn published_results() -> PublishedResults {
    PublishedResults::from_json(PUBLISHED_RESULTS_JSON).expect("bundled results parse")
}

pub fn seed_bank() -> Bank {
    Bank::import_jsonl(SEED_BANK_JSONL.as_bytes()).expect("bundled bank parses")
}

/// `(file name, content)` of every bundled fixture, for reproducibility hashes.
pub fn all() -> [(&'static str, &'static str); 3] {
    [
        ("logistics_catalog.json", LOGISTICS_CATALOG_JSON),
        ("published_results.json", PUBLISHED_RESULTS_JSON),
        ("seed_bank.jsonl", SEED_BANK_JSONL),
    ]
}
