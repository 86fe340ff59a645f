use std::path::PathBuf;

use lalaeval_core::analytics::AnalyticsError;
use lalaeval_core::campaign::{CampaignError, FetchOrCampaign};
use lalaeval_core::qa_bank::{BankError, BankImportError};
use lalaeval_core::quality::QualityError;
use lalaeval_core::store::StoreError;
use lalaeval_core::taxonomy::CatalogError;
use lalaeval_server::ServeError;
use thiserror::Error;

/// Domain failures; all of them exit with status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    BankImport(#[from] BankImportError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Fetch(#[from] FetchOrCampaign),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Serve(#[from] ServeError),
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Invalid(message.into())
    }
}
