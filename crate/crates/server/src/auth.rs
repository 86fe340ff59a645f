use std::path::Path;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use chrono::{DateTime, Utc};
use lalaeval_core::ids::EvaluatorId;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::AppState;

pub const TOKENS_SCHEMA: &str = "lalaeval.tokens/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Evaluator,
    Admin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub token: String,
    /// Required for evaluator tokens.
    #[serde(default)]
    pub evaluator_id: Option<EvaluatorId>,
    pub role: Role,
    pub expires_at: DateTime<Utc>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFile {
    pub schema: String,
    pub tokens: Vec<SessionToken>,
}

#[derive(Debug, thiserror::Error)]
pub enum TokenFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed token file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported token file schema `{0}`")]
    Schema(String),
    #[error("evaluator token without evaluator_id")]
    MissingEvaluator,
}

impl TokenFile {
    pub fn new(tokens: Vec<SessionToken>) -> Self {
        Self { schema: TOKENS_SCHEMA.to_owned(), tokens }
    }

    pub fn load(path: &Path) -> Result<Self, TokenFileError> {
        let file: TokenFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.schema != TOKENS_SCHEMA {
            return Err(TokenFileError::Schema(file.schema));
        }
        if file.tokens.iter().any(|t| t.role == Role::Evaluator && t.evaluator_id.is_none()) {
            return Err(TokenFileError::MissingEvaluator);
        }
        Ok(file)
    }
}

/// The authenticated caller.
#[derive(Clone, Debug)]
pub struct Caller {
    pub role: Role,
    pub evaluator_id: Option<EvaluatorId>,
}

impl Caller {
    pub fn require_admin(&self) -> Result<(), ApiError> {
        match self.role {
            Role::Admin => Ok(()),
            Role::Evaluator => Err(ApiError::forbidden("admin role required")),
        }
    }

    /// Evaluators may act only as themselves; admins as anyone.
    pub fn may_act_as(&self, evaluator: &EvaluatorId) -> Result<(), ApiError> {
        match (self.role, &self.evaluator_id) {
            (Role::Admin, _) => Ok(()),
            (Role::Evaluator, Some(me)) if me == evaluator => Ok(()),
            _ => Err(ApiError::forbidden("token belongs to another evaluator")),
        }
    }
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let token = header.strip_prefix("Bearer ").ok_or_else(|| ApiError::unauthorized("expected a bearer token"))?;
        let found =
            state.tokens.iter().find(|t| t.token == token).ok_or_else(|| ApiError::unauthorized("unknown token"))?;
        if found.expires_at <= Utc::now() {
            return Err(ApiError::unauthorized("token expired"));
        }
        Ok(Caller { role: found.role, evaluator_id: found.evaluator_id.clone() })
    }
}

/// An authenticated caller with the admin role. Rejects before the request
/// body is read.
#[derive(Clone, Debug)]
pub struct Admin(pub Caller);

impl FromRequestParts<AppState> for Admin {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let caller = Caller::from_request_parts(parts, state).await?;
        caller.require_admin()?;
        Ok(Admin(caller))
    }
}
