use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lalaeval_core::analytics::AnalyticsError;
use lalaeval_core::campaign::CampaignError;
use lalaeval_core::grading::{LedgerError, RubricError};
use lalaeval_core::store::StoreError;
use serde_json::{json, Value};

/// JSON error body `{code, message, details}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: Value::Null }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn unauthorized(message: &str) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", message)
    }

    pub fn forbidden(message: &str) -> Self {
        Self::new(StatusCode::FORBIDDEN, "Forbidden", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"code": self.code, "message": self.message, "details": self.details});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownCampaign(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "UnknownCampaign", format!("unknown campaign `{id}`"))
            }
            StoreError::CampaignExists(id) => {
                ApiError::new(StatusCode::CONFLICT, "CampaignExists", format!("campaign `{id}` already exists"))
            }
            StoreError::Campaign(c) => c.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StoreCorrupt", other.to_string()),
        }
    }
}

impl From<CampaignError> for ApiError {
    fn from(e: CampaignError) -> Self {
        let message = e.to_string();
        match e {
            CampaignError::WrongStatus { expected, actual } => {
                ApiError::new(StatusCode::CONFLICT, "WrongStatus", message)
                    .with_details(json!({"expected": expected, "actual": actual}))
            }
            CampaignError::UnknownQaId(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownQaId", message),
            CampaignError::UnknownPosition { position, models, .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "UnknownPosition", message)
                    .with_details(json!({"position": position, "positions": models}))
            }
            CampaignError::UnknownEvaluator(_) => ApiError::new(StatusCode::FORBIDDEN, "UnknownEvaluator", message),
            CampaignError::InsufficientStock { stratum, have, need } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InsufficientStock", message)
                    .with_details(json!({"stratum": stratum.to_string(), "have": have, "need": need}))
            }
            CampaignError::PanelTooSmall(_)
            | CampaignError::TooFewModels(_)
            | CampaignError::DuplicateModel(_)
            | CampaignError::DuplicateEvaluator(_)
            | CampaignError::MissingRubric(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidCampaign", message)
            }
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "CampaignError", message),
        }
    }
}

impl From<LedgerError> for ApiError {
    fn from(e: LedgerError) -> Self {
        let message = e.to_string();
        match e {
            LedgerError::DuplicateGrade(_) => ApiError::new(StatusCode::CONFLICT, "DuplicateGrade", message),
            LedgerError::NothingToAmend(_) => ApiError::new(StatusCode::CONFLICT, "NothingToAmend", message),
            LedgerError::UnissuedTask { .. } => ApiError::new(StatusCode::FORBIDDEN, "UnissuedTask", message),
            LedgerError::GradeOutOfScale(RubricError::GradeOutOfScale { grade, allowed }) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "GradeOutOfScale", message)
                    .with_details(json!({"grade": grade, "allowed": allowed}))
            }
            LedgerError::GradeOutOfScale(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "GradeOutOfScale", message)
            }
            LedgerError::NotAGrade(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NotAGrade", message),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        let message = e.to_string();
        match e {
            AnalyticsError::WrongStatus(actual) => {
                ApiError::new(StatusCode::CONFLICT, "WrongStatus", message).with_details(json!({"actual": actual}))
            }
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "AnalyticsError", message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), "InvalidBody", e.body_text())
    }
}
