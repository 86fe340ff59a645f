use chrono::{DateTime, Utc};
use thiserror::Error;

use super::{Campaign, CampaignError, ModelAccess, ModelUnderTest, ResponseRecord, SampledQuestion};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("model `{model}`: {message}")]
    Transport { model: String, message: String },
    #[error("model `{0}` has no HTTP endpoint")]
    NotAnEndpoint(String),
}

/// Pulls a response for one question from a live model endpoint.
/// Implementations own retries and timeouts.
pub trait ResponseFetcher {
    fn fetch(&self, model: &ModelUnderTest, question: &SampledQuestion) -> Result<String, FetchError>;
}

/// Fills `{question}` in a prompt template.
pub fn render_prompt(template: &str, question: &SampledQuestion) -> String {
    template.replace("{question}", &question.question)
}

impl Campaign {
    /// Fetches missing responses for every endpoint-backed model. Offline
    /// models are skipped; their rows come from JSONL import.
    pub fn fetch_missing(
        &self,
        fetcher: &dyn ResponseFetcher,
        at: DateTime<Utc>,
    ) -> Result<Vec<ResponseRecord>, FetchOrCampaign> {
        let mut rows = Vec::new();
        for (qa, model_id) in self.missing_responses() {
            let model = self.models.iter().find(|m| m.id == model_id).expect("missing pairs use campaign models");
            if !matches!(model.access, ModelAccess::HttpEndpoint { .. }) {
                continue;
            }
            let question = self.question(&qa).ok_or_else(|| CampaignError::UnknownQaId(qa.clone()))?;
            let response_text = fetcher.fetch(model, question)?;
            rows.push(ResponseRecord {
                campaign_id: self.id.clone(),
                qa_id: qa,
                model_id,
                response_text,
                captured_at: at,
            });
        }
        Ok(rows)
    }
}

#[derive(Debug, Error)]
pub enum FetchOrCampaign {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}
