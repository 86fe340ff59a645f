use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::ids::{DimensionId, ModelId};
use crate::scalar::Scalar;

pub const PUBLISHED_SCHEMA: &str = "lalaeval.published/1";

/// Per-dimension results that were published without raw grades. Values
/// are decimal strings so exact scalars read them without binary error.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedResults {
    pub schema: String,
    pub models: Vec<PublishedModel>,
    /// Normalized grades on the 0-100 scale.
    pub grades: Vec<PublishedRow>,
    pub annotators: usize,
    /// Disagreement ratios in percent.
    #[serde(default)]
    pub disagreement: Vec<PublishedRatio>,
    /// Group-level accuracy rows in percent.
    #[serde(default)]
    pub accuracy_groups: Vec<PublishedGroupRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedModel {
    pub id: ModelId,
    pub display_name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub dimension_id: DimensionId,
    pub values: BTreeMap<ModelId, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedRatio {
    pub dimension_id: DimensionId,
    pub percent: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedGroupRow {
    pub group: String,
    pub values: BTreeMap<ModelId, String>,
}

fn parse<T: Scalar>(s: &str) -> Result<T, AnalyticsError> {
    T::parse_decimal(s).ok_or_else(|| AnalyticsError::BadPublishedValue(s.to_owned()))
}

impl PublishedResults {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Normalized grades of one model, keyed by dimension.
    pub fn grades_for<T: Scalar>(&self, model: &ModelId) -> Result<BTreeMap<DimensionId, T>, AnalyticsError> {
        let mut out = BTreeMap::new();
        for row in &self.grades {
            let v = row
                .values
                .get(model)
                .ok_or_else(|| AnalyticsError::MissingPublishedDimension(row.dimension_id.clone()))?;
            out.insert(row.dimension_id.clone(), parse(v)?);
        }
        Ok(out)
    }

    /// Published group accuracies of one model, keyed by group name.
    pub fn accuracy_groups_for<T: Scalar>(&self, model: &ModelId) -> Result<BTreeMap<String, T>, AnalyticsError> {
        let mut out = BTreeMap::new();
        for row in &self.accuracy_groups {
            if let Some(v) = row.values.get(model) {
                out.insert(row.group.clone(), parse(v)?);
            }
        }
        Ok(out)
    }

    pub fn disagreement_for<T: Scalar>(&self, dimension: &DimensionId) -> Result<Option<T>, AnalyticsError> {
        self.disagreement.iter().find(|r| &r.dimension_id == dimension).map(|r| parse::<T>(&r.percent)).transpose()
    }
}
