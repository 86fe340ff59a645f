//! Opaque string identifiers for every entity family.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($($(#[$meta:meta])* $name:ident),* $(,)?) => {
        $(
            $(#[$meta])*
            #[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
            #[serde(transparent)]
            pub struct $name(String);

            impl $name {
                pub fn new(id: impl Into<String>) -> Self {
                    Self(id.into())
                }

                pub fn as_str(&self) -> &str {
                    &self.0
                }
            }

            impl fmt::Display for $name {
                fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                    f.write_str(&self.0)
                }
            }

            impl From<&str> for $name {
                fn from(s: &str) -> Self {
                    Self(s.to_owned())
                }
            }

            impl From<String> for $name {
                fn from(s: String) -> Self {
                    Self(s)
                }
            }

            impl AsRef<str> for $name {
                fn as_ref(&self) -> &str {
                    &self.0
                }
            }
        )*
    };
}

id_type!(
    /// Taxonomy node.
    NodeId,
    /// Capability dimension (index `j` of the grade table).
    DimensionId,
    RubricId,
    /// QA pair (index `k` of the grade table).
    QaId,
    PlanId,
    CampaignId,
    /// Model under test (index `q` of the grade table).
    ModelId,
    /// Human grader (index `i` of the grade table).
    EvaluatorId,
    /// Question designer or inspector.
    PersonId,
);
