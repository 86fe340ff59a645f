use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::ids::DimensionId;
use crate::scalar::Scalar;

/// A named unweighted mean, either over dimensions or over earlier groups.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollupGroup {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dimensions: Vec<DimensionId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub of_groups: Vec<String>,
}

/// Ordered rollup definitions; a group may only reference groups listed
/// before it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollupSpec {
    #[serde(default)]
    pub groups: Vec<RollupGroup>,
}

impl RollupSpec {
    pub fn group(&self, name: &str) -> Option<&RollupGroup> {
        self.groups.iter().find(|g| g.name == name)
    }
}

pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let sum: T = values.iter().cloned().sum();
    Some(sum / T::from_count(values.len() as u64))
}

/// Evaluates every group from per-dimension values.
pub fn rollup<T: Scalar>(
    values: &BTreeMap<DimensionId, T>,
    spec: &RollupSpec,
) -> Result<Vec<(String, T)>, AnalyticsError> {
    rollup_with(values, &BTreeMap::new(), spec)
}

/// Like [`rollup`], but groups already present in `known` take the given
/// value instead of being recomputed. This is how a published group row
/// (for example a domain accuracy) feeds a derived group such as an overall
/// mean.
pub fn rollup_with<T: Scalar>(
    values: &BTreeMap<DimensionId, T>,
    known: &BTreeMap<String, T>,
    spec: &RollupSpec,
) -> Result<Vec<(String, T)>, AnalyticsError> {
    let mut out: Vec<(String, T)> = Vec::with_capacity(spec.groups.len());
    for g in &spec.groups {
        if let Some(v) = known.get(&g.name) {
            out.push((g.name.clone(), v.clone()));
            continue;
        }
        let mut members = Vec::new();
        for d in &g.dimensions {
            let v = values.get(d).ok_or_else(|| AnalyticsError::UnknownDimensionInGroup {
                group: g.name.clone(),
                dimension: d.clone(),
            })?;
            members.push(v.clone());
        }
        for name in &g.of_groups {
            let v = out
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| AnalyticsError::UnknownGroup { group: g.name.clone(), member: name.clone() })?;
            members.push(v);
        }
        let value = mean(&members).ok_or_else(|| AnalyticsError::EmptyGroup(g.name.clone()))?;
        out.push((g.name.clone(), value));
    }
    Ok(out)
}

/// Evaluates the groups whose members are all available and silently drops
/// the rest (and anything built on a dropped group). Used for campaigns that
/// cover only part of the catalog.
pub fn rollup_available<T: Scalar>(
    values: &BTreeMap<DimensionId, T>,
    known: &BTreeMap<String, T>,
    spec: &RollupSpec,
) -> Vec<(String, T)> {
    let mut kept = RollupSpec::default();
    for g in &spec.groups {
        let dims_ok = g.dimensions.iter().all(|d| values.contains_key(d));
        let groups_ok = g.of_groups.iter().all(|n| kept.group(n).is_some());
        let nonempty = !g.dimensions.is_empty() || !g.of_groups.is_empty();
        if known.contains_key(&g.name) || (dims_ok && groups_ok && nonempty) {
            kept.groups.push(g.clone());
        }
    }
    rollup_with(values, known, &kept).expect("filtered spec only references available members")
}
