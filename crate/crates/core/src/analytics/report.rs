use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use super::published::PublishedResults;
use super::rollup::rollup_available;
use super::{accuracy, dimension_grade, disagreement_ratio, total_grade, AnalyticsError};
use crate::campaign::{Campaign, CampaignStatus};
use crate::grading::GradeTable;
use crate::ids::{CampaignId, DimensionId, ModelId};
use crate::scalar::{format_fixed, Scalar};
use crate::taxonomy::{derive_weights, Catalog, DimensionGroup, WeightScheme};

pub const REPORT_SCHEMA: &str = "lalaeval.report/1";

pub const DISAGREEMENT_NOTE: &str =
    "Disagreement ratio: share of (question, model) cells whose panel grades are not all identical.";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReportSource {
    Campaign { id: CampaignId, seed: u64 },
    Fixture { name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionMeta {
    pub id: DimensionId,
    pub name: String,
    pub group: DimensionGroup,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionGrade<T> {
    pub model_id: ModelId,
    pub dimension_id: DimensionId,
    /// `Grade(qj)` in `[0, 1]`.
    pub value: T,
    /// `100 × value`.
    pub normalized_value: T,
    /// Accuracy in `[0, 1]`, when raw grades are available.
    pub accuracy: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelReport<T> {
    pub model_id: ModelId,
    pub display_name: String,
    pub dimensions: Vec<DimensionGrade<T>>,
    /// `Grade(q)` in `[0, 1]`.
    pub total_grade: T,
    /// Group means of normalized grades (0-100).
    pub rollups: Vec<(String, T)>,
    /// Group means of accuracy in percent.
    pub accuracy_rollups: Vec<(String, T)>,
    pub weights_used: BTreeMap<DimensionId, T>,
}

impl<T: Scalar> ModelReport<T> {
    pub fn rollup(&self, name: &str) -> Option<&T> {
        self.rollups.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn accuracy_rollup(&self, name: &str) -> Option<&T> {
        self.accuracy_rollups.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report<T> {
    pub source: ReportSource,
    pub panel_size: Option<usize>,
    pub dimensions: Vec<DimensionMeta>,
    pub weights: BTreeMap<DimensionId, T>,
    pub models: Vec<ModelReport<T>>,
    /// Disagreement ratio per dimension in `[0, 1]`.
    pub disagreement: BTreeMap<DimensionId, T>,
    /// File name to sha256 of the inputs the report was computed from.
    pub fixture_hashes: BTreeMap<String, String>,
}

fn pct<T: Scalar>(x: &T) -> T {
    x.clone() * T::from_count(100)
}

fn meta(catalog: &Catalog, id: &DimensionId) -> DimensionMeta {
    match catalog.dimension(id) {
        Some(d) => DimensionMeta { id: d.id.clone(), name: d.name.clone(), group: d.group },
        None => DimensionMeta { id: id.clone(), name: id.to_string(), group: DimensionGroup::General },
    }
}

/// Configured dimension weights restricted to the dimensions in `table` and
/// rescaled to sum to one. Falls back to equal weights when the configured
/// weights of the covered dimensions are all zero.
pub fn table_weights<T: Scalar>(
    table: &GradeTable,
    catalog: &Catalog,
) -> Result<BTreeMap<DimensionId, T>, AnalyticsError> {
    let dims: Vec<_> = table.dimensions().iter().filter_map(|b| catalog.dimension(&b.dimension_id).cloned()).collect();
    if dims.len() != table.dimensions().len() {
        let missing = table
            .dimensions()
            .iter()
            .find(|b| catalog.dimension(&b.dimension_id).is_none())
            .map(|b| b.dimension_id.clone())
            .expect("some dimension is missing");
        return Err(crate::taxonomy::WeightError::MissingWeight(missing).into());
    }
    let raw: BTreeMap<DimensionId, T> = dims.iter().map(|d| (d.id.clone(), T::from_config_f64(d.weight))).collect();
    let sum: T = raw.values().cloned().sum();
    if sum.is_zero() {
        return Ok(derive_weights(&dims, &WeightScheme::Equal)?);
    }
    Ok(raw.into_iter().map(|(k, v)| (k, v / sum.clone())).collect())
}

/// Report over a campaign's grade table. `weights` must cover every
/// dimension in the table.
pub fn build_report<T: Scalar>(
    table: &GradeTable,
    campaign: &Campaign,
    catalog: &Catalog,
    weights: &BTreeMap<DimensionId, T>,
) -> Result<Report<T>, AnalyticsError> {
    if !matches!(campaign.status, CampaignStatus::Grading | CampaignStatus::Closed) || table.grade_count() == 0 {
        return Err(AnalyticsError::WrongStatus(campaign.status));
    }
    let dims: Vec<DimensionMeta> = table.dimensions().iter().map(|b| meta(catalog, &b.dimension_id)).collect();
    let mut models = Vec::new();
    for (qi, model_id) in table.models().iter().enumerate() {
        let mut grades = Vec::new();
        let mut values = BTreeMap::new();
        let mut accs = BTreeMap::new();
        for block in table.dimensions() {
            // Dimensions this model has no grades on are left out of its row.
            let value: T = match dimension_grade(block, qi) {
                Ok(v) => v,
                Err(AnalyticsError::EmptyDimension(_)) => continue,
                Err(e) => return Err(e),
            };
            let acc: T = accuracy(block, qi)?;
            values.insert(block.dimension_id.clone(), pct(&value));
            accs.insert(block.dimension_id.clone(), pct(&acc));
            grades.push(DimensionGrade {
                model_id: model_id.clone(),
                dimension_id: block.dimension_id.clone(),
                normalized_value: pct(&value),
                value,
                accuracy: Some(acc),
            });
        }
        let fractions: BTreeMap<DimensionId, T> =
            grades.iter().map(|g| (g.dimension_id.clone(), g.value.clone())).collect();
        let total = total_grade(&fractions, weights)?;
        let display_name = campaign
            .models
            .iter()
            .find(|m| &m.id == model_id)
            .map(|m| m.display_name.clone())
            .unwrap_or_else(|| model_id.to_string());
        models.push(ModelReport {
            model_id: model_id.clone(),
            display_name,
            rollups: rollup_available(&values, &BTreeMap::new(), &catalog.rollups),
            accuracy_rollups: rollup_available(&accs, &BTreeMap::new(), &catalog.rollups),
            dimensions: grades,
            total_grade: total,
            weights_used: weights.clone(),
        });
    }
    let mut disagreement = BTreeMap::new();
    if table.panel_size() >= 2 {
        for block in table.dimensions() {
            if let Ok(r) = disagreement_ratio::<T>(block) {
                disagreement.insert(block.dimension_id.clone(), r);
            }
        }
    }
    Ok(Report {
        source: ReportSource::Campaign { id: campaign.id.clone(), seed: campaign.seed },
        panel_size: Some(table.panel_size()),
        dimensions: dims,
        weights: weights.clone(),
        models,
        disagreement,
        fixture_hashes: BTreeMap::new(),
    })
}

/// Report over published per-dimension results. Totals use equal weights
/// over the published dimensions; accuracy is available only at the
/// group level the publication gives.
pub fn report_from_published<T: Scalar>(
    published: &PublishedResults,
    catalog: &Catalog,
    name: &str,
) -> Result<Report<T>, AnalyticsError> {
    let dim_ids: Vec<DimensionId> = published.grades.iter().map(|r| r.dimension_id.clone()).collect();
    let selected: Vec<_> = dim_ids.iter().filter_map(|id| catalog.dimension(id).cloned()).collect();
    for id in &dim_ids {
        if catalog.dimension(id).is_none() {
            return Err(AnalyticsError::MissingPublishedDimension(id.clone()));
        }
    }
    let weights: BTreeMap<DimensionId, T> = derive_weights(&selected, &WeightScheme::Equal)?;
    let mut models = Vec::new();
    for m in &published.models {
        let values: BTreeMap<DimensionId, T> = published.grades_for(&m.id)?;
        let fractions: BTreeMap<DimensionId, T> =
            values.iter().map(|(k, v)| (k.clone(), v.clone() / T::from_count(100))).collect();
        let dimensions = dim_ids
            .iter()
            .map(|id| DimensionGrade {
                model_id: m.id.clone(),
                dimension_id: id.clone(),
                value: fractions[id].clone(),
                normalized_value: values[id].clone(),
                accuracy: None,
            })
            .collect();
        let known_acc = published.accuracy_groups_for::<T>(&m.id)?;
        let accuracy_rollups = if known_acc.is_empty() {
            Vec::new()
        } else {
            // Only groups that are published or derivable from published
            // groups make sense here; per-dimension accuracy is unknown.
            rollup_available(&BTreeMap::new(), &known_acc, &catalog.rollups)
        };
        models.push(ModelReport {
            model_id: m.id.clone(),
            display_name: m.display_name.clone(),
            dimensions,
            total_grade: total_grade(&fractions, &weights)?,
            rollups: rollup_available(&values, &BTreeMap::new(), &catalog.rollups),
            accuracy_rollups,
            weights_used: weights.clone(),
        });
    }
    let mut disagreement = BTreeMap::new();
    for id in &dim_ids {
        if let Some(p) = published.disagreement_for::<T>(id)? {
            disagreement.insert(id.clone(), p / T::from_count(100));
        }
    }
    Ok(Report {
        source: ReportSource::Fixture { name: name.to_owned() },
        panel_size: Some(published.annotators),
        dimensions: dim_ids.iter().map(|id| meta(catalog, id)).collect(),
        weights,
        models,
        disagreement,
        fixture_hashes: BTreeMap::new(),
    })
}

/// One-decimal rendering shared by every output format, so all formats agree.
fn fixed1<T: Scalar>(x: &T) -> String {
    format_fixed(x, 1)
}

fn number(text: &str) -> Value {
    Value::Number(serde_json::Number::from_f64(text.parse().expect("formatted decimals parse")).expect("finite"))
}

impl<T: Scalar> Report<T> {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Markdown => self.to_markdown(),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    fn title(&self) -> String {
        match &self.source {
            ReportSource::Campaign { id, .. } => format!("campaign {id}"),
            ReportSource::Fixture { name } => format!("fixture {name}"),
        }
    }

    /// Row labels of the group tables, in definition order.
    fn group_names(&self, accuracy: bool) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for m in &self.models {
            let groups = if accuracy { &m.accuracy_rollups } else { &m.rollups };
            for (n, _) in groups {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        names
    }

    pub fn to_json(&self) -> String {
        let source = match &self.source {
            ReportSource::Campaign { id, seed } => json!({"kind": "campaign", "id": id, "seed": seed}),
            ReportSource::Fixture { name } => json!({"kind": "fixture", "name": name}),
        };
        let dimensions: Vec<Value> = self
            .dimensions
            .iter()
            .map(|d| {
                let mut o = Map::new();
                o.insert("id".into(), json!(d.id));
                o.insert("name".into(), json!(d.name));
                o.insert("capability".into(), json!(d.group.to_string()));
                if let Some(w) = self.weights.get(&d.id) {
                    o.insert("weight".into(), number(&format_fixed(w, 6)));
                }
                if let Some(r) = self.disagreement.get(&d.id) {
                    o.insert("disagreement_pct".into(), number(&fixed1(&pct(r))));
                }
                Value::Object(o)
            })
            .collect();
        let models: Vec<Value> = self
            .models
            .iter()
            .map(|m| {
                let mut grades = Map::new();
                let mut acc = Map::new();
                for g in &m.dimensions {
                    grades.insert(g.dimension_id.to_string(), number(&fixed1(&g.normalized_value)));
                    if let Some(a) = &g.accuracy {
                        acc.insert(g.dimension_id.to_string(), number(&fixed1(&pct(a))));
                    }
                }
                let groups = |rows: &[(String, T)]| -> Map<String, Value> {
                    rows.iter().map(|(n, v)| (n.clone(), number(&fixed1(v)))).collect()
                };
                json!({
                    "id": m.model_id,
                    "display_name": m.display_name,
                    "total_grade": number(&fixed1(&pct(&m.total_grade))),
                    "grades": grades,
                    "accuracy_pct": acc,
                    "rollups": groups(&m.rollups),
                    "accuracy_rollups_pct": groups(&m.accuracy_rollups),
                })
            })
            .collect();
        let doc = json!({
            "schema": REPORT_SCHEMA,
            "source": source,
            "panel_size": self.panel_size,
            "dimensions": dimensions,
            "models": models,
            "fixture_hashes": self.fixture_hashes,
            "notes": [DISAGREEMENT_NOTE],
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let header = |out: &mut String, first: &str| {
            out.push_str(&format!("| {first} |"));
            for m in &self.models {
                out.push_str(&format!(" {} |", m.display_name));
            }
            out.push_str("\n|---|");
            for _ in &self.models {
                out.push_str("---:|");
            }
            out.push('\n');
        };
        let _ = writeln!(out, "# Evaluation report: {}\n", self.title());

        let acc_groups = self.group_names(true);
        if !acc_groups.is_empty() {
            out.push_str("## Accuracy (%)\n\n");
            header(&mut out, "Capability Dimension");
            for g in &acc_groups {
                out.push_str(&format!("| {g} |"));
                for m in &self.models {
                    let cell = m.accuracy_rollup(g).map(|v| format!("{}%", fixed1(v))).unwrap_or_default();
                    out.push_str(&format!(" {cell} |"));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        let groups = self.group_names(false);
        if !groups.is_empty() {
            out.push_str("## Normalized average grades\n\n");
            header(&mut out, "Capability Dimension");
            for g in &groups {
                out.push_str(&format!("| {g} |"));
                for m in &self.models {
                    out.push_str(&format!(" {} |", m.rollup(g).map(fixed1).unwrap_or_default()));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        out.push_str("## Total grade\n\n");
        header(&mut out, "Weighted total");
        out.push_str("| Grade(q) |");
        for m in &self.models {
            out.push_str(&format!(" {} |", fixed1(&pct(&m.total_grade))));
        }
        out.push_str("\n\n");

        out.push_str("## Grades by capability dimension\n\n");
        out.push_str("| Capability | Capability Dimension |");
        for m in &self.models {
            out.push_str(&format!(" {} |", m.display_name));
        }
        out.push_str("\n|---|---|");
        for _ in &self.models {
            out.push_str("---:|");
        }
        out.push('\n');
        for d in &self.dimensions {
            out.push_str(&format!("| {} | {} |", d.group, d.name));
            for m in &self.models {
                let cell = m.dimensions.iter().find(|g| g.dimension_id == d.id).map(|g| fixed1(&g.normalized_value));
                out.push_str(&format!(" {} |", cell.unwrap_or_default()));
            }
            out.push('\n');
        }
        out.push('\n');

        if self.models.iter().any(|m| m.dimensions.iter().any(|g| g.accuracy.is_some())) {
            out.push_str("## Accuracy by capability dimension (%)\n\n");
            out.push_str("| Capability | Capability Dimension |");
            for m in &self.models {
                out.push_str(&format!(" {} |", m.display_name));
            }
            out.push_str("\n|---|---|");
            for _ in &self.models {
                out.push_str("---:|");
            }
            out.push('\n');
            for d in &self.dimensions {
                out.push_str(&format!("| {} | {} |", d.group, d.name));
                for m in &self.models {
                    let cell = m
                        .dimensions
                        .iter()
                        .find(|g| g.dimension_id == d.id)
                        .and_then(|g| g.accuracy.as_ref())
                        .map(|a| fixed1(&pct(a)));
                    out.push_str(&format!(" {} |", cell.unwrap_or_default()));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        if !self.disagreement.is_empty() {
            out.push_str("## Disagreement\n\n");
            out.push_str("| Capability | Capability Dimension | Number of Annotators | Ratio of Disagreement |\n");
            out.push_str("|---|---|---:|---:|\n");
            let n = self.panel_size.map(|n| n.to_string()).unwrap_or_default();
            for d in &self.dimensions {
                if let Some(r) = self.disagreement.get(&d.id) {
                    out.push_str(&format!("| {} | {} | {} | {}% |\n", d.group, d.name, n, fixed1(&pct(r))));
                }
            }
            out.push('\n');
        }

        out.push_str("## Weights used\n\n| Dimension | w_j |\n|---|---:|\n");
        for d in &self.dimensions {
            if let Some(w) = self.weights.get(&d.id) {
                out.push_str(&format!("| {} | {} |\n", d.name, format_fixed(w, 6)));
            }
        }
        out.push('\n');

        out.push_str("## Reproducibility\n\n");
        if let ReportSource::Campaign { seed, .. } = &self.source {
            let _ = writeln!(out, "- Seed: {seed}");
        }
        for (file, hash) in &self.fixture_hashes {
            let _ = writeln!(out, "- sha256({file}) = {hash}");
        }
        let _ = writeln!(out, "- {DISAGREEMENT_NOTE}");
        out
    }

    /// Per-dimension normalized grades: capability, dimension, one column per
    /// model.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["capability".to_owned(), "dimension".to_owned()];
        header.extend(self.models.iter().map(|m| m.display_name.clone()));
        w.write_record(&header).expect("in-memory csv");
        for d in &self.dimensions {
            let mut row = vec![d.group.to_string(), d.name.clone()];
            for m in &self.models {
                let cell = m.dimensions.iter().find(|g| g.dimension_id == d.id).map(|g| fixed1(&g.normalized_value));
                row.push(cell.unwrap_or_default());
            }
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}
