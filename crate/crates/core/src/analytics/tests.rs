use std::collections::BTreeMap;

use super::*;
use crate::fixtures;
use crate::grading::GradeTable;
use crate::Exact;

fn table(ts: &[u32], n: usize, models: usize) -> GradeTable {
    let evs = (0..n).map(|i| format!("e{i}").into()).collect();
    let ms = (0..models).map(|i| format!("m{i}").into()).collect();
    let mut t = GradeTable::new("c".into(), ms, evs);
    t.add_dimension("d".into(), ts.iter().enumerate().map(|(k, &m)| (format!("q{k}").into(), m)).collect());
    t
}

fn fill(t: &mut GradeTable, grades: &[&[u32]]) {
    // grades[k][i] for model 0
    for (k, row) in grades.iter().enumerate() {
        for (i, g) in row.iter().enumerate() {
            t.set_at(0, k, i, 0, Some(*g)).unwrap();
        }
    }
}

#[test]
fn dimension_grade_direct_formula() {
    let mut t = table(&[2, 3], 2, 1);
    fill(&mut t, &[&[1, 2], &[0, 3]]);
    let g: Exact = dimension_grade(&t.dimensions()[0], 0).unwrap();
    assert_eq!(g, Exact::ratio(6, 10));
}

#[test]
fn dimension_grade_is_one_iff_all_top() {
    let mut t = table(&[2, 3], 3, 1);
    fill(&mut t, &[&[2, 2, 2], &[3, 3, 3]]);
    assert_eq!(dimension_grade::<f64>(&t.dimensions()[0], 0).unwrap(), 1.0);
    t.set_at(0, 1, 2, 0, Some(2)).unwrap();
    assert!(dimension_grade::<f64>(&t.dimensions()[0], 0).unwrap() < 1.0);
}

#[test]
fn gaps_leave_both_sums() {
    let mut t = table(&[2, 3], 2, 1);
    fill(&mut t, &[&[1, 2], &[0, 3]]);
    t.set_at(0, 1, 1, 0, None).unwrap();
    // (1 + 2 + 0) / (2 + 2 + 3)
    assert_eq!(dimension_grade::<Exact>(&t.dimensions()[0], 0).unwrap(), Exact::ratio(3, 7));
}

#[test]
fn empty_dimension_is_an_error() {
    let t = table(&[2], 3, 1);
    assert!(matches!(dimension_grade::<f64>(&t.dimensions()[0], 0), Err(AnalyticsError::EmptyDimension(_))));
    assert!(matches!(accuracy::<f64>(&t.dimensions()[0], 0), Err(AnalyticsError::EmptyDimension(_))));
}

#[test]
fn accuracy_counts_nonzero_cells() {
    let mut t = table(&[3], 5, 1);
    fill(&mut t, &[&[0, 1, 2, 0, 3]]);
    assert_eq!(accuracy::<Exact>(&t.dimensions()[0], 0).unwrap(), Exact::ratio(3, 5));
    fill(&mut t, &[&[0, 0, 0, 0, 0]]);
    assert_eq!(accuracy::<f64>(&t.dimensions()[0], 0).unwrap(), 0.0);
}

#[test]
fn total_grade_examples() {
    let grades: BTreeMap<DimensionId, Exact> =
        [("a".into(), Exact::ratio(1, 2)), ("b".into(), Exact::ratio(7, 10))].into_iter().collect();
    let equal: BTreeMap<DimensionId, Exact> =
        [("a".into(), Exact::ratio(1, 2)), ("b".into(), Exact::ratio(1, 2))].into_iter().collect();
    assert_eq!(total_grade(&grades, &equal).unwrap(), Exact::ratio(3, 5));
    let degenerate: BTreeMap<DimensionId, Exact> =
        [("a".into(), Exact::ratio(1, 1)), ("b".into(), Exact::ratio(0, 1))].into_iter().collect();
    assert_eq!(total_grade(&grades, &degenerate).unwrap(), Exact::ratio(1, 2));
    let single: BTreeMap<DimensionId, Exact> = [("a".into(), Exact::ratio(1, 1))].into_iter().collect();
    let only_a: BTreeMap<DimensionId, Exact> = [("a".into(), Exact::ratio(1, 2))].into_iter().collect();
    assert_eq!(total_grade(&only_a, &single).unwrap(), Exact::ratio(1, 2));
    let bad: BTreeMap<DimensionId, Exact> =
        [("a".into(), Exact::ratio(7, 10)), ("b".into(), Exact::ratio(4, 10))].into_iter().collect();
    assert!(matches!(total_grade(&grades, &bad), Err(AnalyticsError::Weights(_))));
}

#[test]
fn disagreement_examples() {
    let mut t = table(&[2, 2, 2, 2, 2], 3, 2);
    for k in 0..5 {
        for i in 0..3 {
            for q in 0..2 {
                t.set_at(0, k, i, q, Some(1)).unwrap();
            }
        }
    }
    assert_eq!(disagreement_ratio::<Exact>(&t.dimensions()[0]).unwrap(), Exact::ratio(0, 1));
    t.set_at(0, 0, 0, 0, Some(2)).unwrap();
    t.set_at(0, 1, 2, 1, Some(0)).unwrap();
    t.set_at(0, 4, 1, 1, Some(2)).unwrap();
    assert_eq!(disagreement_ratio::<Exact>(&t.dimensions()[0]).unwrap(), Exact::ratio(3, 10));
    let solo = table(&[2], 1, 2);
    assert_eq!(disagreement_ratio::<f64>(&solo.dimensions()[0]), Err(AnalyticsError::PanelTooSmall(1)));
}

fn values(pairs: &[(&str, &str)]) -> BTreeMap<DimensionId, Exact> {
    pairs.iter().map(|(d, v)| ((*d).into(), Exact::parse_decimal(v).unwrap())).collect()
}

#[test]
fn rollup_groups_and_overall() {
    let spec = RollupSpec {
        groups: vec![
            RollupGroup { name: "A".into(), dimensions: vec!["x".into(), "y".into()], of_groups: vec![] },
            RollupGroup { name: "B".into(), dimensions: vec!["z".into()], of_groups: vec![] },
            RollupGroup { name: "Overall".into(), dimensions: vec![], of_groups: vec!["A".into(), "B".into()] },
        ],
    };
    let out = rollup(&values(&[("x", "1"), ("y", "3"), ("z", "6")]), &spec).unwrap();
    assert_eq!(
        out,
        vec![
            ("A".to_owned(), Exact::from_count(2)),
            ("B".to_owned(), Exact::from_count(6)),
            ("Overall".to_owned(), Exact::from_count(4)),
        ]
    );
    assert!(matches!(
        rollup(&values(&[("x", "1"), ("y", "3")]), &spec),
        Err(AnalyticsError::UnknownDimensionInGroup { .. })
    ));
    let empty = RollupSpec { groups: vec![RollupGroup { name: "E".into(), ..Default::default() }] };
    assert_eq!(rollup(&values(&[]), &empty), Err(AnalyticsError::EmptyGroup("E".into())));
}

#[test]
fn published_fixture_reproduces_gpt4_column() {
    let report: Report<Exact> =
        report_from_published(&fixtures::published_results(), &fixtures::logistics_catalog(), "published").unwrap();
    let gpt = &report.models[0];
    let got: Vec<String> = ["Domain-Factuality", "Domain", "General", "Overall"]
        .iter()
        .map(|g| format_fixed(gpt.rollup(g).unwrap(), 1))
        .collect();
    assert_eq!(got, ["38.8", "48.1", "77.0", "62.6"]);
    assert_eq!(format_fixed(gpt.accuracy_rollup("Overall").unwrap(), 1), "67.1");
}

#[test]
fn markdown_and_json_agree() {
    let report: Report<Exact> =
        report_from_published(&fixtures::published_results(), &fixtures::logistics_catalog(), "published").unwrap();
    let md = report.to_markdown();
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(md.contains("| Capability Dimension | GPT-4 | Ernie Bot | PLLM3 | PLLM2 | PLLM1 |"));
    for (mi, m) in report.models.iter().enumerate() {
        let jm = &json["models"][mi];
        for (name, _) in &m.rollups {
            let row = md
                .lines()
                .skip_while(|l| !l.contains("Normalized average grades"))
                .find(|l| l.starts_with(&format!("| {name} |")))
                .unwrap();
            let cells: Vec<&str> = row.split('|').map(str::trim).collect();
            let from_json = format!("{:.1}", jm["rollups"][name].as_f64().unwrap());
            assert_eq!(cells[mi + 2], from_json, "{name} for {}", m.display_name);
        }
        for g in &m.dimensions {
            let from_json = jm["grades"][g.dimension_id.as_str()].as_f64().unwrap();
            assert_eq!(format!("{from_json:.1}"), format_fixed(&g.normalized_value, 1));
        }
    }
}

#[test]
fn csv_follows_capability_dimension_model_columns() {
    let report: Report<Exact> =
        report_from_published(&fixtures::published_results(), &fixtures::logistics_catalog(), "published").unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "capability,dimension,GPT-4,Ernie Bot,PLLM3,PLLM2,PLLM1");
    assert_eq!(lines.next().unwrap(), "Domain,Conceptual and Terminological Understanding,66.0,80.0,82.5,84.5,85.0");
}

#[test]
fn scale_equivariance_example() {
    let mut t = table(&[2, 3], 2, 1);
    fill(&mut t, &[&[1, 2], &[0, 3]]);
    let a: Exact = dimension_grade(&t.dimensions()[0], 0).unwrap();
    let b: Exact = dimension_grade(&t.scaled(7).dimensions()[0], 0).unwrap();
    assert_eq!(a, b);
}

use crate::scalar::{format_fixed, Scalar};

#[test]
fn table_weights_rescale_configured_weights() {
    let catalog = fixtures::logistics_catalog();
    let mut t = GradeTable::new("c".into(), vec!["m".into()], vec!["e1".into(), "e2".into()]);
    t.add_dimension("gen-semantic".into(), vec![("q1".into(), 1)]);
    t.add_dimension("dom-legal".into(), vec![("q2".into(), 2)]);
    let w: BTreeMap<DimensionId, Exact> = table_weights(&t, &catalog).unwrap();
    assert_eq!(w.values().cloned().sum::<Exact>(), Exact::from_count(1));
    assert_eq!(w[&"gen-semantic".into()], Exact::ratio(1, 2));
    t.add_dimension("nowhere".into(), vec![("q3".into(), 1)]);
    assert!(table_weights::<f64>(&t, &catalog).is_err());
}
