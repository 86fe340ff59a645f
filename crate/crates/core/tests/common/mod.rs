//! Brute-force oracles that read a grade table only through its CSV export,
//! so they share no code path with the library aggregations.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lalaeval_core::grading::GradeTable;

#[derive(Debug, Clone)]
pub struct Cell {
    pub dimension: String,
    pub question: String,
    pub evaluator: String,
    pub model: String,
    pub grade: Option<u64>,
    pub ts: u64,
}

pub fn cells(table: &GradeTable) -> Vec<Cell> {
    let text = table.to_csv();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            Cell {
                dimension: rec[0].to_owned(),
                question: rec[1].to_owned(),
                evaluator: rec[2].to_owned(),
                model: rec[3].to_owned(),
                grade: if rec[4].is_empty() { None } else { Some(rec[4].parse().unwrap()) },
                ts: rec[5].parse().unwrap(),
            }
        })
        .collect()
}

/// `(dimension, model) -> Σ AS / Σ TS` over graded cells.
pub fn grades(cells: &[Cell]) -> BTreeMap<(String, String), f64> {
    let mut sums: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for c in cells {
        if let Some(g) = c.grade {
            let e = sums.entry((c.dimension.clone(), c.model.clone())).or_default();
            e.0 += g;
            e.1 += c.ts;
        }
    }
    sums.into_iter().map(|(k, (a, t))| (k, a as f64 / t as f64)).collect()
}

/// `(dimension, model) -> share of graded cells that are non-zero`.
pub fn accuracy(cells: &[Cell]) -> BTreeMap<(String, String), f64> {
    let mut counts: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for c in cells {
        if let Some(g) = c.grade {
            let e = counts.entry((c.dimension.clone(), c.model.clone())).or_default();
            e.0 += u64::from(g > 0);
            e.1 += 1;
        }
    }
    counts.into_iter().map(|(k, (a, t))| (k, a as f64 / t as f64)).collect()
}

/// `dimension -> share of (question, model) cells with more than one distinct grade`.
pub fn disagreement(cells: &[Cell]) -> BTreeMap<String, f64> {
    let mut seen: BTreeMap<(String, String, String), BTreeSet<u64>> = BTreeMap::new();
    for c in cells {
        let e = seen.entry((c.dimension.clone(), c.question.clone(), c.model.clone())).or_default();
        if let Some(g) = c.grade {
            e.insert(g);
        }
    }
    let mut per_dim: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for ((d, _, _), set) in seen {
        let e = per_dim.entry(d).or_default();
        e.0 += u64::from(set.len() > 1);
        e.1 += 1;
    }
    per_dim.into_iter().map(|(d, (s, t))| (d, s as f64 / t as f64)).collect()
}

/// Weighted total per model.
pub fn totals(grades: &BTreeMap<(String, String), f64>, weights: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for ((d, m), g) in grades {
        *out.entry(m.clone()).or_default() += weights[d] * g;
    }
    out
}

/// Lone dissenter: `i` is on one side of the zero / non-zero split and
/// every other evaluator is on the other side.
pub fn lone_dissenter(panel: &[u32], i: usize) -> bool {
    let mut me_zero = false;
    let mut others_zero = 0usize;
    for (j, g) in panel.iter().enumerate() {
        if j == i {
            me_zero = *g == 0;
        } else if *g == 0 {
            others_zero += 1;
        }
    }
    let others = panel.len() - 1;
    if me_zero {
        others_zero == 0
    } else {
        others_zero == others
    }
}

/// Split panel: at least `floor(n/2)` zeros and at least `floor(n/2)` non-zeros.
pub fn split_panel(panel: &[u32]) -> bool {
    let zeros = panel.iter().filter(|g| **g == 0).count();
    let half = panel.len() / 2;
    zeros >= half && panel.len() - zeros >= half
}
