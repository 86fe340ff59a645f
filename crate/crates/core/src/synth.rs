//! Seeded synthetic grade tables and round pairs for simulation and
//! property checks.

use std::collections::BTreeMap;

use rand::Rng;

use crate::grading::GradeTable;
use crate::ids::{EvaluatorId, ModelId, QaId};
use crate::quality::RoundSnapshot;

/// Upper bounds for a random table. Each bound is at least 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TableShape {
    pub max_dimensions: usize,
    pub max_questions: usize,
    pub min_panel: usize,
    pub max_panel: usize,
    pub max_models: usize,
    pub ts_choices: Vec<u32>,
    /// Probability that a cell is left ungraded.
    pub gap_rate: f64,
}

impl Default for TableShape {
    fn default() -> Self {
        Self {
            max_dimensions: 4,
            max_questions: 6,
            min_panel: 2,
            max_panel: 5,
            max_models: 4,
            ts_choices: vec![1, 2, 3],
            gap_rate: 0.0,
        }
    }
}

fn ids<T: From<String>>(prefix: &str, n: usize) -> Vec<T> {
    (0..n).map(|i| T::from(format!("{prefix}{i}"))).collect()
}

/// A random table; every dimension has at least one fully graded question
/// per model so that grades and accuracy are defined.
pub fn random_table(rng: &mut impl Rng, shape: &TableShape) -> GradeTable {
    let dims = rng.random_range(1..=shape.max_dimensions);
    let n = rng.random_range(shape.min_panel..=shape.max_panel);
    let models = rng.random_range(1..=shape.max_models);
    let mut t = GradeTable::new("synthetic".into(), ids("m", models), ids("e", n));
    for j in 0..dims {
        let k = rng.random_range(1..=shape.max_questions);
        let qs: Vec<(QaId, u32)> = (0..k)
            .map(|q| {
                let ts = shape.ts_choices[rng.random_range(0..shape.ts_choices.len())];
                (QaId::from(format!("d{j}-q{q}")), ts)
            })
            .collect();
        t.add_dimension(format!("d{j}").into(), qs.clone());
        for (kk, (_, ts)) in qs.iter().enumerate() {
            for i in 0..n {
                for m in 0..models {
                    let gap = kk > 0 && rng.random_bool(shape.gap_rate);
                    let g = if gap { None } else { Some(rng.random_range(0..=*ts)) };
                    t.set_at(j, kk, i, m, g).expect("grade within TS");
                }
            }
        }
    }
    t
}

/// Two closed rounds over one dimension `d0` with partly shared questions,
/// responses and evaluators. Panels are complete.
pub fn random_round_pair(rng: &mut impl Rng, shape: &TableShape) -> (RoundSnapshot, RoundSnapshot) {
    let models: Vec<ModelId> = ids("m", rng.random_range(1..=shape.max_models));
    let pool: Vec<EvaluatorId> = ids("e", shape.max_panel * 2);
    let question_pool = shape.max_questions * 2;
    let ts: Vec<u32> =
        (0..question_pool).map(|_| shape.ts_choices[rng.random_range(0..shape.ts_choices.len())]).collect();

    let draw_round = |rng: &mut dyn rand::RngCore, id: &str| {
        let n = rng.random_range(shape.min_panel..=shape.max_panel);
        let mut panel: Vec<EvaluatorId> =
            rand::seq::index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i].clone()).collect();
        panel.sort();
        let k = rng.random_range(1..=shape.max_questions);
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, question_pool, k).into_vec();
        picked.sort_unstable();
        (id.to_owned(), panel, picked)
    };

    let mut rounds = Vec::new();
    for id in ["round-a", "round-b"] {
        let (id, panel, picked) = draw_round(rng, id);
        let mut t = GradeTable::new(id.as_str().into(), models.clone(), panel.clone());
        t.add_dimension("d0".into(), picked.iter().map(|&q| (QaId::from(format!("q{q}")), ts[q])).collect());
        let mut questions = BTreeMap::new();
        let mut responses = BTreeMap::new();
        for (kk, &q) in picked.iter().enumerate() {
            let qa = QaId::from(format!("q{q}"));
            // Text variants are drawn from a tiny alphabet so rounds often agree.
            questions.insert(qa.clone(), format!("question {q} v{}", rng.random_range(0..2)));
            for (m, model) in models.iter().enumerate() {
                responses.insert((qa.clone(), model.clone()), format!("response v{}", rng.random_range(0..2)));
                for i in 0..panel.len() {
                    t.set_at(0, kk, i, m, Some(rng.random_range(0..=ts[q]))).expect("grade within TS");
                }
            }
        }
        rounds.push(RoundSnapshot { round_id: id.as_str().into(), closed: true, questions, responses, table: t });
    }
    let b = rounds.pop().expect("two rounds");
    let a = rounds.pop().expect("two rounds");
    (a, b)
}

/// Copy of `a` with round id `id` and identical content.
pub fn replay_round(a: &RoundSnapshot, id: &str) -> RoundSnapshot {
    let mut b = a.clone();
    b.round_id = id.into();
    b
}

/// Copy of `a` whose questions, responses and panel are unchanged but whose
/// grades are redrawn, so only the weights match.
pub fn regrade_round(rng: &mut impl Rng, a: &RoundSnapshot, id: &str) -> RoundSnapshot {
    let mut b = replay_round(a, id);
    let dims = b.table.dimensions().len();
    for j in 0..dims {
        let qs: Vec<u32> = b.table.dimensions()[j].questions.iter().map(|q| q.max_grade).collect();
        for (k, ts) in qs.into_iter().enumerate() {
            for i in 0..b.table.panel_size() {
                for m in 0..b.table.model_count() {
                    b.table.set_at(j, k, i, m, Some(rng.random_range(0..=ts))).expect("grade within TS");
                }
            }
        }
    }
    b
}
