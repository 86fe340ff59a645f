mod common;

use lalaeval_core::grading::GradeTable;
use lalaeval_core::quality::{
    analyze_disputes, evaluator_dispute_flag, fluctuation, question_dispute_flag, DisputeConfig, EvaluatorRule,
    QuestionRule, Statistic,
};
use lalaeval_core::synth::{random_round_pair, random_table, regrade_round, replay_round, TableShape};
use lalaeval_core::{Exact, Scalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every panel over grades {0, 1, 2} for `n` evaluators.
fn panels(n: usize) -> Vec<Vec<u32>> {
    (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let g = (code % 3) as u32;
                    code /= 3;
                    g
                })
                .collect()
        })
        .collect()
}

#[test]
fn dispute_flags_match_oracles_exhaustively() {
    for n in 2..=5 {
        for p in panels(n) {
            assert_eq!(question_dispute_flag(&p, QuestionRule::SplitPanel).unwrap(), common::split_panel(&p), "{p:?}");
            for i in 0..n {
                assert_eq!(
                    evaluator_dispute_flag(&p, i, EvaluatorRule::LoneDissenter).unwrap(),
                    common::lone_dissenter(&p, i),
                    "{p:?} evaluator {i}"
                );
            }
        }
    }
}

fn complete_table(seed: u64) -> GradeTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_table(&mut rng, &TableShape { gap_rate: 0.0, ..TableShape::default() })
}

/// Same table with the model columns in reverse order and renamed.
fn permuted_models(t: &GradeTable) -> GradeTable {
    let q = t.model_count();
    let models = (0..q).map(|m| format!("x{}", q - 1 - m).into()).collect();
    let mut p = GradeTable::new(t.campaign_id.clone(), models, t.evaluators().to_vec());
    for (j, d) in t.dimensions().iter().enumerate() {
        p.add_dimension(d.dimension_id.clone(), d.questions.iter().map(|b| (b.qa_id.clone(), b.max_grade)).collect());
        for (k, b) in d.questions.iter().enumerate() {
            for i in 0..t.panel_size() {
                for m in 0..q {
                    p.set_at(j, k, i, q - 1 - m, b.grade(i, m)).unwrap();
                }
            }
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dispute_rates_are_bounded_and_model_symmetric(seed in any::<u64>(), top in 1usize..5) {
        let t = complete_table(seed);
        let cfg = DisputeConfig::<Exact>::defaults_for(&t, top);
        let r = analyze_disputes(&t, &cfg).unwrap();
        let zero = Exact::from_count(0);
        let one = Exact::from_count(1);
        for e in &r.evaluators {
            prop_assert!(e.overall >= zero && e.overall <= one);
            for c in e.per_dimension.values() {
                prop_assert!(*c >= zero && *c <= one);
            }
        }
        for q in &r.questions {
            prop_assert!(q.score >= zero);
        }
        let p = analyze_disputes(&permuted_models(&t), &cfg).unwrap();
        prop_assert_eq!(&r.top, &p.top);
        for (a, b) in r.evaluators.iter().zip(&p.evaluators) {
            prop_assert_eq!(&a.overall, &b.overall);
        }
        for (a, b) in r.questions.iter().zip(&p.questions) {
            prop_assert_eq!(&a.score, &b.score);
        }
    }

    #[test]
    fn fluctuation_identities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = TableShape { min_panel: 2, ..TableShape::default() };
        let (a, b) = random_round_pair(&mut rng, &shape);
        for stat in [Statistic::Accuracy, Statistic::NormalizedGrade] {
            let f = fluctuation::<Exact>(&a, &b, &[], &"d0".into(), None, stat).unwrap();
            prop_assert_eq!(&f.before.reconstruction, &f.before.direct);
            prop_assert_eq!(&f.after.reconstruction, &f.after.direct);
            prop_assert_eq!(f.causes.sum(), f.total_change.clone());

            let ff = fluctuation::<f64>(&a, &b, &[], &"d0".into(), None, stat).unwrap();
            prop_assert!((ff.before.reconstruction - ff.before.direct).abs() < 1e-12);
            prop_assert!((ff.causes.sum() - ff.total_change).abs() < 1e-9);

            let same = fluctuation::<Exact>(&a, &replay_round(&a, "again"), &[], &"d0".into(), None, stat).unwrap();
            prop_assert!(same.causes.all_zero());

            let regraded = regrade_round(&mut rng, &a, "regraded");
            let m = fluctuation::<Exact>(&a, &regraded, &[], &"d0".into(), None, stat).unwrap();
            prop_assert!(m.weights_matched);
            prop_assert_eq!(m.causes.sum(), m.total_change.clone());
        }
    }
}
