use super::*;
use crate::grading::GradeTable;
use crate::ids::EvaluatorId;
use crate::scalar::Scalar;
use crate::Exact;

const LONE: EvaluatorRule = EvaluatorRule::LoneDissenter;
const SPLIT: QuestionRule = QuestionRule::SplitPanel;

#[test]
fn lone_dissenter_examples() {
    assert_eq!(evaluator_dispute_flag(&[2, 0, 0], 0, LONE), Ok(true));
    assert_eq!(evaluator_dispute_flag(&[0, 0, 0], 0, LONE), Ok(false));
    assert_eq!(evaluator_dispute_flag(&[1, 2, 0], 0, LONE), Ok(false));
    assert_eq!(evaluator_dispute_flag(&[1], 0, LONE), Err(QualityError::PanelTooSmall(1)));
}

#[test]
fn split_panel_examples() {
    assert_eq!(question_dispute_flag(&[0, 0, 2, 1], SPLIT), Ok(true));
    assert_eq!(question_dispute_flag(&[0, 1, 2, 1], SPLIT), Ok(false));
    assert_eq!(question_dispute_flag(&[0, 0, 1, 2, 3], SPLIT), Ok(true));
    assert_eq!(question_dispute_flag(&[0, 1, 1, 2, 3], SPLIT), Ok(false));
}

#[test]
fn pluggable_rules() {
    assert_eq!(evaluator_dispute_flag(&[3, 0, 1], 0, EvaluatorRule::Outlier { max_gap: 1 }), Ok(true));
    assert_eq!(evaluator_dispute_flag(&[2, 0, 1], 0, EvaluatorRule::Outlier { max_gap: 1 }), Ok(false));
    assert_eq!(question_dispute_flag(&[1, 3], QuestionRule::Spread { min_range: 2 }), Ok(true));
}

fn grid(n: usize, models: usize, questions: usize) -> GradeTable {
    let evs = (0..n).map(|i| format!("e{i}").into()).collect();
    let ms = (0..models).map(|i| format!("m{i}").into()).collect();
    let mut t = GradeTable::new("c".into(), ms, evs);
    t.add_dimension("d".into(), (0..questions).map(|k| (format!("q{k}").into(), 3)).collect());
    for k in 0..questions {
        for i in 0..n {
            for q in 0..models {
                t.set_at(0, k, i, q, Some(1)).unwrap();
            }
        }
    }
    t
}

#[test]
fn evaluator_level_single_flag() {
    // K_j × Q = 2 × 2 = 4; one lone dissent by e0.
    let mut t = grid(3, 2, 2);
    t.set_at(0, 1, 0, 1, Some(0)).unwrap();
    let cfg = DisputeConfig::<Exact>::defaults_for(&t, 5);
    let r = analyze_disputes(&t, &cfg).unwrap();
    assert_eq!(r.evaluators[0].per_dimension[&"d".into()], Exact::ratio(1, 4));
    assert_eq!(r.evaluators[0].overall, Exact::ratio(1, 4));
    assert_eq!(r.evaluators[1].overall, Exact::ratio(0, 1));
    assert_eq!(r.flagged_evaluator_cells.len(), 1);
}

#[test]
fn question_level_formula() {
    // Q = 2, n = 2: model 0 split (G = 1, both evaluators lone dissenters), model 1 unanimous.
    let mut t = grid(2, 2, 1);
    t.set_at(0, 0, 0, 0, Some(0)).unwrap();
    let cfg = DisputeConfig::<Exact>::defaults_for(&t, 1);
    let r = analyze_disputes(&t, &cfg).unwrap();
    assert_eq!(r.questions[0].split_cells, 1);
    assert_eq!(r.questions[0].dissent_flags, 2);
    assert_eq!(r.questions[0].score, Exact::from_count(1));
    assert_eq!(r.questions[0].normalized_score, Exact::ratio(3, 4));
}

#[test]
fn no_question_weight_no_flags_zero() {
    let t = grid(3, 2, 2);
    let mut cfg = DisputeConfig::<Exact>::defaults_for(&t, 1);
    cfg.w1 = Exact::from_count(1);
    cfg.w2 = Exact::from_count(0);
    let r = analyze_disputes(&t, &cfg).unwrap();
    assert!(r.questions.iter().all(|q| q.score == Exact::from_count(0)));
    assert_eq!(r.top, vec!["q0".into()], "ties break by qa_id");
}

#[test]
fn incomplete_panel_rejected() {
    let mut t = grid(3, 2, 1);
    t.set_at(0, 0, 2, 1, None).unwrap();
    let cfg = DisputeConfig::<f64>::defaults_for(&t, 1);
    assert_eq!(analyze_disputes(&t, &cfg), Err(QualityError::IncompletePanel("q0".into())));
}

#[test]
fn lifecycle_examples() {
    let mut p = EvaluatorProfile::new("ev");
    assert_eq!(
        p.apply(LifecycleEvent::Deploy, 0.8),
        Err(LifecycleError::IllegalTransition { from: LifecycleState::Candidate, event: LifecycleEvent::Deploy })
    );
    p.apply(LifecycleEvent::StartTraining, 0.8).unwrap();
    p.apply(LifecycleEvent::BeginTrial, 0.8).unwrap();
    p.record_trial(0.7);
    assert!(matches!(p.apply(LifecycleEvent::PassTrial, 0.8), Err(LifecycleError::BelowThreshold { .. })));
    assert_eq!(p.lifecycle, LifecycleState::Trial);
    p.record_trial(0.85);
    assert_eq!(p.apply(LifecycleEvent::PassTrial, 0.8), Ok(LifecycleState::Deployed));
    assert_eq!(p.apply(LifecycleEvent::FlagHighDispute, 0.8), Ok(LifecycleState::Retraining));
}

fn snapshot(id: &str, panel: &[&str], questions: &[(&str, &str)], grades: u32) -> RoundSnapshot {
    let evs: Vec<EvaluatorId> = panel.iter().map(|e| (*e).into()).collect();
    let mut t = GradeTable::new(id.into(), vec!["m0".into()], evs.clone());
    t.add_dimension("d".into(), questions.iter().map(|(q, _)| ((*q).into(), 2)).collect());
    for k in 0..questions.len() {
        for i in 0..evs.len() {
            t.set_at(0, k, i, 0, Some(grades)).unwrap();
        }
    }
    RoundSnapshot {
        round_id: id.into(),
        closed: true,
        questions: questions.iter().map(|(q, text)| ((*q).into(), (*text).to_owned())).collect(),
        responses: questions.iter().map(|(q, _)| (((*q).into(), "m0".into()), "same".to_owned())).collect(),
        table: t,
    }
}

#[test]
fn tagging_rules() {
    let a = snapshot("a", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "y")], 1);
    let mut b = snapshot("b", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "changed")], 1);
    b.responses.insert(("q1".into(), "m0".into()), "different".into());
    let tags = tag_pairs(&a, &b, &[]).unwrap();
    assert!(tags[0].question_same && !tags[0].response_same[&"m0".into()]);
    assert!(!tags[1].question_same && tags[1].response_same.is_empty());
    let manual = ManualTag {
        qa_id: "q1".into(),
        question_same: true,
        response_same: [("m0".into(), true)].into_iter().collect(),
    };
    let tags = tag_pairs(&a, &b, &[manual]).unwrap();
    assert_eq!(tags[0].tag_source, TagSource::Manual);
    assert!(tags[0].response_same[&"m0".into()]);
    let mut open = a.clone();
    open.closed = false;
    assert_eq!(tag_pairs(&open, &b, &[]), Err(QualityError::RoundNotClosed("a".into())));
}

#[test]
fn degenerate_partition_weights() {
    let a = snapshot("a", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "y")], 1);
    let tags = tag_pairs(&a, &a, &[]).unwrap();
    let p = scenario_partition::<Exact>(&tags, &a, a.table.evaluators(), &"d".into(), None).unwrap();
    assert_eq!(p.w_q, [Exact::from_count(0), Exact::from_count(0), Exact::from_count(1)]);
    assert_eq!(p.w_p, [Exact::from_count(1), Exact::from_count(0)]);
    let f = fluctuation::<Exact>(&a, &a, &[], &"d".into(), None, Statistic::Accuracy).unwrap();
    assert!(f.causes.all_zero());
}

#[test]
fn half_replaced_and_isolated_inconsistency() {
    let a = snapshot("a", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "y")], 1);
    let b = snapshot("b", &["e1", "e2", "e3"], &[("q1", "x"), ("q3", "z")], 1);
    let tags = tag_pairs(&a, &b, &[]).unwrap();
    let p = scenario_partition::<Exact>(&tags, &b, a.table.evaluators(), &"d".into(), None).unwrap();
    assert_eq!(p.w_q[0], Exact::ratio(1, 2));

    let b = snapshot("b", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "y")], 2);
    let f = fluctuation::<Exact>(&a, &b, &[], &"d".into(), None, Statistic::NormalizedGrade).unwrap();
    assert_eq!(f.total_change, Exact::ratio(1, 2));
    assert_eq!(f.causes.evaluator_inconsistency, Exact::ratio(1, 2));
    assert_eq!(f.causes.sum(), f.total_change);
    assert!(f.weights_matched);
}

#[test]
fn general_path_sums_to_total() {
    let a = snapshot("a", &["e1", "e2", "e3"], &[("q1", "x"), ("q2", "y"), ("q4", "w")], 1);
    let b = snapshot("b", &["e1", "e2", "e4", "e5"], &[("q1", "x"), ("q3", "z")], 2);
    let f = fluctuation::<Exact>(&a, &b, &[], &"d".into(), None, Statistic::NormalizedGrade).unwrap();
    assert!(!f.weights_matched);
    assert_eq!(f.causes.sum(), f.total_change);
    assert_eq!(f.before.reconstruction, f.before.direct);
    assert_eq!(f.after.reconstruction, f.after.direct);
}
