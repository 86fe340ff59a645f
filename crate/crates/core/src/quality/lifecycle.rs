use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{CampaignId, EvaluatorId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleState {
    Candidate,
    InTraining,
    Trial,
    Retraining,
    Deployed,
    Suspended,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 6] = [
        LifecycleState::Candidate,
        LifecycleState::InTraining,
        LifecycleState::Trial,
        LifecycleState::Retraining,
        LifecycleState::Deployed,
        LifecycleState::Suspended,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleEvent {
    StartTraining,
    BeginTrial,
    PassTrial,
    FailTrial,
    FlagHighDispute,
    Retrain,
    Deploy,
    Suspend,
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 8] = [
        LifecycleEvent::StartTraining,
        LifecycleEvent::BeginTrial,
        LifecycleEvent::PassTrial,
        LifecycleEvent::FailTrial,
        LifecycleEvent::FlagHighDispute,
        LifecycleEvent::Retrain,
        LifecycleEvent::Deploy,
        LifecycleEvent::Suspend,
    ];
}

use LifecycleEvent as E;
use LifecycleState as S;

/// Every legal `(from, event, to)` edge. Edges into `Deployed` additionally
/// need the trial consistency to reach the threshold.
pub const LIFECYCLE_EDGES: &[(LifecycleState, LifecycleEvent, LifecycleState)] = &[
    (S::Candidate, E::StartTraining, S::InTraining),
    (S::InTraining, E::BeginTrial, S::Trial),
    (S::Retraining, E::BeginTrial, S::Trial),
    (S::Trial, E::PassTrial, S::Deployed),
    (S::Trial, E::FailTrial, S::Retraining),
    (S::Deployed, E::FlagHighDispute, S::Retraining),
    (S::Trial, E::Deploy, S::Deployed),
    (S::Suspended, E::Deploy, S::Deployed),
    (S::Trial, E::Retrain, S::Retraining),
    (S::Deployed, E::Retrain, S::Retraining),
    (S::Suspended, E::Retrain, S::Retraining),
    (S::InTraining, E::Suspend, S::Suspended),
    (S::Trial, E::Suspend, S::Suspended),
    (S::Retraining, E::Suspend, S::Suspended),
    (S::Deployed, E::Suspend, S::Suspended),
];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LifecycleError {
    #[error("event {event:?} is not allowed in state {from:?}")]
    IllegalTransition { from: LifecycleState, event: LifecycleEvent },
    #[error("trial consistency {consistency:?} is below the deployment threshold {threshold}")]
    BelowThreshold { consistency: Option<f64>, threshold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorProfile {
    pub evaluator_id: EvaluatorId,
    pub lifecycle: LifecycleState,
    #[serde(default)]
    pub trial_consistency: Option<f64>,
    /// `C(i)` per campaign.
    #[serde(default)]
    pub dispute_history: Vec<(CampaignId, f64)>,
}

impl EvaluatorProfile {
    pub fn new(evaluator_id: impl Into<EvaluatorId>) -> Self {
        Self {
            evaluator_id: evaluator_id.into(),
            lifecycle: LifecycleState::Candidate,
            trial_consistency: None,
            dispute_history: Vec::new(),
        }
    }

    pub fn record_trial(&mut self, consistency: f64) {
        self.trial_consistency = Some(consistency);
    }

    pub fn record_dispute(&mut self, campaign: CampaignId, c_i: f64) {
        self.dispute_history.push((campaign, c_i));
    }

    /// Applies one event; the profile is untouched on error.
    pub fn apply(&mut self, event: LifecycleEvent, threshold: f64) -> Result<LifecycleState, LifecycleError> {
        let next = next_state(self.lifecycle, event, self.trial_consistency, threshold)?;
        self.lifecycle = next;
        Ok(next)
    }
}

pub fn next_state(
    from: LifecycleState,
    event: LifecycleEvent,
    trial_consistency: Option<f64>,
    threshold: f64,
) -> Result<LifecycleState, LifecycleError> {
    let to = LIFECYCLE_EDGES
        .iter()
        .find(|(f, e, _)| *f == from && *e == event)
        .map(|(_, _, t)| *t)
        .ok_or(LifecycleError::IllegalTransition { from, event })?;
    if to == LifecycleState::Deployed && !trial_consistency.is_some_and(|c| c >= threshold) {
        return Err(LifecycleError::BelowThreshold { consistency: trial_consistency, threshold });
    }
    Ok(to)
}
