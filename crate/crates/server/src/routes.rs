use std::collections::BTreeSet;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::Utc;
use lalaeval_core::analytics::{build_report, table_weights, ReportFormat};
use lalaeval_core::campaign::{BlindedTask, Campaign, CampaignStatus, ModelUnderTest};
use lalaeval_core::grading::{build_grade_table, GradeKey, GradeRecord};
use lalaeval_core::ids::{CampaignId, EvaluatorId, PlanId, QaId};
use lalaeval_core::qa_bank::Quota;
use lalaeval_core::store::Store;
use lalaeval_core::Exact;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::auth::{Admin, Caller};
use crate::error::ApiError;
use crate::AppState;

fn open(state: &AppState) -> Result<Store, ApiError> {
    Ok(Store::open(state.root.as_path())?)
}

/// Positions the evaluator has already graded on a question; values stay hidden.
fn graded_positions(
    campaign: &Campaign,
    ledger: &lalaeval_core::grading::GradeLedger,
    qa: &QaId,
    evaluator: &EvaluatorId,
) -> Vec<usize> {
    let Some(layout) = campaign.blinding.as_ref().and_then(|b| b.get(qa)) else { return Vec::new() };
    layout
        .iter()
        .enumerate()
        .filter(|(_, model)| {
            let key = GradeKey {
                campaign_id: campaign.id.clone(),
                qa_id: qa.clone(),
                evaluator_id: evaluator.clone(),
                model_id: (*model).clone(),
            };
            ledger.effective(&key).is_some()
        })
        .map(|(p, _)| p + 1)
        .collect()
}

pub async fn evaluator_tasks(
    State(state): State<AppState>,
    caller: Caller,
    Path(evaluator): Path<EvaluatorId>,
) -> Result<Json<Value>, ApiError> {
    caller.may_act_as(&evaluator)?;
    let _guard = state.lock();
    let store = open(&state)?;
    let mut tasks = Vec::new();
    for id in store.campaign_ids() {
        let campaign = store.campaign(&id)?;
        if !matches!(campaign.status, CampaignStatus::TasksIssued | CampaignStatus::Grading)
            || !campaign.panel.contains(&evaluator)
        {
            continue;
        }
        let ledger = store.ledger(&id)?;
        for task in campaign.tasks_for(&evaluator)? {
            let graded = graded_positions(&campaign, &ledger, &task.qa_id, &evaluator);
            tasks.push(task_json(task, graded));
        }
    }
    Ok(Json(json!({"evaluator_id": evaluator, "tasks": tasks})))
}

fn task_json(task: BlindedTask, graded: Vec<usize>) -> Value {
    let mut v = serde_json::to_value(task).expect("tasks serialize");
    v["graded_positions"] = json!(graded);
    v
}

#[derive(Debug, Deserialize)]
pub struct GradeSubmission {
    pub campaign_id: CampaignId,
    pub qa_id: QaId,
    /// Needed only when an admin submits on an evaluator's behalf.
    #[serde(default)]
    pub evaluator_id: Option<EvaluatorId>,
    pub position: usize,
    pub grade: i64,
    #[serde(default)]
    pub amended: bool,
}

pub async fn submit_grade(
    State(state): State<AppState>,
    caller: Caller,
    body: Result<Json<GradeSubmission>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let evaluator = match (&body.evaluator_id, &caller.evaluator_id) {
        (Some(e), _) => e.clone(),
        (None, Some(e)) => e.clone(),
        (None, None) => return Err(ApiError::bad_request("evaluator_id is required for admin submissions")),
    };
    caller.may_act_as(&evaluator)?;

    let _guard = state.lock();
    let mut store = open(&state)?;
    let mut campaign = store.campaign(&body.campaign_id)?;
    let catalog = store.catalog()?;
    if !campaign.panel.contains(&evaluator) {
        return Err(ApiError::forbidden("evaluator is not on this campaign's panel"));
    }
    let question = campaign
        .question(&body.qa_id)
        .cloned()
        .ok_or_else(|| lalaeval_core::campaign::CampaignError::UnknownQaId(body.qa_id.clone()))?;
    if !campaign.accepts_grades_from(&body.qa_id, &evaluator) {
        return Err(lalaeval_core::campaign::CampaignError::WrongStatus {
            expected: vec![CampaignStatus::TasksIssued, CampaignStatus::Grading],
            actual: campaign.status,
        }
        .into());
    }
    let model = campaign.model_at(&body.qa_id, body.position)?.clone();
    let rubric =
        catalog.rubrics.version(&question.rubric_id, question.rubric_version).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StoreCorrupt", "rubric version missing")
        })?;
    let mut ledger = store.ledger(&campaign.id)?;

    let key = GradeKey {
        campaign_id: campaign.id.clone(),
        qa_id: body.qa_id.clone(),
        evaluator_id: evaluator.clone(),
        model_id: model.clone(),
    };
    if !body.amended {
        if let Some((seq, existing)) = ledger.effective(&key) {
            if existing.grade == body.grade {
                let out = json!({"status": "unchanged", "seq": seq, "campaign_id": campaign.id, "qa_id": body.qa_id, "position": body.position});
                return Ok((StatusCode::OK, Json(out)).into_response());
            }
        }
    }
    let record = GradeRecord {
        campaign_id: campaign.id.clone(),
        dimension_id: question.dimension_id.clone(),
        qa_id: body.qa_id.clone(),
        evaluator_id: evaluator,
        model_id: model,
        grade: body.grade,
        submitted_at: Utc::now(),
        amended: body.amended,
        rubric_version: question.rubric_version,
    };
    let seq = ledger.append_grade(record, &rubric, &campaign)?;
    let line = ledger.lines().last().expect("just appended");
    store.append_ledger(&campaign.id, line)?;
    if campaign.status == CampaignStatus::TasksIssued {
        campaign.begin_grading()?;
        store.save_campaign(&campaign)?;
    }
    let out = json!({"status": "recorded", "seq": seq, "campaign_id": campaign.id, "qa_id": body.qa_id, "position": body.position});
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

pub async fn progress(
    State(state): State<AppState>,
    _caller: Caller,
    Path(id): Path<CampaignId>,
) -> Result<Json<Value>, ApiError> {
    let _guard = state.lock();
    let store = open(&state)?;
    let (campaign, _, table) = store.grade_table(&id)?;
    let per_task = campaign.models.len();
    let mut rows = Vec::new();
    for (i, e) in table.evaluators().iter().enumerate() {
        let mut graded = 0usize;
        let mut done_tasks = 0usize;
        for q in table.dimensions().iter().flat_map(|d| &d.questions) {
            let n = (0..table.model_count()).filter(|m| q.grade(i, *m).is_some()).count();
            graded += n;
            done_tasks += usize::from(n == per_task);
        }
        rows.push(json!({
            "evaluator_id": e,
            "graded": graded,
            "total": campaign.sampled.len() * per_task,
            "completed_tasks": done_tasks,
            "total_tasks": campaign.sampled.len(),
        }));
    }
    Ok(Json(json!({"campaign_id": id, "status": campaign.status, "evaluators": rows})))
}

#[derive(Debug, Default, Deserialize)]
pub struct ReportQuery {
    #[serde(default)]
    pub format: Option<String>,
}

pub async fn report(
    State(state): State<AppState>,
    _admin: Admin,
    Path(id): Path<CampaignId>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let (format, mime) = match q.format.as_deref().unwrap_or("json") {
        "json" => (ReportFormat::Json, "application/json"),
        "markdown" | "md" => (ReportFormat::Markdown, "text/markdown; charset=utf-8"),
        "csv" => (ReportFormat::Csv, "text/csv; charset=utf-8"),
        other => return Err(ApiError::bad_request(format!("unknown format `{other}`"))),
    };
    let _guard = state.lock();
    let store = open(&state)?;
    let catalog = store.catalog()?;
    let (campaign, _, table) = store.grade_table(&id)?;
    let weights = table_weights::<Exact>(&table, &catalog)?;
    let report = build_report(&table, &campaign, &catalog, &weights)?;
    Ok(([(header::CONTENT_TYPE, mime)], report.render(format)).into_response())
}

#[derive(Debug, Deserialize)]
pub struct CreateCampaign {
    pub id: CampaignId,
    /// Either a stored plan id (latest revision) or explicit quotas.
    #[serde(default)]
    pub plan_id: Option<PlanId>,
    #[serde(default)]
    pub quotas: Option<Vec<Quota>>,
    pub models: Vec<ModelUnderTest>,
    pub panel: Vec<EvaluatorId>,
    pub seed: u64,
}

pub async fn create_campaign(
    State(state): State<AppState>,
    _admin: Admin,
    body: Result<Json<CreateCampaign>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let _guard = state.lock();
    let mut store = open(&state)?;
    let bank = store.bank()?;
    let catalog = store.catalog()?;
    let quotas = match (body.quotas, &body.plan_id) {
        (Some(q), None) => q,
        (None, Some(p)) => bank
            .latest_plan(p)
            .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, "UnknownPlan", e.to_string()))?
            .quotas
            .clone(),
        _ => return Err(ApiError::bad_request("give exactly one of plan_id and quotas")),
    };
    let mut campaign = Campaign::new(body.id, quotas, body.models, body.panel, body.seed)?;
    if store.has_campaign(&campaign.id) {
        return Err(lalaeval_core::store::StoreError::CampaignExists(campaign.id.clone()).into());
    }
    let sampled = campaign.sample(&bank, &catalog)?;
    store.create_campaign(&campaign)?;
    let out = json!({"id": campaign.id, "status": campaign.status, "sampled_qa_ids": sampled});
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

pub async fn close_campaign(
    State(state): State<AppState>,
    _admin: Admin,
    Path(id): Path<CampaignId>,
) -> Result<Json<Value>, ApiError> {
    let _guard = state.lock();
    let mut store = open(&state)?;
    let mut campaign = store.campaign(&id)?;
    campaign.close()?;
    store.save_campaign(&campaign)?;
    let ledger = store.ledger(&id)?;
    let gaps = build_grade_table(&ledger, &campaign).gaps().len();
    let evaluators: BTreeSet<_> = campaign.panel.iter().collect();
    Ok(Json(json!({"id": id, "status": campaign.status, "gaps": gaps, "panel_size": evaluators.len()})))
}
