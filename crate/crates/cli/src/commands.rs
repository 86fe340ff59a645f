use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write as _};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::Utc;
use lalaeval_core::analytics::{build_report, report_from_published, table_weights, PublishedResults, ReportFormat};
use lalaeval_core::campaign::{Campaign, CampaignError, ModelUnderTest};
use lalaeval_core::fixtures;
use lalaeval_core::grading::GradeTable;
use lalaeval_core::ids::{CampaignId, DimensionId, EvaluatorId, ModelId, PlanId, QaId};
use lalaeval_core::qa_bank::{Bank, QaDraft, QaStatus, Quota, Verdict};
use lalaeval_core::quality::{
    analyze_disputes, fluctuation, DisputeConfig, ManualTag, QuestionScore, RoundSnapshot, Statistic,
};
use lalaeval_core::store::{sha256_hex, Store};
use lalaeval_core::taxonomy::Catalog;
use lalaeval_core::Exact;
use lalaeval_server::ServeConfig;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::fetch::HttpFetcher;
use crate::{
    BankCmd, CampaignCmd, Cli, Command, Format, QualityCmd, RankingArg, ReportCmd, ServeArgs, StatArg, TaxonomyCmd,
    VerdictArg,
};

type Out = Result<String, CliError>;

pub fn run(cli: &Cli) -> Out {
    let store = cli.store_path();
    match &cli.command {
        Command::Taxonomy(cmd) => taxonomy(cli, &store, cmd),
        Command::Bank(cmd) => bank(cli, &store, cmd),
        Command::Campaign(cmd) => campaign(cli, &store, cmd),
        Command::Report(ReportCmd::Emit { campaign, fixture }) => {
            report(cli, &store, campaign.as_deref(), fixture.as_deref())
        }
        Command::Quality(cmd) => quality(cli, &store, cmd),
        Command::Serve(args) => serve(&store, args),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse { path: path.to_owned(), message: e.to_string() })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

// ---- taxonomy ----

fn checked_catalog(catalog: &Catalog) -> Result<(), CliError> {
    let violations = catalog.validate();
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> =
        violations.iter().map(|v| serde_json::to_string(v).expect("violations serialize")).collect();
    Err(CliError::invalid(format!("catalog has {} violation(s):\n{}", lines.len(), lines.join("\n"))))
}

fn taxonomy(cli: &Cli, root: &Path, cmd: &TaxonomyCmd) -> Out {
    match cmd {
        TaxonomyCmd::Validate { file } => {
            let catalog = match file {
                Some(p) => Catalog::from_json(&read(p)?)?,
                None => Store::open(root)?.catalog()?,
            };
            checked_catalog(&catalog)?;
            let summary = json!({
                "valid": true,
                "nodes": catalog.taxonomy.len(),
                "dimensions": catalog.dimensions.len(),
                "rubrics": catalog.rubrics.iter().count(),
            });
            Ok(match format_or(cli, Format::Text) {
                Format::Json => pretty(&summary),
                _ => format!(
                    "catalog valid: {} taxonomy nodes, {} dimensions\n",
                    catalog.taxonomy.len(),
                    catalog.dimensions.len()
                ),
            })
        }
        TaxonomyCmd::Import { file } => {
            let catalog = match file {
                Some(p) => Catalog::from_json(&read(p)?)?,
                None => fixtures::logistics_catalog(),
            };
            checked_catalog(&catalog)?;
            let mut resynced = Vec::new();
            if Store::exists(root) {
                let mut store = Store::open(root)?;
                store.save_catalog(&catalog)?;
                let mut bank = store.bank()?;
                resynced = bank.sync_rubrics(&catalog, Utc::now());
                if !resynced.is_empty() {
                    store.save_bank(&bank)?;
                }
            } else {
                Store::init(root, &catalog)?;
            }
            Ok(match format_or(cli, Format::Text) {
                Format::Json => {
                    pretty(&json!({"store": root, "dimensions": catalog.dimensions.len(), "reinspection": resynced}))
                }
                _ => {
                    let mut s = format!("catalog installed in {}\n", root.display());
                    if !resynced.is_empty() {
                        let _ =
                            writeln!(s, "{} pair(s) flagged for re-inspection after a rubric change", resynced.len());
                    }
                    s
                }
            })
        }
    }
}

// ---- bank ----

fn parse_drafts(path: &Path) -> Result<Vec<QaDraft>, CliError> {
    let text = read(path)?;
    let bad = |message: String| CliError::Parse { path: path.to_owned(), message };
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Array(items)) => {
            items.into_iter().map(|v| serde_json::from_value(v).map_err(|e| bad(e.to_string()))).collect()
        }
        Ok(v) => Ok(vec![serde_json::from_value(v).map_err(|e| bad(e.to_string()))?]),
        Err(_) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(format!("line {}: {e}", i + 1))))
            .collect(),
    }
}

fn bank(cli: &Cli, root: &Path, cmd: &BankCmd) -> Out {
    let mut store = Store::open(root)?;
    let fmt = format_or(cli, Format::Text);
    match cmd {
        BankCmd::Submit { file, request_inspection } => {
            let drafts = parse_drafts(file)?;
            let catalog = store.catalog()?;
            let mut bank = store.bank()?;
            let mut ids = Vec::new();
            for draft in drafts {
                let now = Utc::now();
                let id = bank.submit(draft, &catalog, now)?;
                if *request_inspection {
                    bank.request_inspection(&id, now)?;
                }
                ids.push(id);
            }
            store.save_bank(&bank)?;
            Ok(id_list(fmt, "qa_ids", &ids))
        }
        BankCmd::Inspect { id, verdict, inspector, notes } => {
            let id = QaId::from(id.as_str());
            let mut bank = store.bank()?;
            let now = Utc::now();
            if bank.get(&id).map(|p| p.status) == Some(QaStatus::Draft) {
                bank.request_inspection(&id, now)?;
            }
            let verdict = match verdict {
                VerdictArg::Pass => Verdict::Pass,
                VerdictArg::Fail => Verdict::Fail,
            };
            let status = bank.inspect(&id, verdict, &inspector.as_str().into(), notes.as_str(), now)?;
            store.save_bank(&bank)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"qa_id": id, "status": status})),
                _ => format!("{id}: {}\n", status.as_str()),
            })
        }
        BankCmd::Gap { plan } => {
            let bank = store.bank()?;
            let plan = bank.latest_plan(&PlanId::from(plan.as_str()))?;
            let gaps = bank.plan_gap_report(plan);
            Ok(match fmt {
                Format::Json => {
                    let rows: Vec<Value> = gaps
                        .iter()
                        .map(|(s, g)| {
                            json!({"dimension_id": s.dimension_id, "difficulty": s.difficulty, "target": g.target,
                                   "active_count": g.active_count, "deficit": g.deficit})
                        })
                        .collect();
                    pretty(&json!({"plan_id": plan.id, "revision": plan.revision, "strata": rows}))
                }
                Format::Csv => {
                    let mut s = "dimension_id,difficulty,target,active_count,deficit\n".to_owned();
                    for (st, g) in &gaps {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{}",
                            st.dimension_id, st.difficulty, g.target, g.active_count, g.deficit
                        );
                    }
                    s
                }
                _ => {
                    let mut s = format!("plan {} revision {}\n", plan.id, plan.revision);
                    for (st, g) in &gaps {
                        let _ =
                            writeln!(s, "{st}: target {} active {} deficit {}", g.target, g.active_count, g.deficit);
                    }
                    s
                }
            })
        }
        BankCmd::Export { status } => {
            let filter = status
                .iter()
                .map(|s| QaStatus::parse(s).ok_or_else(|| CliError::invalid(format!("unknown status `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(store.bank()?.export_jsonl(&filter))
        }
        BankCmd::Import { file, builtin: _ } => {
            let imported = match file {
                Some(p) => {
                    let f = fs::File::open(p).map_err(|source| CliError::Read { path: p.clone(), source })?;
                    Bank::import_jsonl(BufReader::new(f))?
                }
                None => Bank::import_jsonl(fixtures::SEED_BANK_JSONL.as_bytes())?,
            };
            let mut bank = imported;
            bank.set_plans(store.bank()?.plans().to_vec());
            store.save_bank(&bank)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"imported": bank.len()})),
                _ => format!("imported {} pair(s)\n", bank.len()),
            })
        }
        BankCmd::Plan { id, quotas, criteria } => {
            let quotas: Vec<Quota> = parse_json(quotas)?;
            let catalog = store.catalog()?;
            let mut bank = store.bank()?;
            let revision = bank.add_plan_revision(id.as_str().into(), quotas, criteria.clone(), &catalog)?;
            store.save_bank(&bank)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"plan_id": id, "revision": revision})),
                _ => format!("plan {id} revision {revision}\n"),
            })
        }
    }
}

fn id_list<T: serde::Serialize + std::fmt::Display>(fmt: Format, key: &str, ids: &[T]) -> String {
    match fmt {
        Format::Json => pretty(&json!({ key: ids })),
        _ => ids.iter().map(|id| format!("{id}\n")).collect(),
    }
}

// ---- campaign ----

#[derive(Debug, Deserialize)]
struct CampaignSpec {
    id: CampaignId,
    #[serde(default)]
    plan_id: Option<PlanId>,
    #[serde(default)]
    quotas: Option<Vec<Quota>>,
    models: Vec<ModelUnderTest>,
    panel: Vec<EvaluatorId>,
    #[serde(default)]
    seed: Option<u64>,
}

fn campaign(cli: &Cli, root: &Path, cmd: &CampaignCmd) -> Out {
    let mut store = Store::open(root)?;
    let fmt = format_or(cli, Format::Text);
    match cmd {
        CampaignCmd::Create { spec } => {
            let spec: CampaignSpec = parse_json(spec)?;
            let quotas = match (spec.quotas, &spec.plan_id) {
                (Some(q), None) => q,
                (None, Some(p)) => store.bank()?.latest_plan(p)?.quotas.clone(),
                _ => return Err(CliError::invalid("campaign spec needs exactly one of `plan_id` and `quotas`")),
            };
            let seed = cli
                .seed
                .or(spec.seed)
                .ok_or_else(|| CliError::invalid("no seed: pass --seed or set `seed` in the spec"))?;
            let c = Campaign::new(spec.id, quotas, spec.models, spec.panel, seed)?;
            store.create_campaign(&c)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"id": c.id, "status": c.status, "seed": c.seed})),
                _ => format!("campaign {} created ({})\n", c.id, c.status),
            })
        }
        CampaignCmd::Sample(r) => {
            let mut c = store.campaign(&r.campaign.as_str().into())?;
            if let Some(seed) = cli.seed {
                c.seed = seed;
            }
            let ids = c.sample(&store.bank()?, &store.catalog()?)?;
            store.save_campaign(&c)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"campaign_id": c.id, "seed": c.seed, "sampled_qa_ids": ids})),
                _ => id_list(fmt, "sampled_qa_ids", &ids),
            })
        }
        CampaignCmd::Ingest { campaign, file, fetch: _ } => {
            let mut c = store.campaign(&campaign.campaign.as_str().into())?;
            let rows = match file {
                Some(p) => {
                    let f = fs::File::open(p).map_err(|source| CliError::Read { path: p.clone(), source })?;
                    Campaign::parse_responses_jsonl(BufReader::new(f))?
                }
                None => c.fetch_missing(&HttpFetcher::new(Duration::from_secs(120)), Utc::now())?,
            };
            match c.ingest_responses(rows) {
                Ok(n) => {
                    store.save_campaign(&c)?;
                    Ok(match fmt {
                        Format::Json => pretty(&json!({"campaign_id": c.id, "ingested": n, "status": c.status})),
                        _ => format!("ingested {n} response(s); campaign {}\n", c.status),
                    })
                }
                // Complete rows are kept; the error lists what is still missing.
                Err(CampaignError::IncompleteMatrix { missing }) => {
                    store.save_campaign(&c)?;
                    Err(CampaignError::IncompleteMatrix { missing }.into())
                }
                Err(e) => Err(e.into()),
            }
        }
        CampaignCmd::Blind(r) => {
            let mut c = store.campaign(&r.campaign.as_str().into())?;
            if cli.seed.is_some_and(|s| s != c.seed) {
                return Err(CliError::invalid(format!(
                    "campaign {} was sampled with seed {}; blinding reuses it",
                    c.id, c.seed
                )));
            }
            let layout = c.blind()?.clone();
            store.save_campaign(&c)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"campaign_id": c.id, "seed": c.seed, "blinding": layout})),
                _ => {
                    let mut s = String::new();
                    for (qa, models) in &layout {
                        let names: Vec<&str> = models.iter().map(ModelId::as_str).collect();
                        let _ = writeln!(s, "{qa}: {}", names.join(" "));
                    }
                    s
                }
            })
        }
        CampaignCmd::Issue(r) => {
            let mut c = store.campaign(&r.campaign.as_str().into())?;
            let tasks = c.issue()?;
            store.save_campaign(&c)?;
            Ok(match fmt {
                Format::Json => pretty(&json!({"campaign_id": c.id, "tasks": tasks})),
                _ => format!("issued {} task(s) to {} evaluator(s)\n", tasks.len(), c.panel.len()),
            })
        }
        CampaignCmd::Close(r) => {
            let id: CampaignId = r.campaign.as_str().into();
            let mut c = store.campaign(&id)?;
            c.close()?;
            store.save_campaign(&c)?;
            let (_, _, table) = store.grade_table(&id)?;
            let gaps = table.gaps().len();
            Ok(match fmt {
                Format::Json => pretty(&json!({"campaign_id": id, "status": c.status, "gaps": gaps})),
                _ => format!("campaign {id} closed with {gaps} ungraded cell(s)\n"),
            })
        }
    }
}

// ---- report ----

fn report_format(fmt: Format) -> ReportFormat {
    match fmt {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
        Format::Text | Format::Markdown => ReportFormat::Markdown,
    }
}

fn report(cli: &Cli, root: &Path, campaign: Option<&str>, fixture: Option<&str>) -> Out {
    let fmt = report_format(format_or(cli, Format::Markdown));
    match (campaign, fixture) {
        (Some(id), _) => {
            let store = Store::open(root)?;
            let catalog = store.catalog()?;
            let (c, _, table) = store.grade_table(&id.into())?;
            let weights = table_weights::<Exact>(&table, &catalog)?;
            Ok(build_report(&table, &c, &catalog, &weights)?.render(fmt))
        }
        (None, Some(name)) => {
            // The built-in name needs no store; anything else is a file path.
            let (text, label) = if name == fixtures::PUBLISHED_FIXTURE {
                (fixtures::PUBLISHED_RESULTS_JSON.to_owned(), "published_results.json".to_owned())
            } else {
                let p = PathBuf::from(name);
                let label = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_else(|| name.to_owned());
                (read(&p)?, label)
            };
            let published = PublishedResults::from_json(&text)
                .map_err(|e| CliError::Parse { path: PathBuf::from(name), message: e.to_string() })?;
            let catalog =
                if Store::exists(root) { Store::open(root)?.catalog()? } else { fixtures::logistics_catalog() };
            let mut report = report_from_published::<Exact>(&published, &catalog, name)?;
            report.fixture_hashes.insert(label, sha256_hex(text.as_bytes()));
            Ok(report.render(fmt))
        }
        (None, None) => Err(CliError::invalid("give --campaign or --fixture")),
    }
}

// ---- quality ----

fn round(store: &Store, id: &str) -> Result<(Campaign, GradeTable), CliError> {
    let (c, _, table) = store.grade_table(&id.into())?;
    Ok((c, table))
}

fn quality(cli: &Cli, root: &Path, cmd: &QualityCmd) -> Out {
    let store = Store::open(root)?;
    let fmt = format_or(cli, Format::Markdown);
    match cmd {
        QualityCmd::Dispute { round: id, top, ranking } => {
            let catalog = store.catalog()?;
            let (_, table) = round(&store, id)?;
            let mut cfg = DisputeConfig::<Exact>::defaults_for(&table, *top);
            cfg.dimension_weights = table_weights(&table, &catalog)?;
            cfg.ranking = match ranking {
                RankingArg::Verbatim => QuestionScore::Verbatim,
                RankingArg::Normalized => QuestionScore::Normalized,
            };
            let report = analyze_disputes(&table, &cfg)?;
            Ok(match fmt {
                Format::Json => report.to_json(),
                _ => report.to_markdown(),
            })
        }
        QualityCmd::Fluctuate { from, to, stat, dimension, model, tags } => {
            let (ca, ta) = round(&store, from)?;
            let (cb, tb) = round(&store, to)?;
            let a = RoundSnapshot::from_campaign(&ca, ta);
            let b = RoundSnapshot::from_campaign(&cb, tb);
            let manual: Vec<ManualTag> = match tags {
                Some(p) => parse_json(p)?,
                None => Vec::new(),
            };
            let statistic = match stat {
                StatArg::Accuracy => Statistic::Accuracy,
                StatArg::Normalized => Statistic::NormalizedGrade,
            };
            let dims: Vec<DimensionId> = match dimension {
                Some(d) => vec![d.as_str().into()],
                None => {
                    let in_b: BTreeSet<&DimensionId> = b.table.dimensions().iter().map(|d| &d.dimension_id).collect();
                    a.table.dimensions().iter().map(|d| d.dimension_id.clone()).filter(|d| in_b.contains(d)).collect()
                }
            };
            if dims.is_empty() {
                return Err(CliError::invalid(format!("rounds {from} and {to} share no dimension")));
            }
            let model = model.as_deref().map(ModelId::from);
            let mut parts = Vec::new();
            for d in &dims {
                parts.push(fluctuation::<Exact>(&a, &b, &manual, d, model.as_ref(), statistic)?);
            }
            Ok(match fmt {
                Format::Json if parts.len() == 1 => parts[0].to_json(),
                Format::Json => {
                    let items: Vec<Value> = parts
                        .iter()
                        .map(|p| serde_json::from_str(&p.to_json()).expect("breakdowns are JSON"))
                        .collect();
                    pretty(&Value::Array(items))
                }
                _ => parts.iter().map(|p| p.to_markdown()).collect::<Vec<_>>().join("\n"),
            })
        }
    }
}

// ---- serve ----

fn serve(root: &Path, args: &ServeArgs) -> Out {
    let host: IpAddr = args.host.parse().map_err(|_| CliError::invalid(format!("bad --host `{}`", args.host)))?;
    let config =
        ServeConfig { store: root.to_owned(), tokens: args.tokens.clone(), addr: SocketAddr::new(host, args.port) };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::invalid(format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        let (state, listener) = lalaeval_server::prepare(&config).await?;
        let addr = listener.local_addr().map_err(lalaeval_server::ServeError::Io)?;
        // Scripts wait for this line to learn the bound port.
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        lalaeval_server::run(state, listener).await
    })?;
    Ok(String::new())
}
