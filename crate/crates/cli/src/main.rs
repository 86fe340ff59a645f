//! `lalaeval`: operator CLI over the evaluation store.
//!
//! Exit status is 0 on success, 1 on a domain error and 2 on a usage error.

mod commands;
mod error;
mod fetch;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Store location used when neither `--store` nor `LALAEVAL_STORE` is set.
const DEFAULT_STORE: &str = "lalaeval-store";
const STORE_ENV: &str = "LALAEVAL_STORE";

#[derive(Debug, Parser)]
#[command(name = "lalaeval", version, about = "Single-blind human evaluation of LLM responses")]
pub struct Cli {
    /// Store directory. `LALAEVAL_STORE`, when set, takes precedence.
    #[arg(long, global = true)]
    store: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed override for sampling and blinding.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Markdown,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capability taxonomy and dimension catalog.
    #[command(subcommand)]
    Taxonomy(TaxonomyCmd),
    /// QA bank: authoring, inspection and coverage.
    #[command(subcommand)]
    Bank(BankCmd),
    /// Evaluation campaigns from sampling to close.
    #[command(subcommand)]
    Campaign(CampaignCmd),
    /// Grade reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Dispute analysis and cross-round fluctuation.
    #[command(subcommand)]
    Quality(QualityCmd),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum TaxonomyCmd {
    /// Check a catalog document (the stored one when no file is given).
    Validate {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Install a catalog, creating the store if needed. Without `--file`
    /// the built-in logistics catalog is used.
    Import {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BankCmd {
    /// Add drafts from a JSON object, JSON array or JSONL file.
    Submit {
        #[arg(long)]
        file: PathBuf,
        /// Hand each new draft to inspection right away.
        #[arg(long)]
        request_inspection: bool,
    },
    /// Record an inspection verdict. Drafts are moved to inspection first.
    Inspect {
        #[arg(long)]
        id: String,
        #[arg(long, value_enum)]
        verdict: VerdictArg,
        #[arg(long)]
        inspector: String,
        #[arg(long, default_value = "")]
        notes: String,
    },
    /// Per-stratum deficit against the latest revision of a plan.
    Gap {
        #[arg(long)]
        plan: String,
    },
    /// Print pairs as JSONL, optionally filtered by status.
    Export {
        #[arg(long, value_delimiter = ',')]
        status: Vec<String>,
    },
    /// Replace the stored pairs with a JSONL file (or the built-in seed bank).
    Import {
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        file: Option<PathBuf>,
        #[arg(long)]
        builtin: bool,
    },
    /// Append a question-plan revision from a JSON quota list.
    Plan {
        #[arg(long)]
        id: String,
        #[arg(long)]
        quotas: PathBuf,
        /// Free-text inspection criterion; repeatable.
        #[arg(long = "criterion")]
        criteria: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerdictArg {
    Pass,
    Fail,
}

#[derive(Debug, Subcommand)]
pub enum CampaignCmd {
    /// Register a campaign from a JSON spec {id, plan_id | quotas, models, panel, seed}.
    Create {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Draw questions per stratum.
    Sample(CampaignRef),
    /// Attach model responses from JSONL or by calling model endpoints.
    Ingest {
        #[command(flatten)]
        campaign: CampaignRef,
        #[arg(long, conflicts_with = "fetch", required_unless_present = "fetch")]
        file: Option<PathBuf>,
        #[arg(long)]
        fetch: bool,
    },
    /// Shuffle response positions per question and print the layout.
    Blind(CampaignRef),
    /// Build and issue blinded tasks.
    Issue(CampaignRef),
    /// Stop accepting grades.
    Close(CampaignRef),
}

#[derive(Debug, Args)]
pub struct CampaignRef {
    #[arg(long)]
    pub campaign: String,
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Grade tables for a campaign or a named fixture.
    Emit {
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        campaign: Option<String>,
        #[arg(long)]
        fixture: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum QualityCmd {
    /// Evaluator and question dispute scores for one round.
    Dispute {
        #[arg(long)]
        round: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, value_enum, default_value_t = RankingArg::Verbatim)]
        ranking: RankingArg,
    },
    /// Attribute a statistic's change between two closed rounds.
    Fluctuate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum)]
        stat: StatArg,
        /// Defaults to every dimension present in both rounds.
        #[arg(long)]
        dimension: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// JSON array of manual sameness tags.
        #[arg(long)]
        tags: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RankingArg {
    Verbatim,
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Accuracy,
    #[value(alias = "grade")]
    Normalized,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Token file; defaults to `tokens.json` in the store.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
}

impl Cli {
    fn store_path(&self) -> PathBuf {
        match std::env::var_os(STORE_ENV).filter(|v| !v.is_empty()) {
            Some(v) => PathBuf::from(v),
            None => self.store.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_STORE)),
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 from inside `parse`.
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            if !out.is_empty() {
                print!("{out}");
                if !out.ends_with('\n') {
                    println!();
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
