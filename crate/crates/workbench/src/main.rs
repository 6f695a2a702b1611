use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use greenreq_core::review::{ReviewAction, ReviewStage};
use greenreq_workbench::error::exit;
use greenreq_workbench::pipeline::{Options, Outcome, Project};
use greenreq_workbench::review::{
    list_reviews, now_timestamp, submit_decision, DecisionRequest, ReviewFilter,
};
use greenreq_workbench::server::{serve, AppState};
use greenreq_workbench::{audit, report, WorkbenchError};

#[derive(Parser)]
#[command(
    name = "greenreq",
    version,
    about = "Sustainability requirements workbench"
)]
struct Cli {
    /// Project configuration file.
    #[arg(long, global = true, default_value = "greenreq.toml")]
    config: PathBuf,
    /// Recompute a step even if later steps depend on it, discarding them.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the artifact directory.
    Init,
    /// Parse the SRS and taxonomy, check scope coherence, build indexes.
    Ingest {
        /// Continue even if scope sections are not coherent.
        #[arg(long)]
        allow_incoherent: bool,
    },
    /// Knowledge graph commands.
    Kg {
        #[command(subcommand)]
        command: KgCommand,
    },
    /// Elicit sustainability requirements, stopping at expert review.
    Elicit,
    /// Generate and filter requirement pairs.
    Relate,
    /// Classify related pairs.
    Classify,
    /// Propose and review revisions for negative pairs.
    Optimize,
    /// Completeness check and final requirement set.
    Check,
    /// Write report.md and report.json.
    Report,
    /// Verdict audits.
    Audit {
        #[command(subcommand)]
        command: AuditCommand,
    },
    /// Sweep the related-pair threshold over a labeled pair set.
    Calibrate {
        /// CSV with columns text_a, text_b, label.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// List reviews.
    Reviews {
        #[arg(long, value_enum, default_value = "pending")]
        state: FilterArg,
    },
    /// Record a review decision.
    Decide(DecideArgs),
    /// Show the pipeline state.
    Status,
    /// Run every stage, stopping at the first pending review.
    Run,
    /// Serve the review API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8787")]
        addr: SocketAddr,
        /// Additional project configurations to serve.
        #[arg(long = "project")]
        projects: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KgCommand {
    /// Extract, correct and validate the standards graph.
    Build,
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Verdict agreement across repeated runs.
    Consistency {
        #[arg(long, default_value_t = 3)]
        runs: u32,
    },
    /// Catalog-referred versus own-reasoning verdicts.
    Trust {
        /// Audit this verdict file instead of the project verdicts.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Agreement with another verdict file.
    Compare {
        #[arg(long = "with")]
        other: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FilterArg {
    Pending,
    Decided,
    All,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ActionArg {
    Approve,
    Reject,
    RequestChanges,
}

#[derive(Args)]
struct DecideArgs {
    review_id: String,
    #[arg(long, value_enum)]
    action: ActionArg,
    #[arg(long)]
    feedback: Option<String>,
    /// Candidate record ids to keep (SR approval); repeat or comma-separate.
    #[arg(long = "approve", value_delimiter = ',')]
    approved: Vec<String>,
    #[arg(long, default_value = "")]
    reviewer: String,
    #[arg(long)]
    decision_id: Option<String>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("GREENREQ_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn print_outcome(label: &str, outcome: &Outcome) -> i32 {
    match outcome {
        Outcome::Ran => {
            println!("{label}: done");
            exit::OK
        }
        Outcome::UpToDate => {
            println!("{label}: up to date");
            exit::OK
        }
        Outcome::AwaitingReview(ids) => {
            println!("{label}: awaiting review");
            for id in ids {
                println!("  {id}");
            }
            exit::AWAITING_REVIEW
        }
    }
}

fn run(cli: Cli) -> Result<i32, WorkbenchError> {
    let project = Project::load(&cli.config)?;
    let mut opts = Options::from_config(&project.config);
    opts.force = cli.force;

    // Everything except read-only commands and the server takes the lock.
    let mutating = !matches!(
        cli.command,
        Command::Status | Command::Reviews { .. } | Command::Serve { .. }
    );
    let _lock = if mutating && !matches!(cli.command, Command::Init) {
        Some(project.store.try_lock()?)
    } else {
        None
    };

    let outcome = |label: &str, o: Outcome| Ok(print_outcome(label, &o));
    match cli.command {
        Command::Init => {
            let o = project.init()?;
            let _lock = project.store.try_lock()?;
            outcome("init", o)
        }
        Command::Ingest { allow_incoherent } => {
            opts.allow_incoherent |= allow_incoherent;
            outcome("ingest", project.ingest(&opts)?)
        }
        Command::Kg {
            command: KgCommand::Build,
        } => outcome("kg build", project.kg_build(&opts)?),
        Command::Elicit => outcome("elicit", project.elicit(&opts)?),
        Command::Relate => outcome("relate", project.relate(&opts)?),
        Command::Classify => outcome("classify", project.classify(&opts)?),
        Command::Optimize => outcome("optimize", project.optimize(&opts)?),
        Command::Check => {
            let code = print_outcome("check", &project.check(&opts)?);
            let c = project.completeness(&project.state()?)?;
            println!(
                "satisfied: {}, unsatisfied: {}{}",
                c.report.satisfied_srs.len(),
                c.report.unsatisfied_srs.len(),
                if c.complete { "" } else { " (incomplete)" }
            );
            Ok(code)
        }
        Command::Report => {
            let r = report::write_report(&project)?;
            print!("{}", r.to_markdown());
            Ok(exit::OK)
        }
        Command::Audit { command } => {
            match command {
                AuditCommand::Consistency { runs } => {
                    println!("{}", audit::consistency(&project, runs)?)
                }
                AuditCommand::Trust { verdicts } => {
                    println!("{}", audit::trust(&project, verdicts.as_deref())?)
                }
                AuditCommand::Compare { other } => {
                    let r = audit::compare(&project, &other)?;
                    println!(
                        "common pairs: {}, agreeing: {} ({:.0}%), differences: {}",
                        r.common_pairs,
                        r.agreeing,
                        r.agreement_pct,
                        r.differences.len()
                    );
                }
            }
            Ok(exit::OK)
        }
        Command::Calibrate { pairs } => {
            let c = audit::calibrate(&project, &pairs)?;
            println!("threshold  precision  recall  f1");
            for p in &c.sweep {
                println!(
                    "{:.2}       {:.4}     {:.4}  {:.4}",
                    p.threshold, p.precision, p.recall, p.f1
                );
            }
            println!("selected: {:.2}", c.selected);
            Ok(exit::OK)
        }
        Command::Reviews { state } => {
            let filter = match state {
                FilterArg::Pending => ReviewFilter::Pending,
                FilterArg::Decided => ReviewFilter::Decided,
                FilterArg::All => ReviewFilter::All,
            };
            let st = project.state()?;
            for r in list_reviews(&project, &st, filter) {
                println!(
                    "{}  {:?}  {}  {:?}",
                    r.item.review_id, r.item.stage, r.item.subject, r.item.status
                );
            }
            Ok(exit::OK)
        }
        Command::Decide(args) => {
            let req = DecisionRequest {
                action: Some(match args.action {
                    ActionArg::Approve => ReviewAction::Approve,
                    ActionArg::Reject => ReviewAction::Reject,
                    ActionArg::RequestChanges => ReviewAction::RequestChanges,
                }),
                feedback: args.feedback,
                approved_refs: (!args.approved.is_empty()).then_some(args.approved),
                reviewer: Some(args.reviewer),
                decision_id: args.decision_id,
            };
            let d = submit_decision(&project, &args.review_id, req, now_timestamp())?;
            println!("recorded {}", d.decision_id);
            let label = match d.stage {
                ReviewStage::SRApproval => "elicit",
                ReviewStage::RevisionReview => "optimize",
            };
            outcome(label, project.resume(d.stage, &opts)?)
        }
        Command::Status => {
            let st = project.state()?;
            println!("project: {}", st.project_id);
            println!("stage: {:?}", st.stage);
            for s in &st.steps {
                println!(
                    "  {}  {}",
                    s.name,
                    &s.input_hash[..12.min(s.input_hash.len())]
                );
            }
            let pending: Vec<_> = st.pending_reviews().collect();
            println!("pending reviews: {}", pending.len());
            for r in pending {
                println!("  {}", r.review_id);
            }
            Ok(exit::OK)
        }
        Command::Run => outcome("run", project.run_all(&opts)?),
        Command::Serve { addr, projects } => {
            let mut all = vec![project];
            for p in projects {
                all.push(Project::load(&p)?);
            }
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| WorkbenchError::Data(format!("cannot start runtime: {e}")))?;
            runtime
                .block_on(serve(AppState::new(all), addr))
                .map_err(|e| WorkbenchError::Data(format!("server: {e}")))?;
            Ok(exit::OK)
        }
    }
}
