use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use talkpoints_cli::stages::print_summary;
use talkpoints_cli::{BackendKind, Filters, Pipeline, PipelineConfig, Stage};
use talkpoints_core::evaluation::Method;

#[derive(Parser)]
#[command(name = "talkpoints", version, about = "Partisan talking-point pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long, global = true, default_value = "pipeline.toml")]
    config: PathBuf,
    #[arg(long, global = true)]
    event: Option<String>,
    #[arg(long, global = true)]
    issue: Option<String>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    membership_threshold: Option<f64>,
    /// Evaluate a single method (direct, topk, topk+metadata, trp, partisan, partisan+metadata).
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus.
    Ingest,
    /// Extract and embed talking points.
    Extract,
    /// Identify prominent talking points per event.
    Cluster,
    /// Generate left and right viewpoints per PTP.
    Perspectives,
    /// Run the classification, topic and evidence tasks.
    Evaluate,
    /// Score agreement and draw the event snapshot.
    Snapshot,
    /// Write preference pairs for fine-tuning.
    ExportFinetune,
    /// Every stage in order.
    All,
    /// Same as the stage subcommands: `run all`, `run cluster`, ...
    Run {
        #[arg(value_enum)]
        target: Target,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Target {
    Ingest,
    Extract,
    Cluster,
    Perspectives,
    Evaluate,
    Snapshot,
    ExportFinetune,
    All,
}

impl Command {
    fn target(&self) -> Target {
        match self {
            Command::Ingest => Target::Ingest,
            Command::Extract => Target::Extract,
            Command::Cluster => Target::Cluster,
            Command::Perspectives => Target::Perspectives,
            Command::Evaluate => Target::Evaluate,
            Command::Snapshot => Target::Snapshot,
            Command::ExportFinetune => Target::ExportFinetune,
            Command::All => Target::All,
            Command::Run { target } => *target,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = cli.common;
    let mut config = PipelineConfig::load(&c.config)?;
    if let Some(b) = c.backend {
        config.backend.kind = b;
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(t) = c.membership_threshold {
        config.thresholds.membership = t;
    }
    if let Some(o) = c.out {
        config.output_dir = o;
    }
    config.validate()?;
    let filters = Filters {
        event: c.event,
        issue: c.issue,
        method: c.method,
    };
    let pipeline = Pipeline::new(config, filters)?;
    let stages: Vec<Stage> = match cli.command.target() {
        Target::Ingest => vec![Stage::Ingest],
        Target::Extract => vec![Stage::Extract],
        Target::Cluster => vec![Stage::Cluster],
        Target::Perspectives => vec![Stage::Perspectives],
        Target::Evaluate => vec![Stage::Evaluate],
        Target::Snapshot => vec![Stage::Snapshot],
        Target::ExportFinetune => vec![Stage::ExportFinetune],
        Target::All => Stage::ORDER.to_vec(),
    };
    let mut stdout = io::stdout().lock();
    for s in stages {
        let summary = pipeline.run(s)?;
        print_summary(&mut stdout, &summary)?;
    }
    tracing::debug!(stats = ?pipeline.gateway.stats(), "gateway");
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
