use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drselect_cli::{CliError, Loaded, Workspace};
use drselect_core::corpusio::MetricKind;
use drselect_core::retrieval::SimilarityKind;

#[derive(Parser)]
#[command(name = "drselect", version, about = "Rank dense retrievers on an unlabeled target corpus")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(short, long, global = true, default_value = "drselect.json")]
    config: PathBuf,

    /// Write outputs here instead of the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every input and write manifest.json.
    Ingest,
    /// Top-k runs and negative samples.
    Retrieve {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        /// Override the registry's similarity (dot or cosine).
        #[arg(long)]
        sim: Option<SimilarityKind>,
    },
    /// Masked query files for the encoder.
    Perturb {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Method score tables.
    Select {
        /// A method kind (e.g. entropy) or one variant (e.g. entropy@10).
        #[arg(long)]
        method: Option<String>,
    },
    /// Ground-truth effectiveness from runs and qrels.
    Truth {
        #[arg(long)]
        metric: Option<MetricKind>,
    },
    /// Tau and regret of every method.
    Evaluate,
    /// Markdown tables.
    Report,
    /// All stages in order.
    Run,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DRSELECT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("DRSELECT_THREADS={raw:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::config)
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    init_threads()?;
    let cfg = Loaded::load(&cli.config, cli.out.as_deref())?;
    let ws = Workspace::open(cfg)?;
    match cli.command {
        Command::Ingest => Ok(vec![ws.ingest()?]),
        Command::Retrieve { model, dataset, k, sim } => ws.retrieve(model.as_deref(), dataset.as_deref(), k, sim),
        Command::Perturb { p, seed, trials, dataset } => ws.perturb(p, seed, trials, dataset.as_deref()),
        Command::Select { method } => ws.select(method.as_deref()),
        Command::Truth { metric } => Ok(vec![ws.truth(metric)?]),
        Command::Evaluate => Ok(vec![ws.evaluate()?]),
        Command::Report => Ok(vec![ws.report()?]),
        Command::Run => ws.run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("drselect: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
