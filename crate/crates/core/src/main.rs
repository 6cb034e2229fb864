use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adabon::harness::{build_batches, run_experiment, ExperimentSpec};
use adabon::oracle::{evaluate_instance, OracleInstance};
use adabon::report::{emit_report, emit_summaries, read_batch_records, write_jsonl};
use adabon::{Error, Result};


#[derive(Parser)]
#[command(name = "adabon", version, about = "Adaptive Best-of-N budget allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment and write report files.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact uniform and two-stage values for a two-prompt Bernoulli instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Build random batches of prompt ids.
    Batches {
        /// One prompt id per line, or a reward log.
        #[arg(long)]
        universe: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild summary tables from a raw.jsonl file.
    Metrics {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        context: format!("reading {}", path.display()),
        source: e,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ADABON_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("ADABON_THREADS={v} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn universe_ids(text: &str) -> Vec<String> {
    #[derive(serde::Deserialize)]
    struct Entry {
        prompt_id: String,
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| match serde_json::from_str::<Entry>(l) {
            Ok(e) => e.prompt_id,
            Err(_) => l.to_string(),
        })
        .collect()
}

#[derive(serde::Serialize)]
struct BatchLine<'a> {
    batch: usize,
    prompts: &'a [String],
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut spec: ExperimentSpec = serde_json::from_str(&read(&config)?)?;
            if let Some(seed) = seed {
                spec.config.seed = seed;
            }
            let base_dir = config.parent().unwrap_or(Path::new("."));
            let result = thread_pool()?.install(|| run_experiment(&spec, base_dir))?;
            let paths = emit_report(&result, &out)?;
            println!("raw:     {}", paths.raw.display());
            println!("summary: {}", paths.summary.display());
            println!("series:  {}", paths.series.display());
        }
        Command::Oracle { instance } => {
            let instance: OracleInstance = serde_json::from_str(&read(&instance)?)?;
            println!("B,d,uniform,two_stage,gap");
            for row in evaluate_instance(&instance)? {
                println!(
                    "{},{},{:.6},{:.6},{:.6}",
                    row.per_prompt_budget, row.exploration_budget, row.uniform, row.two_stage, row.gap
                );
            }
        }
        Command::Batches { universe, k, n, seed, out } => {
            let ids = universe_ids(&read(&universe)?);
            let batches = build_batches(&ids, k, n, seed)?;
            let lines: Vec<BatchLine> = batches
                .iter()
                .enumerate()
                .map(|(batch, prompts)| BatchLine { batch, prompts })
                .collect();
            write_jsonl(&out, &lines)?;
        }
        Command::Metrics { raw, out } => {
            let records = read_batch_records(&raw)?;
            let (summary, series) = emit_summaries(&records, &out)?;
            println!("summary: {}", summary.display());
            println!("series:  {}", series.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
