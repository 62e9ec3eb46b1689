use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tarsim::harness::config::{seed_override_from_env, SEED_ENV_VAR};
use tarsim::harness::report::ReportContext;
use tarsim::harness::{analyze_dir, emit_reports, run_experiment, run_grid};
use tarsim::keyword_index::{keyword_report, InvertedIndex};
use tarsim::synthetic::{generate, SyntheticSpec};
use tarsim::{load_corpus, load_keywords, Error, ExperimentConfig, GridConfig, PreparedCorpus};

#[derive(Parser)]
#[command(name = "tarsim", version, about = "Simulate active-learning document review")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print corpus statistics, and keyword statistics if a keyword file is given.
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        keywords: Option<PathBuf>,
    },
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "tarsim-out")]
        out: PathBuf,
        /// Stop once a round's review percentage is at or below this value.
        #[arg(long)]
        stop_at_review_pct: Option<f64>,
    },
    /// Run a grid of seed methods and strategies.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long, default_value = "tarsim-out")]
        out: PathBuf,
    },
    /// Recompute the optimum and summary reports of a trace directory.
    Analyze { trace_dir: PathBuf },
    /// Write a synthetic labeled corpus and keyword list.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        keywords_out: Option<PathBuf>,
        #[arg(long, default_value_t = 2_000)]
        docs: usize,
        #[arg(long, default_value_t = 0.15)]
        richness: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> tarsim::Result<ExitCode> {
    match command {
        Command::Stats { corpus, keywords } => stats(&corpus, keywords.as_deref()),
        Command::Run {
            config,
            out,
            stop_at_review_pct,
        } => run(&config, &out, stop_at_review_pct),
        Command::Grid { config, workers, out } => grid(&config, workers, &out),
        Command::Analyze { trace_dir } => {
            let out = analyze_dir(&trace_dir)?;
            println!("{}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            out,
            keywords_out,
            docs,
            richness,
            seed,
        } => {
            let spec = SyntheticSpec {
                n_docs: docs,
                richness,
                seed,
                ..Default::default()
            };
            let s = generate(&spec)?;
            s.corpus.save_jsonl(&out)?;
            if let Some(path) = keywords_out {
                let text: String = s.keywords.phrases().iter().map(|p| p.join(" ") + "\n").collect();
                std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn stats(corpus: &Path, keywords: Option<&Path>) -> tarsim::Result<ExitCode> {
    let corpus = load_corpus(corpus)?;
    let s = corpus.stats();
    let mut out = std::io::stdout().lock();
    writeln!(out, "total_documents,positive_documents,negative_documents,richness").map_err(stdout_err)?;
    writeln!(
        out,
        "{},{},{},{}",
        s.total,
        s.positives,
        s.negatives,
        s.richness_display()
    )
    .map_err(stdout_err)?;
    if let Some(path) = keywords {
        let keywords = load_keywords(path)?;
        let index = InvertedIndex::build(&corpus);
        let report = keyword_report(&index, &keywords, &corpus);
        writeln!(out).map_err(stdout_err)?;
        report.write_summary_csv(&mut out)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_seed_override(seed: &mut u64) -> tarsim::Result<()> {
    if let Some(s) = seed_override_from_env()? {
        eprintln!("using {SEED_ENV_VAR}={s}");
        *seed = s;
    }
    Ok(())
}

fn run(config: &Path, out: &Path, stop_at_review_pct: Option<f64>) -> tarsim::Result<ExitCode> {
    let mut config = ExperimentConfig::load(config)?;
    apply_seed_override(&mut config.params.rng_seed)?;
    if stop_at_review_pct.is_some() {
        config.params.stop_at_review_pct = stop_at_review_pct;
    }
    config.validate()?;
    let prepared = PreparedCorpus::for_params(&config.params, &[config.seed_method])?;
    let trace = run_experiment(&config, &prepared)?;
    let context = ReportContext::from_prepared(&prepared, config.to_json_value(), config.params.tolerance_mode);
    emit_reports(&[trace], &[], &context, out)?;
    println!("{}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn grid(config: &Path, workers: usize, out: &Path) -> tarsim::Result<ExitCode> {
    let mut grid = GridConfig::load(config)?;
    apply_seed_override(&mut grid.params.rng_seed)?;
    grid.validate()?;
    let prepared = PreparedCorpus::for_params(&grid.params, &grid.seed_methods)?;
    let outcome = run_grid(&grid, &prepared, workers)?;
    let context = ReportContext::from_prepared(&prepared, grid.to_json_value(), grid.params.tolerance_mode);
    emit_reports(&outcome.traces, &outcome.failures, &context, out)?;
    println!("{}", out.display());
    for f in &outcome.failures {
        eprintln!("failed: {}: {}", f.experiment_id, f.error);
    }
    Ok(if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}
