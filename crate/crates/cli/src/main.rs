use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hurstnn::analyze::{self, AnalyzeError, RunStatus};
use hurstnn::config::RunConfig;
use hurstnn::report::{self, CorrelationReport};

#[derive(Parser)]
#[command(name = "hurstnn", version, about = "Rolling DFA Hurst exponents against nearest-neighbour hit rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rolling analysis and write windows, summary, scatter and correlation files.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the configured synthetic ensemble as price CSV files.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute the cross-section from a summary or scatter table.
    Correlate {
        summary: PathBuf,
        /// Write the report JSON here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a correlation report in readable form.
    Report { report: PathBuf },
}

fn load(config: &Path, seed: Option<u64>) -> Result<RunConfig, AnalyzeError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig, out: Option<PathBuf>) -> Result<PathBuf, AnalyzeError> {
    out.or_else(|| cfg.output_dir.clone()).ok_or(AnalyzeError::NoOutput)
}

/// Config and input errors exit 2; partial results exit 1.
fn run(cli: Cli) -> Result<RunStatus> {
    match cli.command {
        Command::Analyze { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let dir = output_dir(&cfg, out)?;
            let (analysis, artifacts) = analyze::run_analyze(&cfg)?;
            artifacts.write(&dir)?;
            for o in &analysis.outcomes {
                if let Err(f) = &o.result {
                    eprintln!("{}: {} ({})", o.index_id, f.message, f.code);
                }
            }
            match &artifacts.report {
                Some(r) => print!("{}", r.pretty()),
                None => {
                    if let Err(e) = &analysis.cross {
                        eprintln!("no cross-section: {e}");
                    }
                }
            }
            Ok(artifacts.status)
        }
        Command::Synth { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let dir = output_dir(&cfg, out)?;
            let files = analyze::run_synth(&cfg, &dir)?;
            println!("wrote {} price files to {}", files.len(), dir.display());
            Ok(RunStatus::Success)
        }
        Command::Correlate { summary, out } => {
            let rep = report::correlate(&summary)?;
            match out {
                Some(path) => hurstnn::io::write_file(&path, &rep.to_json())
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{}", rep.to_json()),
            }
            Ok(RunStatus::Success)
        }
        Command::Report { report } => {
            print!("{}", CorrelationReport::read(&report)?.pretty());
            Ok(RunStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
