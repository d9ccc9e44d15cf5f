//! `analyze` and `synth`: the full pipeline from inputs to artifact files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hurstnn_core::rolling::{self, IndexRun};
use hurstnn_core::series::{self, build_window_schedule, WindowSchedule};
use hurstnn_core::synth::{self, GeneratorKind, Synthetic};
use hurstnn_core::{CrossSectionReport64, EngineError, Region, ReturnSeries64, SeriesError};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, Source};
use crate::io::{self, IngestError};
use crate::report::{self, CorrelationReport, SummaryRow};

pub const WINDOWS_FILE: &str = "windows.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const REPORT_FILE: &str = "correlation.json";
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("synthetic generation failed: {0}")]
    Synth(#[from] synth::SynthError),
    #[error("no output directory: pass --out or set output_dir")]
    NoOutput,
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Overall outcome, mapped to the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    /// Some indexes failed or no correlation could be formed.
    Partial,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Partial => 1,
        }
    }
}

/// A return series ready for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexInput {
    pub returns: ReturnSeries64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexFailure {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexOutcome {
    pub index_id: String,
    pub region: Region,
    pub result: Result<(WindowSchedule, ReturnSeries64, IndexRun<f64>), IndexFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub outcomes: Vec<IndexOutcome>,
    pub cross: Result<CrossSectionReport64, EngineError>,
}

impl Analysis {
    pub fn status(&self) -> RunStatus {
        if self.cross.is_ok() && self.outcomes.iter().all(|o| o.result.is_ok()) {
            RunStatus::Success
        } else {
            RunStatus::Partial
        }
    }

    pub fn summaries(&self) -> Vec<hurstnn_core::IndexSummary64> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|(_, _, run)| run.summary.clone()))
            .collect()
    }
}

fn series_code(e: &SeriesError) -> &'static str {
    match e {
        SeriesError::InsufficientHistory { .. } => "insufficient-history",
        SeriesError::ZeroPeriod { .. } => "bad-period",
        _ => "bad-series",
    }
}

/// Synthetic identifiers: `synth_000`, `synth_001`, ...
pub fn synthetic_id(i: usize) -> String {
    format!("synth_{i:03}")
}

/// Generates the configured synthetic ensemble.
pub fn synthesize(cfg: &RunConfig) -> Result<Vec<(Synthetic<f64>, synth::GeneratorSpec)>, AnalyzeError> {
    let Source::Synthetic(ensemble) = cfg.source()? else {
        return Err(ConfigError::Invalid("no synthetic ensemble configured (set synthetic_count)".into()).into());
    };
    let members = ensemble.members()?;
    members
        .par_iter()
        .enumerate()
        .map(|(i, spec)| Ok((synth::generate::<f64>(spec, &synthetic_id(i))?, *spec)))
        .collect()
}

/// Reads every input (or generates the ensemble). Any unreadable input aborts.
pub fn load_inputs(cfg: &RunConfig) -> Result<Vec<IndexInput>, AnalyzeError> {
    match cfg.source()? {
        Source::Files(files) => files
            .iter()
            .enumerate()
            .map(|(i, (path, region))| {
                let prices = io::ingest_csv(path)?;
                let mut returns = series::log_returns(&prices);
                if cfg.surrogates {
                    returns = synth::random_walk_surrogate(&returns, synth::child_seed(cfg.seed, i as u64))?
                        .series;
                }
                Ok(IndexInput {
                    returns,
                    region: *region,
                })
            })
            .collect(),
        Source::Synthetic(_) => Ok(synthesize(cfg)?
            .into_iter()
            .map(|(s, _)| IndexInput {
                returns: s.series,
                region: Region::Other,
            })
            .collect()),
    }
}

fn analyze_one(input: &IndexInput, cfg: &RunConfig) -> Result<IndexOutcome, ConfigError> {
    let rule = cfg.month_rule()?;
    let embedding = cfg.embedding();
    let dfa = cfg.dfa();
    let result = (|| {
        let returns = match cfg.recent_months {
            Some(months) => series::last_months(&input.returns, months, rule),
            None => Ok(input.returns.clone()),
        }
        .map_err(|e| IndexFailure {
            code: series_code(&e),
            message: e.to_string(),
        })?;
        let schedule = build_window_schedule(
            &returns,
            cfg.estimation_months,
            cfg.prediction_months,
            cfg.roll_months,
            rule,
        )
        .map_err(|e| IndexFailure {
            code: series_code(&e),
            message: e.to_string(),
        })?;
        let run = rolling::run_index(&returns, &schedule, &embedding, &dfa).map_err(|e| {
            IndexFailure {
                code: e.code(),
                message: e.to_string(),
            }
        })?;
        Ok((schedule, returns, run))
    })();
    Ok(IndexOutcome {
        index_id: input.returns.index_id().to_string(),
        region: input.region,
        result: result.map(|(s, r, mut run)| {
            run.summary.region = input.region;
            (s, r, run)
        }),
    })
}

/// Runs every index and the cross-section. Pure in its inputs.
pub fn analyze_inputs(inputs: &[IndexInput], cfg: &RunConfig) -> Result<Analysis, AnalyzeError> {
    cfg.validate()?;
    let work = || -> Result<Vec<IndexOutcome>, ConfigError> {
        inputs.par_iter().map(|input| analyze_one(input, cfg)).collect()
    };
    let outcomes = match cfg.workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AnalyzeError::Pool(e.to_string()))?
            .install(work)?,
        _ => work()?,
    };
    let summaries: Vec<_> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|(_, _, run)| run.summary.clone()))
        .collect();
    let cross = rolling::cross_section(&summaries);
    Ok(Analysis { outcomes, cross })
}

/// File contents produced by `analyze`, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisArtifacts {
    pub windows_csv: String,
    pub summary_csv: String,
    pub scatter_csv: String,
    pub report: Option<CorrelationReport>,
    pub status: RunStatus,
}

impl AnalysisArtifacts {
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut files = vec![
            (WINDOWS_FILE, self.windows_csv.clone()),
            (SUMMARY_FILE, self.summary_csv.clone()),
            (SCATTER_FILE, self.scatter_csv.clone()),
        ];
        if let Some(r) = &self.report {
            files.push((REPORT_FILE, r.to_json()));
        }
        files
    }

    pub fn write(&self, dir: &Path) -> Result<(), AnalyzeError> {
        fs::create_dir_all(dir).map_err(|source| AnalyzeError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, body) in self.files() {
            let path = dir.join(name);
            io::write_file(&path, &body).map_err(|source| AnalyzeError::Write { path, source })?;
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn windows_csv(analysis: &Analysis) -> String {
    let mut s = String::from(
        "index_id,window,estimation_start,prediction_start,prediction_end,hurst,r_squared,\
         hit_rate,trading_days,scored_days,hits,neighbors,confirmation_fallbacks,error\n",
    );
    for o in &analysis.outcomes {
        let Ok((schedule, returns, run)) = &o.result else {
            continue;
        };
        let dates = returns.dates();
        for (w, r) in schedule.windows.iter().zip(&run.windows) {
            let d = &r.diagnostics;
            let error = [d.hurst_error.as_deref(), d.hit_error.as_deref()]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>()
                .join("; ")
                .replace(',', ";");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                o.index_id,
                r.window_index,
                dates[w.estimation.start],
                dates[w.prediction.start],
                dates[w.prediction.end - 1],
                opt(r.hurst),
                opt(d.r_squared),
                opt(r.hit),
                d.trading_days,
                d.scored_days,
                d.hits,
                d.neighbors,
                d.confirmation_fallbacks,
                error
            );
        }
    }
    s
}

/// Renders the artifact files for a completed analysis.
pub fn render(analysis: &Analysis) -> AnalysisArtifacts {
    let rows: Vec<SummaryRow> = analysis
        .outcomes
        .iter()
        .map(|o| match &o.result {
            Ok((_, _, run)) => SummaryRow::from_summary(&run.summary),
            Err(f) => SummaryRow::failed(&o.index_id, o.region, f.code),
        })
        .collect();
    AnalysisArtifacts {
        windows_csv: windows_csv(analysis),
        summary_csv: report::summary_csv(&rows),
        scatter_csv: report::scatter_csv(&rows),
        report: analysis.cross.as_ref().ok().map(CorrelationReport::from),
        status: analysis.status(),
    }
}

/// Ingestion, schedules, per-index runs and the cross-section.
pub fn run_analyze(cfg: &RunConfig) -> Result<(Analysis, AnalysisArtifacts), AnalyzeError> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let analysis = analyze_inputs(&inputs, cfg)?;
    let artifacts = render(&analysis);
    Ok((analysis, artifacts))
}

/// Writes one price CSV per synthetic index plus a manifest; returns the
/// price file paths.
pub fn run_synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, AnalyzeError> {
    cfg.validate()?;
    let generated = synthesize(cfg)?;
    let mut manifest = String::from("index_id,kind,hurst,mean,std,length,seed,method\n");
    let mut files = Vec::with_capacity(generated.len());
    let mut bodies = Vec::with_capacity(generated.len());
    for (s, spec) in &generated {
        let prices = s.series.to_prices(100.0).expect("finite synthetic returns");
        let id = s.series.index_id();
        let (kind, hurst) = match spec.kind {
            GeneratorKind::RandomWalk => ("random-walk", String::new()),
            GeneratorKind::Fgn { hurst } => ("fgn", hurst.to_string()),
        };
        let _ = writeln!(
            manifest,
            "{id},{kind},{hurst},{},{},{},{},{}",
            spec.mean, spec.std, spec.length, spec.seed, s.method
        );
        files.push(out.join(format!("{id}.csv")));
        bodies.push(io::price_csv(&prices));
    }
    fs::create_dir_all(out).map_err(|source| AnalyzeError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    for (path, body) in files.iter().zip(&bodies) {
        io::write_file(path, body).map_err(|source| AnalyzeError::Write {
            path: path.clone(),
            source,
        })?;
    }
    let path = out.join(MANIFEST_FILE);
    io::write_file(&path, &manifest).map_err(|source| AnalyzeError::Write { path, source })?;
    Ok(files)
}
