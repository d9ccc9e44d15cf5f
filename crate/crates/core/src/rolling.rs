//! Per-index rolling pipeline and the cross-sectional comparison.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dfa::{self, DfaConfig};
use crate::nn::{self, EmbeddingConfig};
use crate::series::{ReturnSeries, WindowSchedule};
use crate::stats;
use crate::Scalar;

/// Fewest indexes with both averages for a cross-section.
pub const MIN_CROSS_SECTION: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("window {window} ends at {end}, past the series length {len}")]
    ScheduleMismatch { window: usize, end: usize, len: usize },
    #[error("schedule has no windows")]
    EmptySchedule,
    #[error("no window produced a Hurst exponent ({} windows failed)", .failures.len())]
    AllWindowsFailed { failures: Vec<WindowResult<f64>> },
    #[error("{usable} indexes with both averages, at least {required} required")]
    TooFewIndexes { usable: usize, required: usize },
}

impl EngineError {
    /// Short machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::ScheduleMismatch { .. } => "schedule-mismatch",
            EngineError::EmptySchedule => "empty-schedule",
            EngineError::AllWindowsFailed { .. } => "all-windows-failed",
            EngineError::TooFewIndexes { .. } => "too-few-indexes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Region {
    Africa,
    Americas,
    AsiaPacific,
    Europe,
    #[default]
    Other,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Africa => "Africa",
            Region::Americas => "Americas",
            Region::AsiaPacific => "Asia-Pacific",
            Region::Europe => "Europe",
            Region::Other => "other",
        })
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "africa" => Ok(Region::Africa),
            "americas" => Ok(Region::Americas),
            "asia-pacific" => Ok(Region::AsiaPacific),
            "europe" => Ok(Region::Europe),
            "other" => Ok(Region::Other),
            _ => Err(format!(
                "unknown region `{s}` (expected Africa, Americas, Asia-Pacific, Europe or other)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowDiagnostics<T> {
    pub r_squared: Option<T>,
    pub dropped_scales: usize,
    pub neighbors: usize,
    pub confirmation_fallbacks: usize,
    pub trading_days: usize,
    pub scored_days: usize,
    pub hits: usize,
    pub hurst_error: Option<String>,
    pub hit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult<T> {
    pub window_index: usize,
    pub hurst: Option<T>,
    pub hit: Option<T>,
    pub diagnostics: WindowDiagnostics<T>,
}

impl<T: Scalar> WindowResult<T> {
    fn to_f64(&self) -> WindowResult<f64> {
        let d = &self.diagnostics;
        WindowResult {
            window_index: self.window_index,
            hurst: self.hurst.map(Scalar::as_f64),
            hit: self.hit.map(Scalar::as_f64),
            diagnostics: WindowDiagnostics {
                r_squared: d.r_squared.map(Scalar::as_f64),
                dropped_scales: d.dropped_scales,
                neighbors: d.neighbors,
                confirmation_fallbacks: d.confirmation_fallbacks,
                trading_days: d.trading_days,
                scored_days: d.scored_days,
                hits: d.hits,
                hurst_error: d.hurst_error.clone(),
                hit_error: d.hit_error.clone(),
            },
        }
    }
}

/// Per-index averages over the rolling windows.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary<T> {
    pub index_id: String,
    pub mean_hurst: T,
    /// `None` when no window produced a hit rate.
    pub mean_hit: Option<T>,
    /// Windows contributing at least one measure.
    pub window_count: usize,
    pub hurst_windows: usize,
    pub hit_windows: usize,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRun<T> {
    pub summary: IndexSummary<T>,
    pub windows: Vec<WindowResult<T>>,
}

fn run_window<T: Scalar>(
    returns: &[T],
    window: &crate::series::Window,
    embedding: &EmbeddingConfig,
    dfa_config: &DfaConfig,
) -> WindowResult<T> {
    let estimation = &returns[window.estimation.clone()];
    let prediction = &returns[window.prediction.clone()];
    let mut diagnostics = WindowDiagnostics::default();
    let hurst = match dfa::estimate_hurst(estimation, dfa_config) {
        Ok(fit) => {
            diagnostics.r_squared = Some(fit.r_squared);
            diagnostics.dropped_scales = fit.dropped_points;
            Some(fit.hurst)
        }
        Err(e) => {
            diagnostics.hurst_error = Some(e.to_string());
            None
        }
    };
    let hit = match nn::predict_window(estimation, prediction, embedding) {
        Ok(p) => {
            diagnostics.neighbors = p.neighbors;
            diagnostics.confirmation_fallbacks = p.confirmation_fallbacks;
            diagnostics.trading_days = p.record.trading_days;
            diagnostics.scored_days = p.record.scored_days;
            diagnostics.hits = p.record.hits;
            p.record.hit_rate
        }
        Err(e) => {
            diagnostics.hit_error = Some(e.to_string());
            None
        }
    };
    WindowResult {
        window_index: window.index,
        hurst,
        hit,
        diagnostics,
    }
}

/// Hurst exponent and hit rate for every window of `schedule`, averaged.
/// Windows are evaluated in parallel; results keep schedule order.
pub fn run_index<T: Scalar>(
    returns: &ReturnSeries<T>,
    schedule: &WindowSchedule,
    embedding: &EmbeddingConfig,
    dfa_config: &DfaConfig,
) -> Result<IndexRun<T>, EngineError> {
    if schedule.is_empty() {
        return Err(EngineError::EmptySchedule);
    }
    for w in &schedule.windows {
        if w.prediction.end > returns.len() {
            return Err(EngineError::ScheduleMismatch {
                window: w.index,
                end: w.prediction.end,
                len: returns.len(),
            });
        }
    }
    let values = returns.returns();
    let windows: Vec<WindowResult<T>> = schedule
        .windows
        .par_iter()
        .map(|w| run_window(values, w, embedding, dfa_config))
        .collect();
    let hursts: Vec<T> = windows.iter().filter_map(|w| w.hurst).collect();
    let hits: Vec<T> = windows.iter().filter_map(|w| w.hit).collect();
    let Some(mean_hurst) = stats::mean(&hursts) else {
        return Err(EngineError::AllWindowsFailed {
            failures: windows.iter().map(WindowResult::to_f64).collect(),
        });
    };
    let window_count = windows
        .iter()
        .filter(|w| w.hurst.is_some() || w.hit.is_some())
        .count();
    Ok(IndexRun {
        summary: IndexSummary {
            index_id: returns.index_id().to_string(),
            mean_hurst,
            mean_hit: stats::mean(&hits),
            window_count,
            hurst_windows: hursts.len(),
            hit_windows: hits.len(),
            region: Region::Other,
        },
        windows,
    })
}

/// Position relative to the cross-sectional medians. Values equal to a
/// median count as low.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    /// Upper right; the less efficient, more predictable corner.
    HighHurstHighHit,
    HighHurstLowHit,
    LowHurstHighHit,
    /// Lower left; the more efficient, less predictable corner.
    LowHurstLowHit,
}

impl Quadrant {
    pub fn of<T: Scalar>(hurst: T, hit: T, hurst_median: T, hit_median: T) -> Self {
        match (hurst > hurst_median, hit > hit_median) {
            (true, true) => Quadrant::HighHurstHighHit,
            (true, false) => Quadrant::HighHurstLowHit,
            (false, true) => Quadrant::LowHurstHighHit,
            (false, false) => Quadrant::LowHurstLowHit,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrant::HighHurstHighHit => "high-H/high-hit",
            Quadrant::HighHurstLowHit => "high-H/low-hit",
            Quadrant::LowHurstHighHit => "low-H/high-hit",
            Quadrant::LowHurstLowHit => "low-H/low-hit",
        })
    }
}

impl FromStr for Quadrant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "high-H/high-hit" => Ok(Quadrant::HighHurstHighHit),
            "high-H/low-hit" => Ok(Quadrant::HighHurstLowHit),
            "low-H/high-hit" => Ok(Quadrant::LowHurstHighHit),
            "low-H/low-hit" => Ok(Quadrant::LowHurstLowHit),
            _ => Err(format!("unknown quadrant `{s}`")),
        }
    }
}

/// One index's coordinates in the scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint<T> {
    pub index_id: String,
    pub mean_hurst: T,
    pub mean_hit: T,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionReport<T> {
    /// `None` when either axis has zero variance.
    pub pearson: Option<T>,
    /// Rank correlation, diagnostic only.
    pub spearman: Option<T>,
    pub n_indexes: usize,
    pub hurst_median: T,
    pub hit_median: T,
    pub points: Vec<ScatterPoint<T>>,
    pub quadrants: Vec<(String, Quadrant)>,
}

/// Median-split labels for every point of `report`.
pub fn classify_quadrants<T: Scalar>(report: &CrossSectionReport<T>) -> Vec<(String, Quadrant)> {
    report
        .points
        .iter()
        .map(|p| {
            (
                p.index_id.clone(),
                Quadrant::of(p.mean_hurst, p.mean_hit, report.hurst_median, report.hit_median),
            )
        })
        .collect()
}

/// Correlates per-index mean Hurst exponents with mean hit rates. Indexes
/// without a mean hit rate are left out.
pub fn cross_section<T: Scalar>(
    summaries: &[IndexSummary<T>],
) -> Result<CrossSectionReport<T>, EngineError> {
    let points: Vec<ScatterPoint<T>> = summaries
        .iter()
        .filter_map(|s| {
            s.mean_hit.map(|hit| ScatterPoint {
                index_id: s.index_id.clone(),
                mean_hurst: s.mean_hurst,
                mean_hit: hit,
                region: s.region,
            })
        })
        .collect();
    if points.len() < MIN_CROSS_SECTION {
        return Err(EngineError::TooFewIndexes {
            usable: points.len(),
            required: MIN_CROSS_SECTION,
        });
    }
    let hs: Vec<T> = points.iter().map(|p| p.mean_hurst).collect();
    let ns: Vec<T> = points.iter().map(|p| p.mean_hit).collect();
    let mut report = CrossSectionReport {
        pearson: stats::pearson(&hs, &ns),
        spearman: stats::spearman(&hs, &ns),
        n_indexes: points.len(),
        hurst_median: stats::median(&hs).expect("non-empty"),
        hit_median: stats::median(&ns).expect("non-empty"),
        points,
        quadrants: Vec::new(),
    };
    report.quadrants = classify_quadrants(&report);
    Ok(report)
}

/// Runs many indexes concurrently, preserving input order.
pub fn run_many<T: Scalar>(
    inputs: &[(ReturnSeries<T>, WindowSchedule)],
    embedding: &EmbeddingConfig,
    dfa_config: &DfaConfig,
) -> Vec<Result<IndexRun<T>, EngineError>> {
    inputs
        .par_iter()
        .map(|(series, schedule)| run_index(series, schedule, embedding, dfa_config))
        .collect()
}
