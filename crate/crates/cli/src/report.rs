//! Correlation report document and the summary/scatter tables.

use std::fmt::Write as _;
use std::path::Path;

use hurstnn_core::rolling::{self, IndexSummary};
use hurstnn_core::{CrossSectionReport64, IndexSummary64, Quadrant, Region};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SUMMARY_HEADER: &str = "index_id,H_mean,hit_mean,n_windows,region,status";
pub const SCATTER_HEADER: &str = "index_id,H_mean,hit_mean,n_windows,region";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Summary {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    CrossSection(#[from] hurstnn_core::EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantLabel {
    pub index_id: String,
    pub quadrant: String,
    pub region: String,
    pub hurst_mean: f64,
    pub hit_mean: f64,
}

/// Serialized cross-sectional result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson: Option<f64>,
    pub n_indexes: usize,
    pub hurst_median: f64,
    pub hit_median: f64,
    /// Rank correlation, diagnostic only.
    pub spearman: Option<f64>,
    pub quadrants: Vec<QuadrantLabel>,
}

impl From<&CrossSectionReport64> for CorrelationReport {
    fn from(r: &CrossSectionReport64) -> Self {
        let quadrants = r
            .points
            .iter()
            .zip(&r.quadrants)
            .map(|(p, (_, q))| QuadrantLabel {
                index_id: p.index_id.clone(),
                quadrant: q.to_string(),
                region: p.region.to_string(),
                hurst_mean: p.mean_hurst,
                hit_mean: p.mean_hit,
            })
            .collect();
        Self {
            pearson: r.pearson,
            n_indexes: r.n_indexes,
            hurst_median: r.hurst_median,
            hit_median: r.hit_median,
            spearman: r.spearman,
            quadrants,
        }
    }
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ReportError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Human-readable rendering for the terminal.
    pub fn pretty(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        let mut s = String::new();
        let _ = writeln!(s, "indexes        {}", self.n_indexes);
        let _ = writeln!(s, "pearson        {}", fmt_opt(self.pearson));
        let _ = writeln!(s, "spearman       {}", fmt_opt(self.spearman));
        let _ = writeln!(s, "median H       {:.4}", self.hurst_median);
        let _ = writeln!(s, "median hit     {:.4}", self.hit_median);
        let _ = writeln!(s);
        let width = self
            .quadrants
            .iter()
            .map(|q| q.index_id.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let _ = writeln!(
            s,
            "{:<width$}  {:>7}  {:>7}  {:<16}  region",
            "index", "H", "hit", "quadrant"
        );
        for q in &self.quadrants {
            let _ = writeln!(
                s,
                "{:<width$}  {:>7.4}  {:>7.4}  {:<16}  {}",
                q.index_id, q.hurst_mean, q.hit_mean, q.quadrant, q.region
            );
        }
        for quadrant in [Quadrant::HighHurstHighHit, Quadrant::LowHurstLowHit] {
            let label = quadrant.to_string();
            let n = self.quadrants.iter().filter(|q| q.quadrant == label).count();
            let _ = writeln!(s, "{label}: {n}");
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub index_id: String,
    pub hurst_mean: Option<f64>,
    pub hit_mean: Option<f64>,
    pub n_windows: usize,
    pub region: Region,
    /// `ok` or a machine-readable error code.
    pub status: String,
}

impl SummaryRow {
    pub fn from_summary(s: &IndexSummary64) -> Self {
        Self {
            index_id: s.index_id.clone(),
            hurst_mean: Some(s.mean_hurst),
            hit_mean: s.mean_hit,
            n_windows: s.window_count,
            region: s.region,
            status: "ok".into(),
        }
    }

    pub fn failed(index_id: &str, region: Region, code: &str) -> Self {
        Self {
            index_id: index_id.into(),
            hurst_mean: None,
            hit_mean: None,
            n_windows: 0,
            region,
            status: code.into(),
        }
    }

    fn csv_line(&self, with_status: bool) -> String {
        let mut line = format!(
            "{},{},{},{},{}",
            self.index_id,
            opt(self.hurst_mean),
            opt(self.hit_mean),
            self.n_windows,
            self.region
        );
        if with_status {
            line.push(',');
            line.push_str(&self.status);
        }
        line.push('\n');
        line
    }

    fn is_plotted(&self) -> bool {
        self.status == "ok" && self.hurst_mean.is_some() && self.hit_mean.is_some()
    }
}

/// Every index, failures included.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    rows.iter().for_each(|r| s.push_str(&r.csv_line(true)));
    s
}

/// Indexes carrying both coordinates.
pub fn scatter_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SCATTER_HEADER}\n");
    rows.iter()
        .filter(|r| r.is_plotted())
        .for_each(|r| s.push_str(&r.csv_line(false)));
    s
}

/// Reads a summary (or scatter) table back into index summaries, skipping
/// failed rows and rows without a hit rate.
pub fn read_summaries(path: &Path) -> Result<Vec<IndexSummary64>, ReportError> {
    let p = path.display().to_string();
    let err = |line: u64, message: String| ReportError::Summary {
        path: p.clone(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| err(0, e.to_string()))?;
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let columns: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = SCATTER_HEADER.split(',').collect();
    if columns.len() < expected.len() || columns[..expected.len()] != expected[..] {
        return Err(err(1, format!("expected header `{SCATTER_HEADER}[,status]`")));
    }
    let has_status = columns.get(5) == Some(&"status");
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(0, e.to_string()))?;
        let line = record.position().map_or(0, |pos| pos.line());
        if has_status && &record[5] != "ok" {
            continue;
        }
        let num = |i: usize| -> Result<Option<f64>, ReportError> {
            let field = &record[i];
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse()
                .map(Some)
                .map_err(|_| err(line, format!("cannot parse `{field}`")))
        };
        let (Some(mean_hurst), mean_hit) = (num(1)?, num(2)?) else {
            continue;
        };
        let window_count: usize = record[3]
            .parse()
            .map_err(|_| err(line, format!("cannot parse `{}`", &record[3])))?;
        let region: Region = record[4].parse().map_err(|e| err(line, e))?;
        out.push(IndexSummary {
            index_id: record[0].to_string(),
            mean_hurst,
            mean_hit,
            window_count,
            hurst_windows: window_count,
            hit_windows: if mean_hit.is_some() { window_count } else { 0 },
            region,
        });
    }
    Ok(out)
}

/// Recomputes the cross-section from a summary table.
pub fn correlate(path: &Path) -> Result<CorrelationReport, ReportError> {
    let summaries = read_summaries(path)?;
    let cross = rolling::cross_section(&summaries)?;
    Ok(CorrelationReport::from(&cross))
}
