//! Price CSV files: header `date,close`, ISO-8601 dates, positive closes.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use hurstnn_core::PriceSeries64;
use thiserror::Error;

pub const PRICE_HEADER: [&str; 2] = ["date", "close"];

/// Problems with an input file. Line numbers are 1-based and count the header.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: empty file")]
    Empty { path: PathBuf },
    #[error("{path}: expected header `date,close`, found `{found}`")]
    Header { path: PathBuf, found: String },
    #[error("{path}:{line}: malformed row: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: cannot parse date `{value}` (expected YYYY-MM-DD)")]
    BadDate {
        path: PathBuf,
        line: u64,
        value: String,
    },
    #[error("{path}:{line}: cannot parse close `{value}`")]
    BadPrice {
        path: PathBuf,
        line: u64,
        value: String,
    },
    #[error("{path}:{line}: close {value} is not positive")]
    NonPositivePrice { path: PathBuf, line: u64, value: f64 },
    #[error("{path}:{line}: date {date} does not follow the previous row's date")]
    NonIncreasingDate {
        path: PathBuf,
        line: u64,
        date: NaiveDate,
    },
    #[error("{path}: {rows} data rows, at least 2 required")]
    TooFewRows { path: PathBuf, rows: usize },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io",
            IngestError::Empty { .. } => "empty-file",
            IngestError::Header { .. } => "bad-header",
            IngestError::Malformed { .. } => "malformed-row",
            IngestError::BadDate { .. } => "bad-date",
            IngestError::BadPrice { .. } => "bad-price",
            IngestError::NonPositivePrice { .. } => "non-positive-price",
            IngestError::NonIncreasingDate { .. } => "non-increasing-date",
            IngestError::TooFewRows { .. } => "too-few-rows",
        }
    }
}

/// Reads and validates a price file. The index id is the file stem.
pub fn ingest_csv(path: &Path) -> Result<PriceSeries64, IngestError> {
    let p = || path.to_path_buf();
    let file = File::open(path).map_err(|source| IngestError::Io { path: p(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(|e| IngestError::Malformed {
        path: p(),
        line: 1,
        message: e.to_string(),
    })?;
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(IngestError::Empty { path: p() });
    }
    if header.iter().ne(PRICE_HEADER) {
        return Err(IngestError::Header {
            path: p(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut prices = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Malformed {
            path: p(),
            line: e.position().map_or(0, |pos| pos.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |pos| pos.line());
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|_| {
            IngestError::BadDate {
                path: p(),
                line,
                value: record[0].to_string(),
            }
        })?;
        let close: f64 = record[1].parse().map_err(|_| IngestError::BadPrice {
            path: p(),
            line,
            value: record[1].to_string(),
        })?;
        if !close.is_finite() {
            return Err(IngestError::BadPrice {
                path: p(),
                line,
                value: record[1].to_string(),
            });
        }
        if close <= 0.0 {
            return Err(IngestError::NonPositivePrice {
                path: p(),
                line,
                value: close,
            });
        }
        if dates.last().is_some_and(|&prev| date <= prev) {
            return Err(IngestError::NonIncreasingDate {
                path: p(),
                line,
                date,
            });
        }
        dates.push(date);
        prices.push(close);
    }
    if prices.len() < 2 {
        return Err(IngestError::TooFewRows {
            path: p(),
            rows: prices.len(),
        });
    }
    let id = crate::config::index_id_of(path);
    Ok(PriceSeries64::new(id, dates, prices).expect("rows validated above"))
}

/// Price CSV text. Closes use the shortest representation that parses back
/// to the same `f64`.
pub fn price_csv(series: &PriceSeries64) -> String {
    let mut out = String::with_capacity(series.len() * 32);
    out.push_str("date,close\n");
    for (d, p) in series.dates().iter().zip(series.prices()) {
        out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), p));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut f = File::create(path)?;
    f.write_all(contents.as_bytes())
}
