//! Delay-embedding nearest-neighbour direction forecasts.
//!
//! A pattern anchored at `n` reads backwards with stride `τ`:
//! `[x_n, x_{n-τ}, ..., x_{n-(m-1)τ}]`. Anchors are 0-based indices into the
//! series the matrix was built from. For each forecast the `K` historical
//! patterns closest to the latest one (squared Euclidean distance) are
//! re-ranked at dimension `m + 1`, the best fraction is kept, and the signs
//! of their successors vote on tomorrow's direction.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("series of length {len} is too short: at least {min} needed for one pattern and its successor")]
    TooShort { len: usize, min: usize },
    #[error("pattern lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("anchor {anchor} has no pattern (valid anchors {first}..{end})")]
    NoPattern {
        anchor: usize,
        first: usize,
        end: usize,
    },
    #[error("{admissible} admissible candidates, {requested} neighbours requested")]
    TooFewCandidates { admissible: usize, requested: usize },
    #[error("no neighbours to vote")]
    NoVotes,
    #[error("value at {index} is not finite")]
    NonFinite { index: usize },
    #[error("prediction range is empty")]
    EmptyPrediction,
}

/// Neighbour count `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborCount {
    Fixed(usize),
    /// `floor(sqrt(patterns))` over the estimation range, at least 1.
    #[default]
    SqrtPatterns,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConfig {
    pub embedding_dim: usize,
    pub time_delay: usize,
    pub neighbor_count: NeighborCount,
    /// Fraction of the `K` neighbours kept after re-ranking at `m + 1`.
    pub keep_fraction: f64,
    /// Candidates whose anchor lies closer than this to the target anchor are
    /// skipped. `None` means `(m - 1)τ + 1`, i.e. no shared observations.
    pub exclusion_window: Option<usize>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 4,
            time_delay: 1,
            neighbor_count: NeighborCount::SqrtPatterns,
            keep_fraction: 0.5,
            exclusion_window: None,
        }
    }
}

impl EmbeddingConfig {
    /// Observations spanned by one pattern minus one: `(m - 1)τ`.
    pub fn span(&self) -> usize {
        (self.embedding_dim - 1) * self.time_delay
    }

    pub fn exclusion(&self) -> usize {
        self.exclusion_window.unwrap_or(self.span() + 1)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.embedding_dim == 0 {
            return Err(NnError::Config("embedding_dim must be at least 1".into()));
        }
        if self.time_delay == 0 {
            return Err(NnError::Config("time_delay must be at least 1".into()));
        }
        if self.neighbor_count == NeighborCount::Fixed(0) {
            return Err(NnError::Config("neighbor_count must be at least 1".into()));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(NnError::Config(format!(
                "keep_fraction {} outside (0, 1]",
                self.keep_fraction
            )));
        }
        Ok(())
    }

    /// Patterns with a successor inside a history of `len` observations that
    /// survive the exclusion window around the latest anchor.
    pub fn admissible_candidates(&self, len: usize) -> usize {
        len.saturating_sub(self.exclusion() + self.span())
    }

    /// Resolves `K` for an estimation range of `len` observations.
    pub fn neighbors_for(&self, len: usize) -> usize {
        match self.neighbor_count {
            NeighborCount::Fixed(k) => k,
            NeighborCount::SqrtPatterns => {
                let patterns = len.saturating_sub(self.span());
                ((patterns as f64).sqrt().floor() as usize).max(1)
            }
        }
    }
}

/// Backward-looking delay vectors over a series.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix<T> {
    dim: usize,
    delay: usize,
    series: Vec<T>,
    /// Row-major, one row per anchor starting at `first_anchor`.
    data: Vec<T>,
}

impl<T: Scalar> PatternMatrix<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn series(&self) -> &[T] {
        &self.series
    }

    pub fn first_anchor(&self) -> usize {
        (self.dim - 1) * self.delay
    }

    pub fn len(&self) -> usize {
        self.series.len() - self.first_anchor()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn anchors(&self) -> std::ops::Range<usize> {
        self.first_anchor()..self.series.len()
    }

    pub fn pattern(&self, anchor: usize) -> Option<&[T]> {
        let row = anchor.checked_sub(self.first_anchor())?;
        self.data.get(row * self.dim..(row + 1) * self.dim)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[T])> {
        self.anchors().zip(self.data.chunks_exact(self.dim))
    }
}

pub fn embed<T: Scalar>(series: &[T], m: usize, tau: usize) -> Result<PatternMatrix<T>, NnError> {
    if m == 0 || tau == 0 {
        return Err(NnError::Config(
            "embedding_dim and time_delay must be at least 1".into(),
        ));
    }
    let min = (m - 1) * tau + 2;
    if series.len() < min {
        return Err(NnError::TooShort {
            len: series.len(),
            min,
        });
    }
    let first = (m - 1) * tau;
    let mut data = Vec::with_capacity((series.len() - first) * m);
    for n in first..series.len() {
        data.extend((0..m).map(|j| series[n - j * tau]));
    }
    Ok(PatternMatrix {
        dim: m,
        delay: tau,
        series: series.to_vec(),
        data,
    })
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T, NnError> {
    if a.len() != b.len() {
        return Err(NnError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(sq_dist(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborMatch<T> {
    pub anchor: usize,
    pub distance: T,
    pub successor: T,
}

/// Total order on matches: distance, then the earlier anchor.
fn by_distance<T: Scalar>(a: &NeighborMatch<T>, b: &NeighborMatch<T>) -> Ordering {
    a.distance
        .partial_cmp(&b.distance)
        .unwrap_or(Ordering::Equal)
        .then(a.anchor.cmp(&b.anchor))
}

/// The `k` patterns closest to the one at `target_anchor`, ascending.
///
/// A candidate is admissible when its successor lies in the matrix's series
/// and `|anchor - target_anchor| >= exclusion_window`.
pub fn select_neighbors<T: Scalar>(
    matrix: &PatternMatrix<T>,
    target_anchor: usize,
    k: usize,
    exclusion_window: usize,
) -> Result<Vec<NeighborMatch<T>>, NnError> {
    let target = matrix.pattern(target_anchor).ok_or(NnError::NoPattern {
        anchor: target_anchor,
        first: matrix.first_anchor(),
        end: matrix.series.len(),
    })?;
    let last_with_successor = matrix.series.len() - 1;
    let mut pool: Vec<NeighborMatch<T>> = matrix
        .iter()
        .filter(|&(a, _)| a < last_with_successor && a.abs_diff(target_anchor) >= exclusion_window)
        .map(|(a, p)| NeighborMatch {
            anchor: a,
            distance: sq_dist(target, p),
            successor: matrix.series[a + 1],
        })
        .collect();
    if k == 0 || pool.len() < k {
        return Err(NnError::TooFewCandidates {
            admissible: pool.len(),
            requested: k,
        });
    }
    if k < pool.len() {
        pool.select_nth_unstable_by(k - 1, by_distance);
        pool.truncate(k);
    }
    pool.sort_by(by_distance);
    Ok(pool)
}

/// Result of re-ranking neighbours at dimension `m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Confirmation<T> {
    /// Survivors ordered by their `m + 1` distance, which `distance` now holds.
    /// On fallback, the input candidates unchanged.
    pub matches: Vec<NeighborMatch<T>>,
    /// Candidates without the extra history component.
    pub dropped: usize,
    /// `true` when no candidate (or the target) had `m + 1` history.
    pub fell_back: bool,
}

/// `K* = max(1, ceil(keep_fraction · K))`.
pub fn confirmed_count(k: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * k as f64).ceil() as usize).clamp(1, k.max(1))
}

/// Recomputes candidate distances with one more delay component and keeps
/// the `K*` closest.
pub fn confirm_neighbors<T: Scalar>(
    candidates: &[NeighborMatch<T>],
    series: &[T],
    m: usize,
    tau: usize,
    target_anchor: usize,
    keep_fraction: f64,
) -> Result<Confirmation<T>, NnError> {
    if candidates.is_empty() {
        return Err(NnError::NoVotes);
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(NnError::Config(format!(
            "keep_fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let reach = m * tau;
    let target_ok = target_anchor >= reach && target_anchor < series.len();
    let extended = |anchor: usize| -> T {
        (0..=m)
            .map(|j| {
                let d = series[anchor - j * tau] - series[target_anchor - j * tau];
                d * d
            })
            .sum()
    };
    let mut survivors: Vec<NeighborMatch<T>> = if target_ok {
        candidates
            .iter()
            .filter(|c| c.anchor >= reach && c.anchor < series.len())
            .map(|c| NeighborMatch {
                distance: extended(c.anchor),
                ..*c
            })
            .collect()
    } else {
        Vec::new()
    };
    let dropped = candidates.len() - survivors.len();
    if survivors.is_empty() {
        return Ok(Confirmation {
            matches: candidates.to_vec(),
            dropped,
            fell_back: true,
        });
    }
    survivors.sort_by(by_distance);
    survivors.truncate(confirmed_count(candidates.len(), keep_fraction));
    Ok(Confirmation {
        matches: survivors,
        dropped,
        fell_back: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionForecast<T> {
    pub direction: Direction,
    pub up_votes: usize,
    pub down_votes: usize,
    pub confirmed_count: usize,
    /// Mean successor return; the magnitude forecast, reported but not scored.
    pub mean_successor: T,
}

/// Majority vote of successor signs. Zero successors vote down; a tied vote
/// goes to the sign of the mean successor, and a zero mean goes up.
pub fn forecast_direction<T: Scalar>(
    confirmed: &[NeighborMatch<T>],
) -> Result<DirectionForecast<T>, NnError> {
    if confirmed.is_empty() {
        return Err(NnError::NoVotes);
    }
    let up_votes = confirmed
        .iter()
        .filter(|c| c.successor > T::zero())
        .count();
    let down_votes = confirmed.len() - up_votes;
    let mean_successor =
        confirmed.iter().map(|c| c.successor).sum::<T>() / T::of_usize(confirmed.len());
    let direction = match up_votes.cmp(&down_votes) {
        Ordering::Greater => Direction::Up,
        Ordering::Less => Direction::Down,
        Ordering::Equal if mean_successor < T::zero() => Direction::Down,
        Ordering::Equal => Direction::Up,
    };
    Ok(DirectionForecast {
        direction,
        up_votes,
        down_votes,
        confirmed_count: confirmed.len(),
        mean_successor,
    })
}

/// Directional accuracy over a prediction range. Days whose actual return is
/// exactly zero are excluded from both counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitRateRecord<T> {
    pub trading_days: usize,
    pub scored_days: usize,
    pub hits: usize,
    /// `hits / scored_days`; `None` when nothing was scored.
    pub hit_rate: Option<T>,
}

pub fn hit_rate<T: Scalar>(
    forecasts: &[DirectionForecast<T>],
    actual_returns: &[T],
) -> Result<HitRateRecord<T>, NnError> {
    if forecasts.len() != actual_returns.len() {
        return Err(NnError::LengthMismatch {
            left: forecasts.len(),
            right: actual_returns.len(),
        });
    }
    let mut scored_days = 0;
    let mut hits = 0;
    for (f, &r) in forecasts.iter().zip(actual_returns) {
        let actual = if r > T::zero() {
            Direction::Up
        } else if r < T::zero() {
            Direction::Down
        } else {
            continue;
        };
        scored_days += 1;
        if f.direction == actual {
            hits += 1;
        }
    }
    let hit_rate = (scored_days > 0).then(|| T::of_usize(hits) / T::of_usize(scored_days));
    Ok(HitRateRecord {
        trading_days: forecasts.len(),
        scored_days,
        hits,
        hit_rate,
    })
}

/// Everything [`predict_window`] produced for one prediction range.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPrediction<T> {
    pub record: HitRateRecord<T>,
    pub forecasts: Vec<DirectionForecast<T>>,
    /// Neighbour count `K` used on every day.
    pub neighbors: usize,
    /// Days on which the `m + 1` confirmation fell back to all `K`.
    pub confirmation_fallbacks: usize,
}

/// One-day-ahead forecasts across `prediction`.
///
/// The history is a fixed-length window the size of `estimation` that slides
/// forward one observation per day, so day `d` sees
/// `estimation[d..] ++ prediction[..d]` and forecasts `prediction[d]`.
pub fn predict_window<T: Scalar>(
    estimation: &[T],
    prediction: &[T],
    config: &EmbeddingConfig,
) -> Result<WindowPrediction<T>, NnError> {
    config.validate()?;
    if prediction.is_empty() {
        return Err(NnError::EmptyPrediction);
    }
    let min = config.span() + 2;
    if estimation.len() < min {
        return Err(NnError::TooShort {
            len: estimation.len(),
            min,
        });
    }
    let full: Vec<T> = estimation.iter().chain(prediction).copied().collect();
    if let Some(index) = full.iter().position(|x| !x.is_finite()) {
        return Err(NnError::NonFinite { index });
    }
    let len = estimation.len();
    let k = config.neighbors_for(len);
    let admissible = config.admissible_candidates(len);
    if admissible < k {
        return Err(NnError::TooFewCandidates {
            admissible,
            requested: k,
        });
    }
    let (m, tau) = (config.embedding_dim, config.time_delay);
    let exclusion = config.exclusion();
    let mut forecasts = Vec::with_capacity(prediction.len());
    let mut fallbacks = 0;
    for d in 0..prediction.len() {
        let history = &full[d..d + len];
        let matrix = embed(history, m, tau)?;
        let target = len - 1;
        let neighbors = select_neighbors(&matrix, target, k, exclusion)?;
        let confirmed = confirm_neighbors(&neighbors, history, m, tau, target, config.keep_fraction)?;
        if confirmed.fell_back {
            fallbacks += 1;
        }
        forecasts.push(forecast_direction(&confirmed.matches)?);
    }
    let record = hit_rate(&forecasts, prediction)?;
    Ok(WindowPrediction {
        record,
        forecasts,
        neighbors: k,
        confirmation_fallbacks: fallbacks,
    })
}
