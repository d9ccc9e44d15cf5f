//! Price and return series and the rolling window schedule.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use thiserror::Error;

use crate::Scalar;

/// Observations per month under [`MonthRule::Synthetic21Day`].
pub const SYNTHETIC_MONTH_LEN: usize = 21;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("dates ({dates}) and values ({values}) differ in length")]
    LengthMismatch { dates: usize, values: usize },
    #[error("series has {len} observations, at least {min} required")]
    TooShort { len: usize, min: usize },
    #[error("row {row}: date {date} does not follow the previous date")]
    NonIncreasingDate { row: usize, date: NaiveDate },
    #[error("row {row}: price {value} is not positive")]
    NonPositivePrice { row: usize, value: f64 },
    #[error("row {row}: value is not finite")]
    NonFinite { row: usize },
    #[error("{name} must be positive")]
    ZeroPeriod { name: &'static str },
    #[error(
        "insufficient history: one window needs {required_months} months, series covers {available_months}"
    )]
    InsufficientHistory {
        required_months: usize,
        available_months: usize,
    },
}

/// Date-stamped price levels. Dates strictly increase and prices are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries<T> {
    index_id: String,
    dates: Vec<NaiveDate>,
    prices: Vec<T>,
}

impl<T: Scalar> PriceSeries<T> {
    pub fn new(
        index_id: impl Into<String>,
        dates: Vec<NaiveDate>,
        prices: Vec<T>,
    ) -> Result<Self, SeriesError> {
        if dates.len() != prices.len() {
            return Err(SeriesError::LengthMismatch {
                dates: dates.len(),
                values: prices.len(),
            });
        }
        if prices.len() < 2 {
            return Err(SeriesError::TooShort {
                len: prices.len(),
                min: 2,
            });
        }
        check_dates(&dates)?;
        for (row, &p) in prices.iter().enumerate() {
            if !p.is_finite() {
                return Err(SeriesError::NonFinite { row });
            }
            if p <= T::zero() {
                return Err(SeriesError::NonPositivePrice {
                    row,
                    value: p.as_f64(),
                });
            }
        }
        Ok(Self {
            index_id: index_id.into(),
            dates,
            prices,
        })
    }

    pub fn index_id(&self) -> &str {
        &self.index_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[T] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Log returns `R_t = ln P_t - ln P_{t-1}`, dated by the later price.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries<T> {
    index_id: String,
    dates: Vec<NaiveDate>,
    returns: Vec<T>,
}

impl<T: Scalar> ReturnSeries<T> {
    pub fn new(
        index_id: impl Into<String>,
        dates: Vec<NaiveDate>,
        returns: Vec<T>,
    ) -> Result<Self, SeriesError> {
        if dates.len() != returns.len() {
            return Err(SeriesError::LengthMismatch {
                dates: dates.len(),
                values: returns.len(),
            });
        }
        if returns.is_empty() {
            return Err(SeriesError::TooShort { len: 0, min: 1 });
        }
        check_dates(&dates)?;
        if let Some(row) = returns.iter().position(|r| !r.is_finite()) {
            return Err(SeriesError::NonFinite { row });
        }
        Ok(Self {
            index_id: index_id.into(),
            dates,
            returns,
        })
    }

    /// Wraps undated returns, stamping them with consecutive weekdays starting
    /// on the first business day after [`synthetic_origin`].
    pub fn synthetic(index_id: impl Into<String>, returns: Vec<T>) -> Result<Self, SeriesError> {
        let dates = business_days(next_business_day(synthetic_origin()), returns.len());
        Self::new(index_id, dates, returns)
    }

    pub fn index_id(&self) -> &str {
        &self.index_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[T] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Rebuilds a price path `P_0 · exp(Σ R)`. The first price is dated on the
    /// business day before the first return.
    pub fn to_prices(&self, first_price: T) -> Result<PriceSeries<T>, SeriesError> {
        let mut dates = Vec::with_capacity(self.len() + 1);
        dates.push(previous_business_day(self.dates[0]));
        dates.extend_from_slice(&self.dates);
        let ln0 = first_price.ln();
        let mut acc = T::zero();
        let mut prices = Vec::with_capacity(self.len() + 1);
        prices.push(first_price);
        for &r in &self.returns {
            acc = acc + r;
            prices.push((ln0 + acc).exp());
        }
        PriceSeries::new(self.index_id.clone(), dates, prices)
    }

    /// Sub-series over an index range, keeping the identifier.
    pub fn slice(&self, range: Range<usize>) -> Result<Self, SeriesError> {
        Self::new(
            self.index_id.clone(),
            self.dates[range.clone()].to_vec(),
            self.returns[range].to_vec(),
        )
    }
}

fn check_dates(dates: &[NaiveDate]) -> Result<(), SeriesError> {
    for (row, pair) in dates.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(SeriesError::NonIncreasingDate {
                row: row + 1,
                date: pair[1],
            });
        }
    }
    Ok(())
}

/// Anchor date for synthetic series.
pub fn synthetic_origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(1999, 12, 31).expect("valid date")
}

fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn next_business_day(d: NaiveDate) -> NaiveDate {
    let mut d = d + Days::new(1);
    while is_weekend(d) {
        d = d + Days::new(1);
    }
    d
}

fn previous_business_day(d: NaiveDate) -> NaiveDate {
    let mut d = d - Days::new(1);
    while is_weekend(d) {
        d = d - Days::new(1);
    }
    d
}

fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    for _ in 0..count {
        out.push(d);
        d = next_business_day(d);
    }
    out
}

/// Log returns of raw price levels. Fails on the first non-positive price.
pub fn log_returns_of<T: Scalar>(prices: &[T]) -> Result<Vec<T>, SeriesError> {
    if let Some(row) = prices.iter().position(|&p| !(p > T::zero())) {
        return Err(SeriesError::NonPositivePrice {
            row,
            value: prices[row].as_f64(),
        });
    }
    Ok(prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

/// Log-return transform of a validated price series.
pub fn log_returns<T: Scalar>(prices: &PriceSeries<T>) -> ReturnSeries<T> {
    let returns = log_returns_of(prices.prices()).expect("PriceSeries holds positive prices");
    ReturnSeries {
        index_id: prices.index_id.clone(),
        dates: prices.dates[1..].to_vec(),
        returns,
    }
}

/// How observations are grouped into months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonthRule {
    /// Consecutive returns sharing a calendar (year, month).
    #[default]
    Calendar,
    /// Exactly 21 consecutive observations; a trailing partial month is ignored.
    Synthetic21Day,
}

impl fmt::Display for MonthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonthRule::Calendar => "calendar",
            MonthRule::Synthetic21Day => "synthetic-21-day",
        })
    }
}

impl FromStr for MonthRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "calendar" => Ok(MonthRule::Calendar),
            "synthetic-21-day" => Ok(MonthRule::Synthetic21Day),
            other => Err(format!(
                "unknown month rule `{other}` (expected `calendar` or `synthetic-21-day`)"
            )),
        }
    }
}

/// One estimation range followed immediately by its prediction range.
/// Ranges are half-open indices into the return series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub first_month: usize,
    pub estimation: Range<usize>,
    pub prediction: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSchedule {
    pub windows: Vec<Window>,
    pub estimation_months: usize,
    pub prediction_months: usize,
    pub roll_months: usize,
    pub month_rule: MonthRule,
    /// Whole months the series spans under `month_rule`.
    pub available_months: usize,
}

impl WindowSchedule {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Start index of every month plus the end sentinel.
fn month_starts(dates: &[NaiveDate], rule: MonthRule) -> Vec<usize> {
    match rule {
        MonthRule::Synthetic21Day => {
            let months = dates.len() / SYNTHETIC_MONTH_LEN;
            (0..=months).map(|m| m * SYNTHETIC_MONTH_LEN).collect()
        }
        MonthRule::Calendar => {
            let mut starts = vec![0];
            for (i, pair) in dates.windows(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                if (a.year(), a.month()) != (b.year(), b.month()) {
                    starts.push(i + 1);
                }
            }
            starts.push(dates.len());
            starts
        }
    }
}

/// Enumerates rolling windows from the series start, advancing by
/// `roll_months`, while the next prediction range still fits.
pub fn build_window_schedule<T: Scalar>(
    series: &ReturnSeries<T>,
    estimation_months: usize,
    prediction_months: usize,
    roll_months: usize,
    month_rule: MonthRule,
) -> Result<WindowSchedule, SeriesError> {
    schedule_from_dates(
        series.dates(),
        estimation_months,
        prediction_months,
        roll_months,
        month_rule,
    )
}

pub(crate) fn schedule_from_dates(
    dates: &[NaiveDate],
    estimation_months: usize,
    prediction_months: usize,
    roll_months: usize,
    month_rule: MonthRule,
) -> Result<WindowSchedule, SeriesError> {
    for (name, v) in [
        ("estimation_months", estimation_months),
        ("prediction_months", prediction_months),
        ("roll_months", roll_months),
    ] {
        if v == 0 {
            return Err(SeriesError::ZeroPeriod { name });
        }
    }
    let starts = month_starts(dates, month_rule);
    let available_months = starts.len() - 1;
    let span = estimation_months + prediction_months;
    if span > available_months {
        return Err(SeriesError::InsufficientHistory {
            required_months: span,
            available_months,
        });
    }
    let windows = (0..)
        .map(|w| w * roll_months)
        .take_while(|first| first + span <= available_months)
        .enumerate()
        .map(|(index, first)| {
            let est_end = first + estimation_months;
            Window {
                index,
                first_month: first,
                estimation: starts[first]..starts[est_end],
                prediction: starts[est_end]..starts[est_end + prediction_months],
            }
        })
        .collect();
    Ok(WindowSchedule {
        windows,
        estimation_months,
        prediction_months,
        roll_months,
        month_rule,
        available_months,
    })
}

/// The most recent `months` whole months of `series` under `rule`.
pub fn last_months<T: Scalar>(
    series: &ReturnSeries<T>,
    months: usize,
    rule: MonthRule,
) -> Result<ReturnSeries<T>, SeriesError> {
    if months == 0 {
        return Err(SeriesError::ZeroPeriod { name: "months" });
    }
    let start = match rule {
        MonthRule::Synthetic21Day => series.len().checked_sub(months * SYNTHETIC_MONTH_LEN),
        MonthRule::Calendar => {
            let starts = month_starts(series.dates(), rule);
            (starts.len() - 1).checked_sub(months).map(|i| starts[i])
        }
    };
    let available_months = month_starts(series.dates(), rule).len() - 1;
    let start = start.ok_or(SeriesError::InsufficientHistory {
        required_months: months,
        available_months,
    })?;
    series.slice(start..series.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn synthetic(len: usize) -> ReturnSeries<f64> {
        ReturnSeries::synthetic("s", vec![0.0; len]).unwrap()
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        assert_eq!(log_returns_of(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn unit_log_return() {
        let r = log_returns_of(&[1.0, std::f64::consts::E]).unwrap();
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn worked_log_returns() {
        // ln(105/100) and ln(102/105), 20 significant digits.
        let r = log_returns_of(&[100.0, 105.0, 102.0]).unwrap();
        assert_relative_eq!(r[0], 0.048_790_164_169_432_003, epsilon = 1e-15);
        assert_relative_eq!(r[1], -0.028_987_536_873_252_298, epsilon = 1e-15);
    }

    #[test]
    fn non_positive_price_names_row() {
        assert_eq!(
            log_returns_of(&[1.0, 2.0, 0.0]),
            Err(SeriesError::NonPositivePrice { row: 2, value: 0.0 })
        );
        let d = business_days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 3);
        assert!(matches!(
            PriceSeries::new("x", d, vec![1.0, -1.0, 2.0]),
            Err(SeriesError::NonPositivePrice { row: 1, .. })
        ));
    }

    #[test]
    fn price_series_rejects_duplicate_dates() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        assert!(matches!(
            PriceSeries::new("x", vec![d, d], vec![1.0, 2.0]),
            Err(SeriesError::NonIncreasingDate { row: 1, .. })
        ));
    }

    #[test]
    fn returns_are_dated_by_later_price() {
        let d = business_days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 3);
        let p = PriceSeries::new("x", d.clone(), vec![100.0, 105.0, 102.0]).unwrap();
        let r = log_returns(&p);
        assert_eq!(r.dates(), &d[1..]);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn five_windows_over_126_synthetic_months() {
        let s = build_window_schedule(&synthetic(126 * 21), 60, 12, 12, MonthRule::Synthetic21Day)
            .unwrap();
        let firsts: Vec<usize> = s.windows.iter().map(|w| w.first_month + 1).collect();
        assert_eq!(firsts, vec![1, 13, 25, 37, 49]);
        assert_eq!(s.windows[0].estimation, 0..1260);
        assert_eq!(s.windows[0].prediction, 1260..1512);
    }

    #[test]
    fn exactly_one_window_at_boundary() {
        let s = build_window_schedule(&synthetic(72 * 21), 60, 12, 12, MonthRule::Synthetic21Day)
            .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.windows[0].prediction.end, 72 * 21);
    }

    #[test]
    fn six_month_protocol_doubles_windows() {
        let series = synthetic(240 * 21);
        let yearly =
            build_window_schedule(&series, 60, 12, 12, MonthRule::Synthetic21Day).unwrap();
        let half = build_window_schedule(&series, 60, 6, 6, MonthRule::Synthetic21Day).unwrap();
        assert_eq!(yearly.len(), 15);
        assert_eq!(half.len(), 2 * yearly.len());
    }

    #[test]
    fn insufficient_history_reports_lengths() {
        let err = build_window_schedule(&synthetic(71 * 21 + 20), 60, 12, 12, MonthRule::Synthetic21Day)
            .unwrap_err();
        assert_eq!(
            err,
            SeriesError::InsufficientHistory {
                required_months: 72,
                available_months: 71
            }
        );
    }

    #[test]
    fn calendar_months_follow_dates() {
        // Jan 2021 .. Dec 2021 business days, schedule 3/1/1.
        let dates = business_days(NaiveDate::from_ymd_opt(2021, 1, 4).unwrap(), 260);
        let s = schedule_from_dates(&dates, 3, 1, 1, MonthRule::Calendar).unwrap();
        for w in &s.windows {
            let first = dates[w.estimation.start];
            let pred = dates[w.prediction.start];
            assert!(first.day0() < 4);
            assert_eq!(
                (pred.year() * 12 + pred.month0() as i32) - (first.year() * 12 + first.month0() as i32),
                3
            );
        }
        assert_eq!(s.len(), s.available_months - 3);
    }

    #[test]
    fn recent_months_keep_the_tail() {
        let series = ReturnSeries::synthetic("t", (0..100 * 21).map(|i| i as f64).collect()).unwrap();
        let tail = last_months(&series, 96, MonthRule::Synthetic21Day).unwrap();
        assert_eq!(tail.len(), 96 * 21);
        assert_eq!(tail.returns()[0], (4 * 21) as f64);
        assert!(last_months(&series, 101, MonthRule::Synthetic21Day).is_err());

        let dates = business_days(NaiveDate::from_ymd_opt(2021, 1, 4).unwrap(), 300);
        let cal = ReturnSeries::new("c", dates, vec![0.0; 300]).unwrap();
        let tail = last_months(&cal, 2, MonthRule::Calendar).unwrap();
        let first = tail.dates()[0];
        let last = *tail.dates().last().unwrap();
        // series ends 2022-02-25
        assert_eq!((first.year(), first.month(), first.day()), (2022, 1, 3));
        assert_eq!((last.year(), last.month()), (2022, 2));
    }

    proptest! {
        #[test]
        fn price_round_trip(steps in prop::collection::vec(-0.05f64..0.05, 1..2000), p0 in 1.0f64..1000.0) {
            let r = ReturnSeries::synthetic("rt", steps).unwrap();
            let prices = r.to_prices(p0).unwrap();
            let back = log_returns(&prices);
            let rebuilt = back.to_prices(p0).unwrap();
            for (a, b) in prices.prices().iter().zip(rebuilt.prices()) {
                prop_assert!(((a - b) / a).abs() < 1e-9);
            }
        }

        #[test]
        fn schedules_are_in_bounds_and_disjoint(
            months in 2usize..200,
            est in 1usize..80,
            pred in 1usize..24,
            roll in 1usize..24,
        ) {
            let series = synthetic(months * 21 + 7);
            match build_window_schedule(&series, est, pred, roll, MonthRule::Synthetic21Day) {
                Ok(s) => {
                    prop_assert!(!s.is_empty());
                    for (i, w) in s.windows.iter().enumerate() {
                        prop_assert_eq!(w.estimation.end, w.prediction.start);
                        prop_assert!(w.estimation.start < w.estimation.end);
                        prop_assert!(w.prediction.end <= series.len());
                        prop_assert_eq!(w.estimation.len(), est * 21);
                        prop_assert_eq!(w.prediction.len(), pred * 21);
                        if i > 0 {
                            prop_assert_eq!(w.first_month - s.windows[i - 1].first_month, roll);
                        }
                    }
                    let again = build_window_schedule(&series, est, pred, roll, MonthRule::Synthetic21Day).unwrap();
                    prop_assert_eq!(s, again);
                }
                Err(SeriesError::InsufficientHistory { required_months, available_months }) => {
                    prop_assert!(required_months > available_months);
                    prop_assert_eq!(available_months, months);
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
