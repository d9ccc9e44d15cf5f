//! Weak-form market efficiency versus short-horizon predictability.
//!
//! The crate measures two quantities over rolling estimation/prediction
//! windows of a return series:
//!
//! * the Hurst exponent from first-order detrended fluctuation analysis
//!   ([`dfa`]), and
//! * the directional hit rate of a delay-embedding nearest-neighbour
//!   forecaster ([`nn`]).
//!
//! [`rolling`] averages both per index and relates them across indexes with a
//! Pearson correlation and a median quadrant split. [`synth`] provides seeded
//! Gaussian random-walk and fractional Gaussian noise generators used as null
//! models and as known-`H` oracles.
//!
//! All numerical code is generic over [`Scalar`]; the `*64` and `*32` aliases
//! below fix the common choices.

pub mod dfa;
pub mod nn;
pub mod rolling;
mod scalar;
pub mod series;
pub mod stats;
pub mod synth;

pub use scalar::Scalar;

pub use dfa::{DfaConfig, DfaError};
pub use nn::{Direction, EmbeddingConfig, NeighborCount, NnError};
pub use rolling::{EngineError, Quadrant, Region};
pub use series::{MonthRule, SeriesError, Window, WindowSchedule};
pub use synth::{GeneratorKind, GeneratorSpec, SynthError};

pub type PriceSeries64 = series::PriceSeries<f64>;
pub type ReturnSeries64 = series::ReturnSeries<f64>;
pub type HurstFit64 = dfa::HurstFit<f64>;
pub type FluctuationPoint64 = dfa::FluctuationPoint<f64>;
pub type PatternMatrix64 = nn::PatternMatrix<f64>;
pub type HitRateRecord64 = nn::HitRateRecord<f64>;
pub type IndexSummary64 = rolling::IndexSummary<f64>;
pub type IndexRun64 = rolling::IndexRun<f64>;
pub type CrossSectionReport64 = rolling::CrossSectionReport<f64>;

pub type PriceSeries32 = series::PriceSeries<f32>;
pub type ReturnSeries32 = series::ReturnSeries<f32>;
pub type HurstFit32 = dfa::HurstFit<f32>;
pub type IndexSummary32 = rolling::IndexSummary<f32>;
