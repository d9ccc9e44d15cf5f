//! Command-line front end for the DFA Hurst / nearest-neighbour hit-rate
//! study: configuration, price file ingestion, the analysis pipeline and
//! report files.

pub mod analyze;
pub mod config;
pub mod io;
pub mod report;
