//! Quarterly EPS forecasting: panel ingestion, preprocessing, LSTM/TCN
//! networks on a small reverse-mode autodiff core, training and skill-score
//! evaluation against the persistent model and analyst consensus.

pub mod domain;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod ingest;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod train;

pub use error::{Error, Result};
