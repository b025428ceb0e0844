//! Trend-based training-instance selection for named entity recognition
//! under temporal drift, with an incremental CRF retraining harness.
//!
//! Core numeric types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod corpus;
pub mod error;
pub mod evalmetrics;
pub mod experiment;
mod kv;
pub mod scalar;
pub mod tagger;
pub mod tags;
pub mod textproc;
pub mod trend;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TrendScorerF64 = trend::TrendScorer<f64>;
pub type TrendScorerF32 = trend::TrendScorer<f32>;
pub type CrfModelF64 = tagger::CrfModel<f64>;
pub type CrfModelF32 = tagger::CrfModel<f32>;
