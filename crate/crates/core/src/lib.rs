//! Stratified-sampling active learning for class-rate estimation.
//!
//! The library builds variance-minimizing stratification trees over model
//! scores, allocates labeling budgets by Neyman allocation, draws stratified
//! samples over the total pool, and produces unbiased class-rate estimates
//! with variance reports. A Monte Carlo harness benchmarks this strategy
//! (NSRS) against simple random sampling (SRS) and uncertainty entropy
//! sampling (UES) on synthetic populations with known rates.
//!
//! Numeric kernels are generic over [`scalar::Real`] (f32/f64); the
//! simulation harness and the aliases below pin `f64`.

pub mod error;
pub mod estimators;
pub mod models;
pub mod pool;
pub mod sampling;
pub mod scalar;
pub mod simulation;
pub mod strategies;

pub use error::{Error, Result};
pub use pool::{PositiveSet, UnitId};
pub use strategies::QueryStrategy;

/// f64 instantiations used by the harness and CLI.
pub type SamplePool64 = pool::SamplePool<f64>;
pub type StratifiedTree64 = sampling::StratifiedTree<f64>;
pub type RoundEstimate64 = estimators::RoundEstimate<f64>;
pub type FinalEstimate64 = estimators::FinalEstimate<f64>;
pub type SelectionResult64 = strategies::SelectionResult<f64>;
pub type LinearModel64 = models::LinearModel<f64>;
pub type OracleScoreModel64 = models::OracleScoreModel<f64>;
