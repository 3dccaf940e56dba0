//! Curriculum learning toolkit for conversation response ranking.
//!
//! The crate scores training instances by difficulty, orders them, turns a
//! pacing function into a deterministic batch schedule, and evaluates ranking
//! runs with MAP, paired t-tests and bucketed breakdowns. The ranking model
//! itself sits behind the [`scheduler::Learner`] trait.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the command-line tool
//! uses.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod formats;
pub mod pacing;
pub mod real;
pub mod rng;
pub mod scheduler;
pub mod scoring;
pub mod stats;
pub mod textproc;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar used by the command-line tool.
pub type Scalar = f64;

pub type DatasetStats64 = corpus::DatasetStats<f64>;
pub type EmbeddingTable64 = textproc::EmbeddingTable<f64>;
pub type EmbeddingTable32 = textproc::EmbeddingTable<f32>;
pub type Bm25Index64 = textproc::Bm25Index<f64>;
pub type Bm25Index32 = textproc::Bm25Index<f32>;
pub type Bm25Params64 = textproc::Bm25Params<f64>;
pub type ExternalPredictions64 = scoring::ExternalPredictions<f64>;
pub type ScoredDataset64 = scoring::ScoredDataset<f64>;
pub type ScoredDataset32 = scoring::ScoredDataset<f32>;
pub type PacingConfig64 = pacing::PacingConfig<f64>;
pub type PacingConfig32 = pacing::PacingConfig<f32>;
pub type ScheduleConfig64 = scheduler::ScheduleConfig<f64>;
pub type BatchSchedule64 = scheduler::BatchSchedule<f64>;
pub type ToyLearner64 = scheduler::ToyLearner<f64>;
pub type RunLog64 = scheduler::RunLog<f64>;
pub type RunScores64 = eval::RunScores<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;
