//! Parallel evolutionary wrapper for feature subset selection.
//!
//! Binary feature masks are evolved with binary differential evolution
//! (P-BDE) or with one of two hybrids that interleave it with threshold
//! accepting (PB-DETA runs DE then TA each iteration, PB-TADE runs TA then
//! DE). A subset is scored by the balanced AUC of a logistic-regression model
//! fitted on the selected columns. The [`harness`] module runs multi-run
//! campaigns and produces repeatability, speedup and paired t-test reports.
//!
//! ```no_run
//! use evofss::{data, engine};
//!
//! let ds = data::load_libsvm("train.svm", None)?;
//! let split = data::stratified_split(&ds, 0.8, 42)?;
//! let cfg = engine::EngineConfig::default().with_algorithm(engine::Algorithm::Pbtade);
//! let result = engine::run(&cfg, &split)?;
//! println!("{:?} {:.4}", result.best.selected_ids, result.best.auc_value().unwrap());
//! # Ok::<(), evofss::Error>(())
//! ```

pub mod classifier;
pub mod data;
pub mod engine;
pub mod error;
pub mod harness;
pub mod operators;
pub mod population;
pub mod stream;

pub use classifier::{evaluate_fitness, FitnessScore};
pub use data::{Dataset, SplitPair};
pub use engine::{run, run_with, Algorithm, EngineConfig, RunResult, SubsetEvaluator, WrapperFitness};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, SpeedupReport};
pub use population::{FeatureMask, Individual, Population};
