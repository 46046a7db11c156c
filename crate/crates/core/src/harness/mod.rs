//! Multi-run campaigns over one shared train/test split, plus the speedup
//! measurement.

pub mod config;
pub mod report;
pub mod repeatability;
pub mod stats;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{stratified_split, Dataset, SplitPair};
use crate::engine::{run_with, Algorithm, EngineConfig, RunResult, SubsetEvaluator, WrapperFitness};
use crate::error::Result;
use crate::stream::mix64;

pub use config::{DataFormat, DataSource, ExperimentConfig};
pub use report::{emit_reports, load_campaign, CampaignRecord, RunRecord};

/// Loads the configured dataset and performs the campaign's stratified split.
pub fn load_split(cfg: &ExperimentConfig) -> Result<SplitPair> {
    let ds: Dataset = cfg.data.load()?;
    log::info!(
        "loaded {} rows x {} features from {}",
        ds.nrows(),
        ds.nfeat(),
        cfg.data.path.display()
    );
    stratified_split(&ds, cfg.split_ratio, cfg.split_seed)
}

/// Seed of run `run`: the master seed xor a hash of the run index.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    master_seed ^ mix64(run as u64)
}

/// Engine configuration for one run. Run `r` uses the same seed for every
/// algorithm, so runs are paired across algorithms.
pub fn run_config(cfg: &ExperimentConfig, algorithm: Algorithm, run: usize) -> EngineConfig {
    let mut e = cfg.engine.clone().with_algorithm(algorithm);
    e.master_seed = run_seed(cfg.engine.master_seed, run);
    e.run_index = run as u64;
    e
}

/// Runs every configured algorithm `cfg.runs` times on a caller-supplied split.
pub fn run_campaign_on(cfg: &ExperimentConfig, split: &SplitPair) -> Result<Vec<(Algorithm, Vec<RunResult>)>> {
    cfg.validate()?;
    let fitness = WrapperFitness::new(split);
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let mut results = Vec::with_capacity(cfg.runs);
        for r in 0..cfg.runs {
            let res = run_with(&run_config(cfg, alg, r), &fitness)?;
            log::info!(
                "{alg} run {}/{}: test AUC {:.4}, {} features, {:.2}s",
                r + 1,
                cfg.runs,
                res.best.auc_value().unwrap_or(0.0),
                res.best.cardinality(),
                res.wall_time
            );
            results.push(res);
        }
        out.push((alg, results));
    }
    Ok(out)
}

/// Loads the data, runs the campaign and collects the per-run records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CampaignRecord> {
    let split = load_split(cfg)?;
    let results = run_campaign_on(cfg, &split)?;
    Ok(CampaignRecord::from_results(split.train.feature_names(), cfg.runs, &results))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub sequential_seconds: f64,
    pub parallel_seconds: f64,
    pub parallelism: usize,
    /// Sequential over parallel wall time, truncated to two decimals.
    pub speedup: f64,
}

impl SpeedupReport {
    pub fn from_timings(sequential_seconds: f64, parallel_seconds: f64, parallelism: usize) -> Self {
        let ratio = sequential_seconds / parallel_seconds;
        // The epsilon keeps exact quotients such as 2.00 from landing on 1.99.
        let speedup = ((ratio * 100.0) + 1e-9).floor() / 100.0;
        SpeedupReport {
            sequential_seconds,
            parallel_seconds,
            parallelism,
            speedup,
        }
    }
}

/// Times one run with a single lane and one with `cfg.parallelism` lanes.
/// Both runs use the same seed and must produce the same result.
pub fn measure_speedup<E: SubsetEvaluator + ?Sized>(cfg: &EngineConfig, evaluator: &E) -> Result<SpeedupReport> {
    let mut seq_cfg = cfg.clone();
    seq_cfg.parallelism = 1;

    let t = Instant::now();
    let seq = run_with(&seq_cfg, evaluator)?;
    let sequential = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let par = run_with(cfg, evaluator)?;
    let parallel = t.elapsed().as_secs_f64();

    if seq.best.mask != par.best.mask || seq.train_best_trace != par.train_best_trace {
        return Err(crate::error::Error::Runtime(
            "sequential and parallel runs diverged".to_string(),
        ));
    }
    Ok(SpeedupReport::from_timings(sequential, parallel, cfg.parallelism))
}

/// Speedup of every configured algorithm on the configured data (run 0 seeds).
pub fn speedup(cfg: &ExperimentConfig) -> Result<Vec<(Algorithm, SpeedupReport)>> {
    cfg.validate()?;
    let split = load_split(cfg)?;
    let fitness = WrapperFitness::new(&split);
    cfg.algorithms
        .iter()
        .map(|&alg| Ok((alg, measure_speedup(&run_config(cfg, alg, 0), &fitness)?)))
        .collect()
}
