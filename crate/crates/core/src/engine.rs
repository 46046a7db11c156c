//! Search drivers: parallel binary DE (P-BDE) and the two tightly coupled
//! hybrids, DE then TA (PB-DETA) and TA then DE (PB-TADE), per outer
//! iteration.
//!
//! Fitness evaluations are the only concurrent work. All population updates
//! happen on the calling thread between evaluation batches, and every random
//! decision comes from a [`StreamRoot`]-derived stream, so a run is
//! bit-identical for any number of evaluation lanes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{evaluate_fitness, FitnessScore};
use crate::data::SplitPair;
use crate::error::{Error, Result};
use crate::operators::{
    de_crossover, de_mutate, elitist_replacement, pick_distinct_parents, ta_accept, ta_neighbor, DeParams,
    TaParams, ThresholdState,
};
use crate::population::{best_of, init_population, rank_order, sync_selected_ids, Individual, Population};
use crate::stream::{Purpose, StreamRoot};

/// Smallest island that draws DE parents locally; smaller islands draw from
/// the whole population.
pub const MIN_LOCAL_ISLAND: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "pbde")]
    Pbde,
    #[serde(rename = "pbdeta")]
    Pbdeta,
    #[serde(rename = "pbtade")]
    Pbtade,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Pbde, Algorithm::Pbdeta, Algorithm::Pbtade];

    /// Lower-case identifier used in configs and file names.
    pub fn key(self) -> &'static str {
        match self {
            Algorithm::Pbde => "pbde",
            Algorithm::Pbdeta => "pbdeta",
            Algorithm::Pbtade => "pbtade",
        }
    }

    pub fn uses_ta(self) -> bool {
        self != Algorithm::Pbde
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Pbde => "P-BDE",
            Algorithm::Pbdeta => "PB-DETA",
            Algorithm::Pbtade => "PB-TADE",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "pbde" => Ok(Algorithm::Pbde),
            "pbdeta" => Ok(Algorithm::Pbdeta),
            "pbtade" => Ok(Algorithm::Pbtade),
            _ => Err(Error::config(format!("unknown algorithm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub algorithm: Algorithm,
    pub de: DeParams,
    pub ta: TaParams,
    pub pop_size: usize,
    pub bias: f64,
    /// Outer iterations.
    pub max_iter1: usize,
    /// Inner threshold-accepting iterations per outer iteration.
    pub max_iter2: usize,
    pub islands: usize,
    /// Maximum number of fitness evaluations in flight.
    pub parallelism: usize,
    pub master_seed: u64,
    pub run_index: u64,
    /// Stop after this many outer iterations without archive improvement.
    pub patience: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pbde,
            de: DeParams::default(),
            ta: TaParams::default(),
            pop_size: 10,
            bias: 0.99,
            max_iter1: 10,
            max_iter2: 10,
            islands: 4,
            parallelism: 4,
            master_seed: 0,
            run_index: 0,
            patience: None,
        }
    }
}

impl EngineConfig {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.de.validate()?;
        if self.algorithm.uses_ta() {
            self.ta.validate()?;
        }
        if self.pop_size < MIN_LOCAL_ISLAND {
            return Err(Error::config(format!(
                "population size {} < {MIN_LOCAL_ISLAND} (DE needs three distinct donors)",
                self.pop_size
            )));
        }
        if !(0.0..1.0).contains(&self.bias) {
            return Err(Error::config(format!("bias {} not in [0,1)", self.bias)));
        }
        if self.islands == 0 || self.islands > self.pop_size {
            return Err(Error::config(format!(
                "island count {} not in 1..={}",
                self.islands, self.pop_size
            )));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism must be >= 1"));
        }
        if self.patience == Some(0) {
            return Err(Error::config("patience must be >= 1 when set"));
        }
        Ok(())
    }

    /// Closed-form number of training-set fitness evaluations of a run that
    /// is not stopped early.
    pub fn expected_evaluations(&self) -> usize {
        let n = self.pop_size;
        match self.algorithm {
            Algorithm::Pbde => n * (1 + self.max_iter1),
            Algorithm::Pbdeta | Algorithm::Pbtade => {
                n * (1 + self.max_iter1 * (1 + self.max_iter2 * self.ta.neighbors_per_iter))
            }
        }
    }
}

/// Fitness oracle used by the engine. Implementations must be pure: the same
/// mask always yields the same score.
pub trait SubsetEvaluator: Sync {
    fn feature_names(&self) -> &[String];
    /// Score used during the search.
    fn train_fitness(&self, mask: &crate::population::FeatureMask) -> Result<FitnessScore>;
    /// Score reported for the final population.
    fn test_fitness(&self, mask: &crate::population::FeatureMask) -> Result<FitnessScore>;
}

/// Logistic-regression wrapper: train on the training partition, score on
/// the training partition during the search and on the test partition at
/// the end.
#[derive(Debug, Clone, Copy)]
pub struct WrapperFitness<'a> {
    pub split: &'a SplitPair,
}

impl<'a> WrapperFitness<'a> {
    pub fn new(split: &'a SplitPair) -> Self {
        Self { split }
    }
}

impl SubsetEvaluator for WrapperFitness<'_> {
    fn feature_names(&self) -> &[String] {
        self.split.train.feature_names()
    }

    fn train_fitness(&self, mask: &crate::population::FeatureMask) -> Result<FitnessScore> {
        evaluate_fitness(mask, &self.split.train, &self.split.train)
    }

    fn test_fitness(&self, mask: &crate::population::FeatureMask) -> Result<FitnessScore> {
        evaluate_fitness(mask, &self.split.train, &self.split.test)
    }
}

/// Bounded pool of evaluation lanes.
pub struct EvaluationLanes {
    pool: Option<rayon::ThreadPool>,
}

impl EvaluationLanes {
    pub fn new(parallelism: usize) -> Result<Self> {
        if parallelism == 0 {
            return Err(Error::config("parallelism must be >= 1"));
        }
        let pool = if parallelism == 1 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(parallelism)
                    .thread_name(|i| format!("evofss-eval-{i}"))
                    .build()
                    .map_err(|e| Error::Runtime(format!("cannot start evaluation lanes: {e}")))?,
            )
        };
        Ok(Self { pool })
    }

    /// Scores every member whose fitness is unset with `score`, keeping input
    /// order. Returns the number of evaluations performed.
    pub fn evaluate<F>(&self, members: &mut [Individual], score: F) -> Result<usize>
    where
        F: Fn(&Individual) -> Result<FitnessScore> + Sync,
    {
        let pending: Vec<usize> = (0..members.len()).filter(|&i| members[i].auc.is_none()).collect();
        let run = |i: &usize| {
            score(&members[*i]).map_err(|e| Error::Evaluation {
                id: members[*i].id,
                source: Box::new(e),
            })
        };
        let scores: Vec<Result<FitnessScore>> = match &self.pool {
            None => pending.iter().map(run).collect(),
            Some(pool) => pool.install(|| pending.par_iter().map(run).collect()),
        };
        for (&i, s) in pending.iter().zip(scores) {
            members[i].auc = Some(s?);
        }
        Ok(pending.len())
    }
}

/// Scores all unevaluated members on the training fitness with up to
/// `lanes` evaluations in flight. Returns the evaluation count.
pub fn evaluate_population_concurrent<E: SubsetEvaluator + ?Sized>(
    pop: &mut Population,
    evaluator: &E,
    lanes: &EvaluationLanes,
) -> Result<usize> {
    lanes.evaluate(&mut pop.members, |m| evaluator.train_fitness(&m.mask))
}

/// Round-robin island assignment by member id.
pub fn partition_islands(pop: &mut Population, k: usize) -> Result<()> {
    if k == 0 || k > pop.len() {
        return Err(Error::config(format!("cannot split {} members into {k} islands", pop.len())));
    }
    pop.island_of = pop.members.iter().map(|m| m.id % k).collect();
    Ok(())
}

/// DE donor pool for the member at `pos`: its island when large enough,
/// otherwise the whole population.
pub fn donor_pool(pop: &Population, pos: usize) -> Vec<usize> {
    let local = pop.island_members(pop.island_of[pos]);
    if local.len() >= MIN_LOCAL_ISLAND {
        local
    } else {
        (0..pop.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    /// Evolved population, each member scored on the test partition.
    pub final_population: Population,
    /// Best of the final population by test fitness.
    pub best: Individual,
    /// Best training-fitness individual ever evaluated.
    pub archive: Individual,
    /// Archived best training AUC: entry 0 after initialization, then one
    /// entry per completed outer iteration.
    pub train_best_trace: Vec<f64>,
    /// Training-fitness evaluations (the final test scoring is not counted).
    pub evaluations: usize,
    pub wall_time: f64,
}

struct Search<'a, E: SubsetEvaluator + ?Sized> {
    cfg: &'a EngineConfig,
    evaluator: &'a E,
    lanes: EvaluationLanes,
    root: StreamRoot,
    pop: Population,
    archive: Individual,
    ta: ThresholdState,
    evaluations: usize,
}

impl<E: SubsetEvaluator + ?Sized> Search<'_, E> {
    fn names(&self) -> &[String] {
        self.evaluator.feature_names()
    }

    fn evaluate(&mut self, members: &mut [Individual]) -> Result<()> {
        let evaluator = self.evaluator;
        self.evaluations += self.lanes.evaluate(members, |m| evaluator.train_fitness(&m.mask))?;
        if let Ok(best) = best_of(members) {
            if rank_order(best, &self.archive).is_lt() {
                self.archive = best.clone();
            }
        }
        Ok(())
    }

    fn de_generation(&mut self, iteration: u64) -> Result<()> {
        let n = self.pop.len();
        let mut children = Vec::with_capacity(n);
        for pos in 0..n {
            let target = &self.pop.members[pos];
            let mut rng = self.root.stream(Purpose::DeVariation, iteration, 0, target.id as u64);
            let [a, b, c] = pick_distinct_parents(&donor_pool(&self.pop, pos), pos, &mut rng)?;
            let m = &self.pop.members;
            let mutant = de_mutate(&m[a].mask, &m[b].mask, &m[c].mask, self.cfg.de.mf)?;
            let trial = de_crossover(&target.mask, &mutant, self.cfg.de.cr, &mut rng)?;
            children.push(Individual::new(target.id, trial, self.names())?);
        }
        self.evaluate(&mut children)?;

        for k in 0..self.pop.num_islands() {
            let positions = self.pop.island_members(k);
            let parents: Vec<Individual> = positions.iter().map(|&p| self.pop.members[p].clone()).collect();
            let kids: Vec<Individual> = positions.iter().map(|&p| children[p].clone()).collect();
            let survivors = elitist_replacement(&parents, &kids)?;
            for (&p, s) in positions.iter().zip(survivors) {
                self.pop.members[p] = s;
            }
        }
        Ok(())
    }

    fn ta_phase(&mut self, iteration: u64) -> Result<()> {
        let ta = self.cfg.ta;
        self.ta.t = ta.t0;
        let n = self.pop.len();
        for step in 0..self.cfg.max_iter2 as u64 {
            let mut candidates = Vec::with_capacity(n * ta.neighbors_per_iter);
            for pos in 0..n {
                let member = &self.pop.members[pos];
                let mut rng = self.root.stream(Purpose::TaNeighbor, iteration, step, member.id as u64);
                let mut cursor = self.ta.cursors[pos];
                for _ in 0..ta.neighbors_per_iter {
                    let (mask, next) = ta_neighbor(&member.mask, cursor, ta.tmf, &mut rng);
                    candidates.push(Individual::new(member.id, mask, self.names())?);
                    cursor = next;
                }
                self.ta.cursors[pos] = cursor;
            }
            self.evaluate(&mut candidates)?;

            for (pos, group) in candidates.chunks(ta.neighbors_per_iter).enumerate() {
                let old = self.pop.members[pos].auc_value().unwrap_or(f64::NEG_INFINITY);
                if let Some(accepted) = group
                    .iter()
                    .find(|c| ta_accept(old, c.auc_value().unwrap_or(f64::NEG_INFINITY), self.ta.t))
                {
                    self.pop.members[pos] = sync_selected_ids(accepted.clone(), self.evaluator.feature_names())?;
                }
            }
            self.ta.cool(ta.cool);
        }
        Ok(())
    }
}

/// Runs the configured algorithm against an arbitrary fitness oracle.
pub fn run_with<E: SubsetEvaluator + ?Sized>(cfg: &EngineConfig, evaluator: &E) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let root = StreamRoot::new(cfg.master_seed, cfg.run_index);
    let lanes = EvaluationLanes::new(cfg.parallelism)?;

    let mut pop = init_population(cfg.pop_size, evaluator.feature_names(), cfg.bias, &root)?;
    partition_islands(&mut pop, cfg.islands)?;
    let mut evaluations = evaluate_population_concurrent(&mut pop, evaluator, &lanes)?;
    let archive = best_of(&pop.members)?.clone();

    let mut search = Search {
        cfg,
        evaluator,
        lanes,
        root,
        ta: ThresholdState::new(cfg.ta.t0, pop.len()),
        pop,
        archive,
        evaluations: 0,
    };
    let mut trace = vec![search.archive.auc_value().unwrap_or(0.0)];
    let mut stale = 0usize;

    for it in 0..cfg.max_iter1 as u64 {
        match cfg.algorithm {
            Algorithm::Pbde => search.de_generation(it)?,
            Algorithm::Pbdeta => {
                search.de_generation(it)?;
                search.ta_phase(it)?;
            }
            Algorithm::Pbtade => {
                search.ta_phase(it)?;
                search.de_generation(it)?;
            }
        }
        let best = search.archive.auc_value().unwrap_or(0.0);
        stale = if best > *trace.last().unwrap_or(&f64::NEG_INFINITY) { 0 } else { stale + 1 };
        trace.push(best);
        log::debug!("{} iteration {}: archived best train AUC {best:.4}", cfg.algorithm, it + 1);
        if cfg.patience.is_some_and(|p| stale >= p) {
            log::info!("{}: no improvement for {stale} iterations, stopping", cfg.algorithm);
            break;
        }
    }
    evaluations += search.evaluations;

    let mut final_population = search.pop;
    for m in &mut final_population.members {
        m.auc = None;
    }
    search
        .lanes
        .evaluate(&mut final_population.members, |m| evaluator.test_fitness(&m.mask))?;
    let best = best_of(&final_population.members)?.clone();

    Ok(RunResult {
        algorithm: cfg.algorithm,
        final_population,
        best,
        archive: search.archive,
        train_best_trace: trace,
        evaluations,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs the configured algorithm with the logistic-regression wrapper fitness.
pub fn run(cfg: &EngineConfig, split: &SplitPair) -> Result<RunResult> {
    run_with(cfg, &WrapperFitness::new(split))
}

fn run_expecting(expected: Algorithm, cfg: &EngineConfig, split: &SplitPair) -> Result<RunResult> {
    if cfg.algorithm != expected {
        return Err(Error::config(format!(
            "configuration selects {}, expected {expected}",
            cfg.algorithm
        )));
    }
    run(cfg, split)
}

pub fn run_pbde(cfg: &EngineConfig, split: &SplitPair) -> Result<RunResult> {
    run_expecting(Algorithm::Pbde, cfg, split)
}

pub fn run_pbdeta(cfg: &EngineConfig, split: &SplitPair) -> Result<RunResult> {
    run_expecting(Algorithm::Pbdeta, cfg, split)
}

pub fn run_pbtade(cfg: &EngineConfig, split: &SplitPair) -> Result<RunResult> {
    run_expecting(Algorithm::Pbtade, cfg, split)
}
