#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};

use evofss::data::{stratified_split, Dataset, SplitPair};
use evofss::{FeatureMask, FitnessScore, Result, SubsetEvaluator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian features; the label is the sign of a weighted sum of the first
/// `informative` columns plus Gaussian noise of scale `noise`.
pub fn planted(rows: usize, nfeat: usize, informative: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..informative).map(|j| 1.0 - 0.5 * j as f64 / informative as f64).collect();
    let mut data = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let x: Vec<f64> = (0..nfeat).map(|_| rng.sample(StandardNormal)).collect();
        let e: f64 = rng.sample(StandardNormal);
        let s: f64 = weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + noise * e;
        labels.push(u8::from(s > 0.0));
        data.push(x);
    }
    let names = (0..nfeat).map(|j| format!("x{j:03}")).collect();
    Dataset::from_rows(names, data, labels).unwrap()
}

pub fn planted_split(rows: usize, nfeat: usize, informative: usize, noise: f64, seed: u64) -> SplitPair {
    stratified_split(&planted(rows, nfeat, informative, noise, seed), 0.8, seed).unwrap()
}

/// Wraps an evaluator and counts training-fitness calls.
pub struct Counting<E> {
    pub inner: E,
    pub calls: AtomicUsize,
}

impl<E> Counting<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<E: SubsetEvaluator> SubsetEvaluator for Counting<E> {
    fn feature_names(&self) -> &[String] {
        self.inner.feature_names()
    }

    fn train_fitness(&self, mask: &FeatureMask) -> Result<FitnessScore> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.train_fitness(mask)
    }

    fn test_fitness(&self, mask: &FeatureMask) -> Result<FitnessScore> {
        self.inner.test_fitness(mask)
    }
}
