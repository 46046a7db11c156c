//! Variation and acceptance heuristics on feature masks.
//!
//! Binary differential evolution (rand/1 mutation relaxed over {0,1},
//! binomial crossover, pooled elitist replacement) and threshold accepting
//! (sequential bit-flip neighborhood, deterioration threshold with
//! geometric cooling).

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{FeatureMask, Individual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub mf: f64,
    pub cr: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self { mf: 0.8, cr: 0.9 }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mf > 0.0 && self.mf.is_finite()) {
            return Err(Error::config(format!("mutation factor {} must be > 0", self.mf)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::config(format!("crossover rate {} not in [0,1]", self.cr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaParams {
    /// Consecutive bits flipped per candidate.
    pub tmf: usize,
    pub t0: f64,
    /// Multiplicative cooling factor applied once per inner iteration.
    pub cool: f64,
    pub neighbors_per_iter: usize,
}

impl Default for TaParams {
    fn default() -> Self {
        Self {
            tmf: 1,
            t0: 0.05,
            cool: 0.95,
            neighbors_per_iter: 1,
        }
    }
}

impl TaParams {
    pub fn validate(&self) -> Result<()> {
        if self.tmf == 0 {
            return Err(Error::config("TA flip count must be >= 1"));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::config(format!("initial threshold {} must be > 0", self.t0)));
        }
        if !(self.cool > 0.0 && self.cool < 1.0) {
            return Err(Error::config(format!("cooling factor {} not in (0,1)", self.cool)));
        }
        if self.neighbors_per_iter == 0 {
            return Err(Error::config("neighbors per iteration must be >= 1"));
        }
        Ok(())
    }
}

fn check_len(a: &FeatureMask, b: &FeatureMask) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::data(format!("mask lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Relaxed mutant value of one bit: `r1 + mf * (r2 - r3)`.
pub fn de_mutant_value(r1: bool, r2: bool, r3: bool, mf: f64) -> f64 {
    f64::from(u8::from(r1)) + mf * (f64::from(u8::from(r2)) - f64::from(u8::from(r3)))
}

/// DE/rand/1 mutation over {0,1}; a mutant bit is set iff its relaxed value is >= 0.5.
pub fn de_mutate(r1: &FeatureMask, r2: &FeatureMask, r3: &FeatureMask, mf: f64) -> Result<FeatureMask> {
    check_len(r1, r2)?;
    check_len(r1, r3)?;
    let bits: Vec<bool> = (0..r1.len())
        .map(|i| de_mutant_value(r1.get(i), r2.get(i), r3.get(i), mf) >= 0.5)
        .collect();
    Ok(FeatureMask::from_bits(bits))
}

/// Draws three distinct positions from `pool`, none equal to `target`.
pub fn pick_distinct_parents<R: Rng + ?Sized>(pool: &[usize], target: usize, rng: &mut R) -> Result<[usize; 3]> {
    let candidates: Vec<usize> = pool.iter().copied().filter(|&i| i != target).collect();
    if candidates.len() < 3 {
        return Err(Error::config(format!(
            "differential evolution needs at least 4 members, got {}",
            candidates.len() + usize::from(pool.contains(&target))
        )));
    }
    let picked = sample(rng, candidates.len(), 3);
    Ok([
        candidates[picked.index(0)],
        candidates[picked.index(1)],
        candidates[picked.index(2)],
    ])
}

/// Binomial crossover with a guaranteed position `jrand`. Draw order: `jrand`
/// first, then one uniform per position. An empty trial is repaired from the
/// same stream.
pub fn de_crossover<R: Rng + ?Sized>(
    target: &FeatureMask,
    mutant: &FeatureMask,
    cr: f64,
    rng: &mut R,
) -> Result<FeatureMask> {
    check_len(target, mutant)?;
    let n = target.len();
    if n == 0 {
        return Ok(target.clone());
    }
    let jrand = rng.gen_range(0..n);
    let bits: Vec<bool> = (0..n)
        .map(|i| {
            let u: f64 = rng.gen();
            if u < cr || i == jrand {
                mutant.get(i)
            } else {
                target.get(i)
            }
        })
        .collect();
    let mut trial = FeatureMask::from_bits(bits);
    trial.repair(rng);
    Ok(trial)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Origin {
    Parent,
    Child,
}

/// Pooled (mu + lambda) truncation. Parents and children are ranked together
/// by AUC (desc), cardinality (asc), parents before children, id (asc); the
/// top `parents.len()` survive. Surviving parents keep their position and
/// surviving children fill the displaced parents' positions (ascending), in
/// rank order, taking over the displaced parent's id.
pub fn elitist_replacement(parents: &[Individual], children: &[Individual]) -> Result<Vec<Individual>> {
    if parents.len() != children.len() {
        return Err(Error::data(format!(
            "{} parents but {} children",
            parents.len(),
            children.len()
        )));
    }
    if let Some(u) = parents.iter().chain(children).find(|m| m.auc.is_none()) {
        return Err(Error::data(format!("individual {} is not evaluated", u.id)));
    }

    let mut pool: Vec<(Origin, usize, &Individual)> = parents
        .iter()
        .enumerate()
        .map(|(i, p)| (Origin::Parent, i, p))
        .chain(children.iter().enumerate().map(|(i, c)| (Origin::Child, i, c)))
        .collect();
    pool.sort_by(pooled_order);
    let survivors = &pool[..parents.len()];

    let mut kept_parent = vec![false; parents.len()];
    for &(origin, i, _) in survivors {
        if origin == Origin::Parent {
            kept_parent[i] = true;
        }
    }
    let mut free_slots = (0..parents.len()).filter(|&i| !kept_parent[i]);
    let mut out = parents.to_vec();
    for &(origin, _, child) in survivors {
        if origin == Origin::Child {
            let slot = free_slots.next().expect("one free slot per surviving child");
            let mut placed = child.clone();
            placed.id = parents[slot].id;
            out[slot] = placed;
        }
    }
    Ok(out)
}

fn pooled_order(a: &(Origin, usize, &Individual), b: &(Origin, usize, &Individual)) -> Ordering {
    let (fa, fb) = (a.2.auc_value().unwrap_or(f64::NEG_INFINITY), b.2.auc_value().unwrap_or(f64::NEG_INFINITY));
    fb.total_cmp(&fa)
        .then(a.2.cardinality().cmp(&b.2.cardinality()))
        .then(a.0.cmp(&b.0))
        .then(a.2.id.cmp(&b.2.id))
        .then(a.1.cmp(&b.1))
}

/// Threshold-accepting neighbor: flips `tmf` consecutive bits starting at
/// `cursor` (wrapping) and returns the candidate with the advanced cursor.
/// An empty candidate is repaired from `rng`.
pub fn ta_neighbor<R: Rng + ?Sized>(
    mask: &FeatureMask,
    cursor: usize,
    tmf: usize,
    rng: &mut R,
) -> (FeatureMask, usize) {
    let n = mask.len();
    let mut candidate = mask.clone();
    if n == 0 {
        return (candidate, 0);
    }
    for k in 0..tmf {
        candidate.flip((cursor + k) % n);
    }
    candidate.repair(rng);
    (candidate, (cursor + tmf) % n)
}

/// Accepts unless the deterioration `old - new` reaches the threshold.
pub fn ta_accept(old_auc: f64, new_auc: f64, threshold: f64) -> bool {
    old_auc - new_auc < threshold
}

pub fn threshold_update(threshold: f64, cool: f64) -> f64 {
    threshold * cool
}

/// Threshold and per-member flip cursors of the population-based TA phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub t: f64,
    pub cursors: Vec<usize>,
}

impl ThresholdState {
    pub fn new(t0: f64, members: usize) -> Self {
        Self {
            t: t0,
            cursors: vec![0; members],
        }
    }

    pub fn cool(&mut self, factor: f64) {
        self.t = threshold_update(self.t, factor);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::FitnessScore;
    use crate::stream::RandomStream;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mask(s: &str) -> FeatureMask {
        FeatureMask::from_bit_string(s).unwrap()
    }

    fn ind(id: usize, auc: f64, bits: &str) -> Individual {
        let m = mask(bits);
        let names: Vec<String> = (0..m.len()).map(|i| format!("f{i}")).collect();
        let mut out = Individual::new(id, m, &names).unwrap();
        out.auc = Some(FitnessScore::from_rates(auc, auc));
        out
    }

    #[test]
    fn mutation_rule() {
        let r = mask("10110");
        assert_eq!(de_mutate(&r, &r, &r, 0.8).unwrap(), r);
        // Hand oracle: 0 + 0.8 * (1 - 0) = 0.8 -> 1 and 1 + 0.8 * (0 - 1) = 0.2 -> 0.
        assert!((de_mutant_value(false, true, false, 0.8) - 0.8).abs() < 1e-15);
        assert!((de_mutant_value(true, false, true, 0.8) - 0.2).abs() < 1e-15);
        assert_eq!(de_mutate(&mask("0"), &mask("1"), &mask("0"), 0.8).unwrap(), mask("1"));
        assert_eq!(de_mutate(&mask("1"), &mask("0"), &mask("1"), 0.8).unwrap(), mask("0"));
        assert!(de_mutate(&mask("10"), &mask("1"), &mask("10"), 0.8).is_err());
    }

    #[test]
    fn distinct_parents() {
        let mut rng = RandomStream::from_seed(3);
        for _ in 0..200 {
            let [a, b, c] = pick_distinct_parents(&[0, 1, 2, 3, 4], 2, &mut rng).unwrap();
            assert!(a != b && b != c && a != c);
            assert!(![a, b, c].contains(&2));
        }
        assert!(pick_distinct_parents(&[0, 1, 2], 0, &mut rng).is_err());
        assert!(pick_distinct_parents(&[0, 1, 2], 5, &mut rng).is_ok());
    }

    #[test]
    fn crossover_extremes() {
        let target = mask("00000000");
        let mutant = mask("10110011");
        let mut rng = RandomStream::from_seed(1);
        assert_eq!(de_crossover(&target, &mutant, 1.0, &mut rng).unwrap(), mutant);

        let target = mask("11110000");
        let mutant = mask("00001111");
        for seed in 0..20 {
            let trial = de_crossover(&target, &mutant, 0.0, &mut RandomStream::from_seed(seed)).unwrap();
            let diffs: Vec<usize> = (0..8).filter(|&i| trial.get(i) != target.get(i)).collect();
            assert_eq!(diffs.len(), 1);
            assert_eq!(trial.get(diffs[0]), mutant.get(diffs[0]));
        }
    }

    /// Independent coding of binomial crossover with the same draw order.
    fn reference_crossover(target: &str, mutant: &str, cr: f64, seed: u64) -> String {
        let mut rng = RandomStream::from_seed(seed);
        let t: Vec<char> = target.chars().collect();
        let m: Vec<char> = mutant.chars().collect();
        let j = rng.gen_range(0..t.len());
        let mut out = String::new();
        for i in 0..t.len() {
            let u: f64 = rng.gen();
            out.push(if u < cr || i == j { m[i] } else { t[i] });
        }
        out
    }

    #[test]
    fn crossover_matches_reference() {
        for seed in 0..50 {
            let expected = reference_crossover("10100110", "01101011", 0.9, seed);
            let got = de_crossover(&mask("10100110"), &mask("01101011"), 0.9, &mut RandomStream::from_seed(seed)).unwrap();
            assert_eq!(got.to_bit_string(), expected, "seed {seed}");
        }
    }

    #[test]
    fn crossover_repairs_empty_trial() {
        let mut rng = RandomStream::from_seed(4);
        let trial = de_crossover(&mask("0000"), &mask("0000"), 0.5, &mut rng).unwrap();
        assert_eq!(trial.cardinality(), 1);
    }

    #[test]
    fn replacement_keeps_top_of_pool() {
        let parents = [ind(0, 0.6, "10"), ind(1, 0.7, "10")];
        let children = [ind(0, 0.65, "01"), ind(1, 0.75, "01")];
        let out = elitist_replacement(&parents, &children).unwrap();
        let aucs: Vec<f64> = out.iter().map(|m| m.auc_value().unwrap()).collect();
        assert_eq!(aucs, vec![0.75, 0.7]);
        assert_eq!(out[0].id, 0);
        assert_eq!(out[0].mask, mask("01"));
    }

    #[test]
    fn replacement_elitism_and_ties() {
        let parents = [ind(0, 0.8, "10"), ind(1, 0.7, "10")];
        let worse = [ind(0, 0.5, "01"), ind(1, 0.6, "01")];
        assert_eq!(elitist_replacement(&parents, &worse).unwrap(), parents.to_vec());

        // Same AUC: the smaller child beats the larger parent.
        let parents = [ind(0, 0.9, "1000000000"), ind(1, 0.7, "1111111111")];
        let children = [ind(0, 0.1, "1000000000"), ind(1, 0.7, "1111111100")];
        let out = elitist_replacement(&parents, &children).unwrap();
        assert_eq!(out[1].cardinality(), 8);

        // Fully tied: parent wins.
        let parents = [ind(0, 0.9, "10"), ind(1, 0.7, "10")];
        let children = [ind(0, 0.1, "10"), ind(1, 0.7, "01")];
        assert_eq!(elitist_replacement(&parents, &children).unwrap(), parents.to_vec());

        let mut unevaluated = children.to_vec();
        unevaluated[0].auc = None;
        assert!(elitist_replacement(&parents, &unevaluated).is_err());
        assert!(elitist_replacement(&parents, &children[..1]).is_err());
    }

    #[test]
    fn neighbor_flips_and_wraps() {
        let mut rng = RandomStream::from_seed(0);
        assert_eq!(ta_neighbor(&mask("101"), 0, 1, &mut rng), (mask("001"), 1));
        assert_eq!(ta_neighbor(&mask("101"), 2, 1, &mut rng), (mask("100"), 0));
        assert_eq!(ta_neighbor(&mask("1001"), 1, 2, &mut rng), (mask("1111"), 3));
        let (repaired, cursor) = ta_neighbor(&mask("100"), 0, 1, &mut rng);
        assert_eq!(repaired.cardinality(), 1);
        assert_eq!(cursor, 1);
    }

    #[test]
    fn full_sweep_visits_every_bit_once() {
        let start = mask("1101001110");
        let mut rng = RandomStream::from_seed(0);
        let mut visits = vec![0; start.len()];
        let mut cursor = 0;
        for _ in 0..start.len() {
            let (cand, next) = ta_neighbor(&start, cursor, 1, &mut rng);
            for (i, v) in visits.iter_mut().enumerate() {
                if cand.get(i) != start.get(i) {
                    *v += 1;
                }
            }
            cursor = next;
        }
        assert_eq!(visits, vec![1; start.len()]);
        assert_eq!(cursor, 0);
    }

    #[test]
    fn acceptance_rule() {
        assert!(ta_accept(0.80, 0.78, 0.05));
        assert!(ta_accept(0.80, 0.90, 1e-9));
        assert!(!ta_accept(0.80, 0.70, 0.05));
        assert!(ta_accept(0.9, 0.0, f64::INFINITY));
        assert!(!ta_accept(0.8, 0.8 - 1e-6, f64::MIN_POSITIVE));
        assert!(ta_accept(0.8, 0.8 + 1e-6, f64::MIN_POSITIVE));
    }

    #[test]
    fn cooling_schedule() {
        assert!((threshold_update(0.05, 0.95) - 0.0475).abs() < 1e-15);
        let mut state = ThresholdState::new(0.05, 3);
        for _ in 0..10 {
            state.cool(0.95);
        }
        // Closed form: 0.05 * 0.95^10.
        assert!((state.t - 0.029_936_846_961_918_94).abs() < 1e-12);
        assert!((threshold_update(0.05, 1.0 - 1e-12) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn param_validation() {
        assert!(DeParams { mf: 0.8, cr: 0.9 }.validate().is_ok());
        assert!(DeParams { mf: 0.0, cr: 0.9 }.validate().is_err());
        assert!(DeParams { mf: 0.8, cr: 1.1 }.validate().is_err());
        assert!(TaParams::default().validate().is_ok());
        assert!(TaParams { cool: 1.0, ..TaParams::default() }.validate().is_err());
        assert!(TaParams { t0: 0.0, ..TaParams::default() }.validate().is_err());
        assert!(TaParams { tmf: 0, ..TaParams::default() }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn mutant_value_symmetry(r1: bool, r2: bool, r3: bool, mf in 0.01f64..2.0) {
                let sum = de_mutant_value(r1, r2, r3, mf) + de_mutant_value(r1, r3, r2, mf);
                prop_assert!((sum - 2.0 * f64::from(u8::from(r1))).abs() < 1e-12);
            }

            #[test]
            fn crossover_keeps_jrand_change(
                t in proptest::collection::vec(any::<bool>(), 1..40),
                seed: u64,
                cr in 0.0f64..1.0,
            ) {
                let target = FeatureMask::from_bits(t.clone());
                let mutant = FeatureMask::from_bits(t.iter().map(|b| !b).collect::<Vec<_>>());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let jrand = ChaCha8Rng::seed_from_u64(seed).gen_range(0..t.len());
                let trial = de_crossover(&target, &mutant, cr, &mut rng).unwrap();
                // An all-zero trial is repaired, which may re-set the jrand bit.
                if mutant.get(jrand) || trial.cardinality() > 1 {
                    prop_assert_eq!(trial.get(jrand), mutant.get(jrand));
                }
            }

            #[test]
            fn replacement_never_loses_best(
                p in proptest::collection::vec(0.0f64..1.0, 2..8),
                seed: u64,
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let parents: Vec<Individual> = p.iter().enumerate().map(|(i, &a)| ind(i, a, "101")).collect();
                let children: Vec<Individual> = (0..p.len()).map(|i| ind(i, rng.gen(), "011")).collect();
                let out = elitist_replacement(&parents, &children).unwrap();
                let best_before = parents.iter().chain(&children).map(|m| m.auc_value().unwrap()).fold(f64::MIN, f64::max);
                let best_after = out.iter().map(|m| m.auc_value().unwrap()).fold(f64::MIN, f64::max);
                prop_assert_eq!(best_before, best_after);
                prop_assert_eq!(out.len(), parents.len());
            }

            #[test]
            fn threshold_strictly_decreasing(t0 in 1e-6f64..1.0, cool in 0.5f64..0.999, steps in 1usize..200) {
                let mut t = t0;
                for _ in 0..steps {
                    let next = threshold_update(t, cool);
                    prop_assert!(next < t && next > 0.0);
                    t = next;
                }
            }
        }
    }
}
