//! Binary solution encoding, the individual record and biased initialization.

use std::cmp::Ordering;

use rand::Rng;

use crate::classifier::FitnessScore;
use crate::error::{Error, Result};
use crate::stream::{Purpose, StreamRoot};

/// Feature subset as a bit vector: `true` means the feature is selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn from_bits(bits: impl Into<Vec<bool>>) -> Self {
        Self { bits: bits.into() }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn ones(len: usize) -> Self {
        Self { bits: vec![true; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn none_selected(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn selected_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Sets one uniformly chosen bit if nothing is selected. Returns whether
    /// a repair happened.
    pub fn repair<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.none_selected() && !self.bits.is_empty() {
            let i = rng.gen_range(0..self.bits.len());
            self.bits[i] = true;
            true
        } else {
            false
        }
    }

    /// `0`/`1` string, e.g. `"101"`.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::data(format!("invalid mask character '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

/// One member of the population: key, bit vector, selected feature names and
/// fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: usize,
    pub mask: FeatureMask,
    pub selected_ids: Vec<String>,
    pub auc: Option<FitnessScore>,
}

impl Individual {
    pub fn new(id: usize, mask: FeatureMask, names: &[String]) -> Result<Self> {
        sync_selected_ids(
            Individual {
                id,
                mask,
                selected_ids: Vec::new(),
                auc: None,
            },
            names,
        )
    }

    pub fn cardinality(&self) -> usize {
        self.mask.cardinality()
    }

    pub fn auc_value(&self) -> Option<f64> {
        self.auc.map(|s| s.auc)
    }

    fn evaluated_auc(&self) -> Result<f64> {
        self.auc_value()
            .ok_or_else(|| Error::data(format!("individual {} is not evaluated", self.id)))
    }
}

/// Rebuilds `selected_ids` from the current mask.
pub fn sync_selected_ids(mut ind: Individual, names: &[String]) -> Result<Individual> {
    if names.len() != ind.mask.len() {
        return Err(Error::data(format!(
            "mask length {} does not match {} feature names",
            ind.mask.len(),
            names.len()
        )));
    }
    ind.selected_ids = ind.mask.selected_indices().map(|i| names[i].clone()).collect();
    Ok(ind)
}

/// Total ranking used everywhere a "best" is needed: higher AUC first, then
/// smaller subsets, then smaller id. Both sides must be evaluated.
pub fn rank_order(a: &Individual, b: &Individual) -> Ordering {
    let (fa, fb) = (a.auc_value().unwrap_or(f64::NEG_INFINITY), b.auc_value().unwrap_or(f64::NEG_INFINITY));
    fb.total_cmp(&fa)
        .then(a.cardinality().cmp(&b.cardinality()))
        .then(a.id.cmp(&b.id))
}

/// Best evaluated member under [`rank_order`].
pub fn best_of(members: &[Individual]) -> Result<&Individual> {
    for m in members {
        m.evaluated_auc()?;
    }
    members
        .iter()
        .min_by(|a, b| rank_order(a, b))
        .ok_or_else(|| Error::data("empty population"))
}

/// Fixed-size ordered population with an island assignment per member.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub island_of: Vec<usize>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn num_islands(&self) -> usize {
        self.island_of.iter().max().map_or(0, |&m| m + 1)
    }

    /// Member positions belonging to island `k`, in position order.
    pub fn island_members(&self, k: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.island_of[i] == k).collect()
    }

    pub fn best(&self) -> Result<&Individual> {
        best_of(&self.members)
    }
}

/// Biased-sampling initialization: each bit is selected iff a uniform draw
/// exceeds `bias`. Empty masks get one uniformly chosen bit from the same
/// stream. All members start on a single island.
pub fn init_population(n: usize, names: &[String], bias: f64, root: &StreamRoot) -> Result<Population> {
    let nfeat = names.len();
    if n < 2 {
        return Err(Error::config(format!("population size {n} < 2")));
    }
    if nfeat == 0 {
        return Err(Error::data("dataset has no features"));
    }
    if !(0.0..1.0).contains(&bias) {
        return Err(Error::config(format!("bias {bias} not in [0,1)")));
    }
    let members = (0..n)
        .map(|id| {
            let mut rng = root.stream(Purpose::Init, 0, 0, id as u64);
            let mut mask = FeatureMask::from_bits((0..nfeat).map(|_| rng.gen::<f64>() > bias).collect::<Vec<_>>());
            mask.repair(&mut rng);
            Individual::new(id, mask, names)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population {
        island_of: vec![0; n],
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn scored(id: usize, auc: f64, bits: &[bool]) -> Individual {
        let mut ind = Individual::new(id, FeatureMask::from_bits(bits.to_vec()), &names(bits.len())).unwrap();
        ind.auc = Some(FitnessScore::from_rates(auc, auc));
        ind
    }

    #[test]
    fn zero_bias_selects_everything() {
        let pop = init_population(5, &names(30), 0.0, &StreamRoot::new(1, 0)).unwrap();
        for m in &pop.members {
            assert_eq!(m.cardinality(), 30);
            assert_eq!(m.selected_ids.len(), 30);
            assert!(m.auc.is_none());
        }
    }

    #[test]
    fn init_rejects_bad_inputs() {
        let root = StreamRoot::new(1, 0);
        assert!(init_population(5, &names(3), 1.0, &root).is_err());
        assert!(init_population(1, &names(3), 0.5, &root).is_err());
        assert!(init_population(5, &[], 0.5, &root).is_err());
    }

    #[test]
    fn init_is_reproducible_and_never_empty() {
        let root = StreamRoot::new(9, 2);
        let a = init_population(50, &names(20), 0.99, &root).unwrap();
        let b = init_population(50, &names(20), 0.99, &root).unwrap();
        assert_eq!(a, b);
        assert!(a.members.iter().all(|m| !m.mask.none_selected()));
        let ids: Vec<usize> = a.members.iter().map(|m| m.id).collect();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn selected_ids_follow_mask() {
        let n = vec!["a".to_string(), "b".into(), "c".into()];
        let mut ind = Individual::new(0, FeatureMask::from_bits([true, false, true]), &n).unwrap();
        assert_eq!(ind.selected_ids, ["a", "c"]);
        ind.mask.flip(1);
        let ind = sync_selected_ids(ind, &n).unwrap();
        assert_eq!(ind.selected_ids, ["a", "b", "c"]);
        let empty = Individual::new(1, FeatureMask::zeros(3), &n).unwrap();
        assert!(empty.selected_ids.is_empty());
        assert!(Individual::new(2, FeatureMask::zeros(2), &n).is_err());
    }

    #[test]
    fn best_of_argmax_and_ties() {
        let m = [
            scored(0, 0.6, &[true, false]),
            scored(1, 0.9, &[true, false]),
            scored(2, 0.7, &[true, false]),
        ];
        assert_eq!(best_of(&m).unwrap().id, 1);

        let bits5 = [true, true, true, true, true, false];
        let bits3 = [true, true, true, false, false, false];
        let m = [scored(0, 0.9, &bits5), scored(1, 0.9, &bits3)];
        assert_eq!(best_of(&m).unwrap().id, 1);

        let m = [scored(7, 0.9, &bits3), scored(2, 0.9, &bits3)];
        assert_eq!(best_of(&m).unwrap().id, 2);

        let mut unevaluated = m.to_vec();
        unevaluated[0].auc = None;
        assert!(best_of(&unevaluated).is_err());
    }

    #[test]
    fn bit_string_round_trip() {
        let m = FeatureMask::from_bits([true, false, true, true]);
        assert_eq!(m.to_bit_string(), "1011");
        assert_eq!(FeatureMask::from_bit_string("1011").unwrap(), m);
        assert!(FeatureMask::from_bit_string("10x").is_err());
    }
}
