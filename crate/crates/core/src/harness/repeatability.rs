//! Repeatability of per-run best subsets across a campaign: how often single
//! features recur, which whole subsets recur, and the least cardinal of the
//! most repeated subsets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::population::{FeatureMask, Individual};

/// Features reported per algorithm.
pub const TOP_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCount {
    pub feature: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRepeatability {
    /// Appearance count of every feature in the best subsets, in feature order.
    pub frequency: Vec<FeatureCount>,
    /// Features present in strictly more than half of the runs, top
    /// [`TOP_FEATURES`] by count then name.
    pub frequent: Vec<FeatureCount>,
}

/// Counts how many per-run best masks contain each feature.
pub fn feature_repeatability(bests: &[Individual], names: &[String], runs: usize) -> FeatureRepeatability {
    let mut counts = vec![0usize; names.len()];
    for b in bests {
        for i in b.mask.selected_indices() {
            counts[i] += 1;
        }
    }
    let frequency: Vec<FeatureCount> = names
        .iter()
        .zip(&counts)
        .map(|(n, &c)| FeatureCount {
            feature: n.clone(),
            count: c,
        })
        .collect();
    let mut frequent: Vec<FeatureCount> = frequency.iter().filter(|f| 2 * f.count > runs).cloned().collect();
    frequent.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.feature.cmp(&b.feature)));
    frequent.truncate(TOP_FEATURES);
    FeatureRepeatability { frequency, frequent }
}

/// Runs that ended with the same best mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetGroup {
    pub mask: String,
    pub cardinality: usize,
    pub auc: f64,
    pub count: usize,
}

/// Groups identical masks, ordered by count (desc), AUC (desc), cardinality (asc).
pub fn subset_groups(bests: &[Individual]) -> Vec<SubsetGroup> {
    let mut index: HashMap<&FeatureMask, usize> = HashMap::new();
    let mut groups: Vec<SubsetGroup> = Vec::new();
    for b in bests {
        let auc = b.auc_value().unwrap_or(0.0);
        match index.get(&b.mask) {
            Some(&g) => {
                groups[g].count += 1;
                groups[g].auc = groups[g].auc.max(auc);
            }
            None => {
                index.insert(&b.mask, groups.len());
                groups.push(SubsetGroup {
                    mask: b.mask.to_bit_string(),
                    cardinality: b.cardinality(),
                    auc,
                    count: 1,
                });
            }
        }
    }
    groups.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(b.auc.total_cmp(&a.auc))
            .then(a.cardinality.cmp(&b.cardinality))
            .then_with(|| a.mask.cmp(&b.mask))
    });
    groups
}

/// The two most repeated subsets; the second slot is `None` when every run
/// agreed.
pub fn subset_repeatability(bests: &[Individual]) -> [Option<SubsetGroup>; 2] {
    let mut groups = subset_groups(bests).into_iter();
    [groups.next(), groups.next()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeastCardinal {
    pub cardinality: usize,
    pub auc: f64,
}

/// Among the subsets with the highest repetition count, the smallest one
/// (ties to the higher AUC).
pub fn least_cardinal_best(bests: &[Individual]) -> Option<LeastCardinal> {
    let groups = subset_groups(bests);
    let top = groups.first()?.count;
    groups
        .iter()
        .filter(|g| g.count == top)
        .min_by(|a, b| a.cardinality.cmp(&b.cardinality).then(b.auc.total_cmp(&a.auc)))
        .map(|g| LeastCardinal {
            cardinality: g.cardinality,
            auc: g.auc,
        })
}
