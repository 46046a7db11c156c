//! Logistic-regression fitness: a deterministic full-batch trainer and the
//! balanced AUC score `(sensitivity + specificity) / 2` at a 0.5 cutoff.

use serde::{Deserialize, Serialize};

use crate::data::{project_columns, Dataset};
use crate::error::{Error, Result};
use crate::population::FeatureMask;

pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const STEP_SIZE: f64 = 0.1;
pub const CUTOFF: f64 = 0.5;

/// Standard deviations at or below this are treated as constant features.
const CONSTANT_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl FitnessScore {
    pub fn from_rates(sensitivity: f64, specificity: f64) -> Self {
        Self {
            auc: (sensitivity + specificity) / 2.0,
            sensitivity,
            specificity,
        }
    }

    /// Score assigned to an empty subset.
    pub fn worst() -> Self {
        Self::from_rates(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Per-feature `(mean, stddev)` from the training data. A stddev of 0
    /// marks a constant feature whose weight is pinned to 0.
    pub standardization: Vec<(f64, f64)>,
    pub epochs: usize,
}

impl LogisticModel {
    pub fn nfeat(&self) -> usize {
        self.weights.len()
    }

    fn linear(&self, row: &[f64]) -> f64 {
        let mut z = self.intercept;
        for ((&x, &w), &(mean, sd)) in row.iter().zip(&self.weights).zip(&self.standardization) {
            if sd > 0.0 {
                z += w * ((x - mean) / sd);
            }
        }
        z
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Full-batch gradient ascent on the mean log-likelihood over z-scored
/// features. Starts from zero weights, step [`STEP_SIZE`], and stops after
/// `max_epochs` or once the loss changes by less than `tol`.
pub fn train_logistic(train: &Dataset, max_epochs: usize, tol: f64) -> Result<LogisticModel> {
    let k = train.nfeat();
    let m = train.nrows();
    if k == 0 {
        return Err(Error::data("cannot train on zero features"));
    }
    let (pos, neg) = train.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::data("single-class training labels"));
    }

    let mut standardization = Vec::with_capacity(k);
    for j in 0..k {
        let mut sum = 0.0;
        for row in train.rows() {
            sum += row[j];
        }
        let mean = sum / m as f64;
        let mut ss = 0.0;
        for row in train.rows() {
            let d = row[j] - mean;
            ss += d * d;
        }
        let sd = (ss / m as f64).sqrt();
        standardization.push((mean, if sd > CONSTANT_STD { sd } else { 0.0 }));
    }

    let mut z_rows = Vec::with_capacity(m * k);
    for row in train.rows() {
        for (&x, &(mean, sd)) in row.iter().zip(&standardization) {
            z_rows.push(if sd > 0.0 { (x - mean) / sd } else { 0.0 });
        }
    }
    let labels: Vec<f64> = train.labels().iter().map(|&y| f64::from(y)).collect();

    let mut weights = vec![0.0; k];
    let mut intercept = 0.0;
    let mut grad = vec![0.0; k];
    let mut prev_loss = f64::INFINITY;
    let mut epochs = 0;
    let scale = STEP_SIZE / m as f64;

    while epochs < max_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let mut loss = 0.0;
        for (x, &y) in z_rows.chunks_exact(k).zip(&labels) {
            let mut z = intercept;
            for (&xi, &wi) in x.iter().zip(&weights) {
                z += wi * xi;
            }
            let p = sigmoid(z);
            loss += if y > 0.5 { softplus(-z) } else { softplus(z) };
            let err = y - p;
            grad_b += err;
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g += err * xi;
            }
        }
        loss /= m as f64;
        if (prev_loss - loss).abs() < tol {
            break;
        }
        prev_loss = loss;
        intercept += scale * grad_b;
        for ((w, &g), &(_, sd)) in weights.iter_mut().zip(&grad).zip(&standardization) {
            if sd > 0.0 {
                *w += scale * g;
            }
        }
        epochs += 1;
    }

    Ok(LogisticModel {
        weights,
        intercept,
        standardization,
        epochs,
    })
}

pub fn predict_probability(model: &LogisticModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.nfeat() {
        return Err(Error::data(format!(
            "row has {} values, model expects {}",
            row.len(),
            model.nfeat()
        )));
    }
    Ok(sigmoid(model.linear(row)))
}

/// Tallies predictions at the 0.5 cutoff; a probability of exactly 0.5 is
/// classified positive.
pub fn evaluate_confusion(model: &LogisticModel, eval: &Dataset) -> Result<ConfusionMatrix> {
    if eval.nrows() == 0 {
        return Err(Error::data("empty evaluation set"));
    }
    if eval.nfeat() != model.nfeat() {
        return Err(Error::data(format!(
            "evaluation set has {} features, model expects {}",
            eval.nfeat(),
            model.nfeat()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (row, &y) in eval.rows().zip(eval.labels()) {
        let positive = sigmoid(model.linear(row)) >= CUTOFF;
        match (y == 1, positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
        }
    }
    Ok(cm)
}

pub fn auc_score(cm: &ConfusionMatrix) -> Result<FitnessScore> {
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::data("no positive samples in evaluation set"));
    }
    if cm.tn + cm.fp == 0 {
        return Err(Error::data("no negative samples in evaluation set"));
    }
    let sensitivity = cm.tp as f64 / (cm.tp + cm.fn_) as f64;
    let specificity = cm.tn as f64 / (cm.tn + cm.fp) as f64;
    Ok(FitnessScore::from_rates(sensitivity, specificity))
}

/// Wrapper fitness of a subset: train on the projected `train`, score on the
/// projected `eval`. An empty subset scores [`FitnessScore::worst`].
pub fn evaluate_fitness(mask: &FeatureMask, train: &Dataset, eval: &Dataset) -> Result<FitnessScore> {
    if mask.none_selected() {
        return Ok(FitnessScore::worst());
    }
    let train_p = project_columns(train, mask)?;
    let model = train_logistic(&train_p, DEFAULT_MAX_EPOCHS, DEFAULT_TOL)?;
    let cm = if std::ptr::eq(train, eval) {
        evaluate_confusion(&model, &train_p)?
    } else {
        evaluate_confusion(&model, &project_columns(eval, mask)?)?
    };
    auc_score(&cm)
}
