//! Campaign records and the report files derived from them.
//!
//! `runs.json` holds everything needed to rebuild the other files, so
//! `evofss report --in <dir>` can regenerate them without rerunning. The
//! deterministic files carry no wall times and are byte-identical across
//! reruns with the same seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::repeatability::{
    feature_repeatability, least_cardinal_best, subset_repeatability, FeatureCount, LeastCardinal, SubsetGroup,
};
use super::stats::{mean, paired_t_test, sample_sd, TTestResult};
use super::SpeedupReport;
use crate::classifier::FitnessScore;
use crate::engine::{Algorithm, RunResult};
use crate::error::{Error, Result};
use crate::population::{FeatureMask, Individual};

/// Outcome of one run, scored on the test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub run: usize,
    pub mask: String,
    pub selected: Vec<String>,
    pub cardinality: usize,
    pub test: FitnessScore,
    /// Best training AUC seen during the run.
    pub train_auc: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub feature_names: Vec<String>,
    pub runs: usize,
    pub algorithms: Vec<Algorithm>,
    pub records: Vec<RunRecord>,
}

impl CampaignRecord {
    pub fn from_results(names: &[String], runs: usize, results: &[(Algorithm, Vec<RunResult>)]) -> Self {
        let mut records = Vec::new();
        for (alg, rs) in results {
            for (run, r) in rs.iter().enumerate() {
                records.push(RunRecord {
                    algorithm: *alg,
                    run,
                    mask: r.best.mask.to_bit_string(),
                    selected: r.best.selected_ids.clone(),
                    cardinality: r.best.cardinality(),
                    test: r.best.auc.unwrap_or_else(FitnessScore::worst),
                    train_auc: r.archive.auc_value().unwrap_or(0.0),
                    evaluations: r.evaluations,
                });
            }
        }
        CampaignRecord {
            feature_names: names.to_vec(),
            runs,
            algorithms: results.iter().map(|(a, _)| *a).collect(),
            records,
        }
    }

    /// Records of one algorithm in run order.
    pub fn of(&self, alg: Algorithm) -> Vec<&RunRecord> {
        let mut v: Vec<&RunRecord> = self.records.iter().filter(|r| r.algorithm == alg).collect();
        v.sort_by_key(|r| r.run);
        v
    }

    pub fn test_aucs(&self, alg: Algorithm) -> Vec<f64> {
        self.of(alg).iter().map(|r| r.test.auc).collect()
    }

    /// Per-run bests rebuilt as individuals (id = run index).
    pub fn bests(&self, alg: Algorithm) -> Result<Vec<Individual>> {
        self.of(alg)
            .into_iter()
            .map(|r| {
                let mut ind = Individual::new(r.run, FeatureMask::from_bit_string(&r.mask)?, &self.feature_names)?;
                ind.auc = Some(r.test);
                Ok(ind)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub mean_cardinality: f64,
    pub mean_test_auc: f64,
    pub sd_test_auc: f64,
    pub best_test_auc: f64,
    pub mean_evaluations: f64,
}

pub fn summarize(c: &CampaignRecord) -> Vec<AlgorithmSummary> {
    c.algorithms
        .iter()
        .map(|&alg| {
            let rs = c.of(alg);
            let aucs = c.test_aucs(alg);
            let cards: Vec<f64> = rs.iter().map(|r| r.cardinality as f64).collect();
            let evals: Vec<f64> = rs.iter().map(|r| r.evaluations as f64).collect();
            AlgorithmSummary {
                algorithm: alg,
                runs: rs.len(),
                mean_cardinality: mean(&cards),
                mean_test_auc: mean(&aucs),
                sd_test_auc: if aucs.len() > 1 { sample_sd(&aucs) } else { 0.0 },
                best_test_auc: aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_evaluations: mean(&evals),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityReport {
    pub algorithm: Algorithm,
    pub frequent_features: Vec<FeatureCount>,
    pub subsets: [Option<SubsetGroup>; 2],
    pub least_cardinal: Option<LeastCardinal>,
}

pub fn repeatability(c: &CampaignRecord) -> Result<Vec<RepeatabilityReport>> {
    c.algorithms
        .iter()
        .map(|&alg| {
            let bests = c.bests(alg)?;
            Ok(RepeatabilityReport {
                algorithm: alg,
                frequent_features: feature_repeatability(&bests, &c.feature_names, bests.len()).frequent,
                subsets: subset_repeatability(&bests),
                least_cardinal: least_cardinal_best(&bests),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: Algorithm,
    pub second: Algorithm,
    pub result: Option<TTestResult>,
    pub note: Option<String>,
}

/// Paired t-tests on per-run test AUCs for every pair, in configuration order.
pub fn compare(c: &CampaignRecord) -> Vec<PairComparison> {
    let mut out = Vec::new();
    for (i, &a) in c.algorithms.iter().enumerate() {
        for &b in &c.algorithms[i + 1..] {
            let (result, note) = match paired_t_test(&c.test_aucs(a), &c.test_aucs(b)) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(PairComparison {
                first: a,
                second: b,
                result,
                note,
            });
        }
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Runtime(e.to_string()))?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Runtime(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Runtime(e.to_string()))?;
    write_file(path, &bytes)
}

/// CSV numbers use the shortest round-trip form, so they match the JSON.
fn num(x: f64) -> String {
    x.to_string()
}

/// Writes runs.json, summary, repeatability, t-test and best-subset files.
pub fn emit_reports(dir: &Path, c: &CampaignRecord) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("runs.json"), c)?;

    let summary = summarize(c);
    write_json(&dir.join("summary.json"), &summary)?;
    write_csv(
        &dir.join("summary.csv"),
        &["algorithm", "runs", "avg_cardinality", "mean_auc", "sd_auc", "best_auc", "avg_evaluations"],
        summary
            .iter()
            .map(|s| {
                vec![
                    s.algorithm.to_string(),
                    s.runs.to_string(),
                    num(s.mean_cardinality),
                    num(s.mean_test_auc),
                    num(s.sd_test_auc),
                    num(s.best_test_auc),
                    num(s.mean_evaluations),
                ]
            })
            .collect(),
    )?;

    let rep = repeatability(c)?;
    write_json(&dir.join("repeatability.json"), &rep)?;
    let mut features = Vec::new();
    let mut subsets = Vec::new();
    let mut least = Vec::new();
    for r in &rep {
        for (rank, f) in r.frequent_features.iter().enumerate() {
            features.push(vec![
                r.algorithm.to_string(),
                (rank + 1).to_string(),
                f.feature.clone(),
                f.count.to_string(),
            ]);
        }
        for (rank, g) in r.subsets.iter().enumerate() {
            if let Some(g) = g {
                subsets.push(vec![
                    r.algorithm.to_string(),
                    (rank + 1).to_string(),
                    g.count.to_string(),
                    g.cardinality.to_string(),
                    num(g.auc),
                    g.mask.clone(),
                ]);
            }
        }
        if let Some(l) = r.least_cardinal {
            least.push(vec![r.algorithm.to_string(), l.cardinality.to_string(), num(l.auc)]);
        }
    }
    write_csv(&dir.join("features.csv"), &["algorithm", "rank", "feature", "count"], features)?;
    write_csv(
        &dir.join("subsets.csv"),
        &["algorithm", "rank", "count", "cardinality", "auc", "mask"],
        subsets,
    )?;
    write_csv(&dir.join("least_cardinal.csv"), &["algorithm", "cardinality", "auc"], least)?;

    let tests = compare(c);
    write_json(&dir.join("ttest.json"), &tests)?;
    write_csv(
        &dir.join("ttest.csv"),
        &["first", "second", "t_statistic", "p_value", "df", "significant", "note"],
        tests
            .iter()
            .map(|p| match &p.result {
                Some(r) => vec![
                    p.first.to_string(),
                    p.second.to_string(),
                    num(r.t_statistic),
                    num(r.p_value),
                    r.df.to_string(),
                    r.significant.to_string(),
                    String::new(),
                ],
                None => vec![
                    p.first.to_string(),
                    p.second.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    p.note.clone().unwrap_or_default(),
                ],
            })
            .collect(),
    )?;

    write_csv(
        &dir.join("best_subsets.csv"),
        &["algorithm", "run", "auc", "sensitivity", "specificity", "cardinality", "features"],
        c.records
            .iter()
            .map(|r| {
                vec![
                    r.algorithm.to_string(),
                    r.run.to_string(),
                    num(r.test.auc),
                    num(r.test.sensitivity),
                    num(r.test.specificity),
                    r.cardinality.to_string(),
                    r.selected.join(" "),
                ]
            })
            .collect(),
    )?;

    write_file(&dir.join("summary.txt"), summary_text(&summary, &rep, &tests).as_bytes())
}

fn summary_text(summary: &[AlgorithmSummary], rep: &[RepeatabilityReport], tests: &[PairComparison]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>5} {:>9} {:>8} {:>8}", "algorithm", "runs", "avg card", "mean AUC", "sd AUC");
    for a in summary {
        let _ = writeln!(
            s,
            "{:<10} {:>5} {:>9.2} {:>8.4} {:>8.4}",
            a.algorithm.to_string(),
            a.runs,
            a.mean_cardinality,
            a.mean_test_auc,
            a.sd_test_auc
        );
    }
    s.push('\n');
    for r in rep {
        let feats: Vec<String> = r.frequent_features.iter().map(|f| format!("{}({})", f.feature, f.count)).collect();
        let _ = writeln!(s, "{} frequent features: {}", r.algorithm, feats.join(", "));
        if let Some(l) = r.least_cardinal {
            let _ = writeln!(s, "{} least cardinal repeated subset: {} features, AUC {:.4}", r.algorithm, l.cardinality, l.auc);
        }
    }
    if !tests.is_empty() {
        s.push('\n');
    }
    for p in tests {
        match &p.result {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "{} vs {}: t = {:.3}, p = {:.4e}{}",
                    p.first,
                    p.second,
                    r.t_statistic,
                    r.p_value,
                    if r.significant { " (significant)" } else { "" }
                );
            }
            None => {
                let _ = writeln!(s, "{} vs {}: {}", p.first, p.second, p.note.as_deref().unwrap_or("n/a"));
            }
        }
    }
    s
}

/// Writes speedup.json and speedup.csv.
pub fn emit_speedup(dir: &Path, rows: &[(Algorithm, SpeedupReport)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    #[derive(Serialize)]
    struct Row<'a> {
        algorithm: Algorithm,
        #[serde(flatten)]
        report: &'a SpeedupReport,
    }
    let json: Vec<Row> = rows.iter().map(|(a, r)| Row { algorithm: *a, report: r }).collect();
    write_json(&dir.join("speedup.json"), &json)?;
    write_csv(
        &dir.join("speedup.csv"),
        &["algorithm", "sequential_s", "parallel_s", "lanes", "speedup"],
        rows.iter()
            .map(|(a, r)| {
                vec![
                    a.to_string(),
                    num(r.sequential_seconds),
                    num(r.parallel_seconds),
                    r.parallelism.to_string(),
                    num(r.speedup),
                ]
            })
            .collect(),
    )
}

/// Reads `runs.json` back from a report directory.
pub fn load_campaign(dir: &Path) -> Result<CampaignRecord> {
    let path = dir.join("runs.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })
}
