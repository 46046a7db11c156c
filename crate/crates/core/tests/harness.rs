mod common;

use std::fs;
use std::path::Path;

use evofss::harness::report::{compare, emit_reports, load_campaign, summarize};
use evofss::harness::stats::paired_t_test;
use evofss::harness::{run_campaign_on, CampaignRecord, ExperimentConfig};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn small_config(algorithms: &str, runs: usize) -> ExperimentConfig {
    let text = format!(
        "data = \"unused.csv\"\nlabel = \"y\"\nalgorithms = {algorithms}\nruns = {runs}\npop = 8\niters = 3\nta_iters = 2\nislands = 2\nparallelism = 2\nseed = 11\n"
    );
    ExperimentConfig::from_toml_str(&text, Path::new(".")).unwrap()
}

fn campaign(algorithms: &str, runs: usize) -> CampaignRecord {
    let cfg = small_config(algorithms, runs);
    let split = common::planted_split(240, 12, 3, 0.6, 21);
    let results = run_campaign_on(&cfg, &split).unwrap();
    CampaignRecord::from_results(split.train.feature_names(), runs, &results)
}

#[test]
fn campaign_reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_reports(a.path(), &campaign("[\"pbde\", \"pbdeta\", \"pbtade\"]", 4)).unwrap();
    emit_reports(b.path(), &campaign("[\"pbde\", \"pbdeta\", \"pbtade\"]", 4)).unwrap();
    for name in [
        "runs.json",
        "summary.json",
        "summary.csv",
        "repeatability.json",
        "features.csv",
        "subsets.csv",
        "least_cardinal.csv",
        "ttest.json",
        "ttest.csv",
        "best_subsets.csv",
        "summary.txt",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical campaigns");
    }

    // Regenerating from runs.json reproduces the same files.
    let loaded = load_campaign(a.path()).unwrap();
    emit_reports(b.path(), &loaded).unwrap();
    assert_eq!(
        fs::read(a.path().join("ttest.json")).unwrap(),
        fs::read(b.path().join("ttest.json")).unwrap()
    );
}

#[test]
fn summary_means_and_pair_counts() {
    let c = campaign("[\"pbde\", \"pbdeta\", \"pbtade\"]", 3);
    assert_eq!(compare(&c).len(), 3);
    for s in summarize(&c) {
        let aucs = c.test_aucs(s.algorithm);
        let m = aucs.iter().sum::<f64>() / aucs.len() as f64;
        assert!((s.mean_test_auc - m).abs() < 1e-12);
    }
    let two = campaign("[\"pbde\", \"pbtade\"]", 3);
    assert_eq!(compare(&two).len(), 1);
}

#[test]
fn json_and_csv_numbers_agree() {
    let dir = tempfile::tempdir().unwrap();
    let c = campaign("[\"pbde\", \"pbtade\"]", 3);
    emit_reports(dir.path(), &c).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    for (row, obj) in rdr.records().zip(json.as_array().unwrap()) {
        let row = row.unwrap();
        let csv_auc: f64 = row[3].parse().unwrap();
        assert_eq!(csv_auc, obj["mean_test_auc"].as_f64().unwrap());
        let csv_card: f64 = row[2].parse().unwrap();
        assert_eq!(csv_card, obj["mean_cardinality"].as_f64().unwrap());
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let c = campaign("[\"pbde\"]", 1);
    let err = emit_reports(&blocker.join("sub"), &c).unwrap_err();
    assert!(matches!(err, evofss::Error::Io { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn t_test_matches_direct_formula(
        a in proptest::collection::vec(0.0f64..1.0, 2..40),
        noise in proptest::collection::vec(-0.2f64..0.2, 40),
    ) {
        let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| x + e).collect();
        let n = a.len() as f64;
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let m = d.iter().sum::<f64>() / n;
        let sd = (d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt();
        prop_assume!(sd > 1e-9);
        let t = m / (sd / n.sqrt());
        let p = 2.0 * StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(-t.abs());
        let got = paired_t_test(&a, &b).unwrap();
        prop_assert!((got.t_statistic - t).abs() <= 1e-9 * t.abs().max(1.0));
        prop_assert!((got.p_value - p).abs() < 1e-6, "p {} vs {}", got.p_value, p);
    }
}
