//! Campaign configuration, read from a flat TOML file.
//!
//! ```toml
//! data = "train.csv"
//! format = "csv"
//! label = "class"
//! algorithms = ["pbde", "pbdeta", "pbtade"]
//! runs = 20
//! mf = 0.8
//! cr = 0.9
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, load_libsvm, Dataset};
use crate::engine::{Algorithm, EngineConfig};
use crate::error::{Error, Result};
use crate::operators::{DeParams, TaParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "libsvm" | "svmlight" => Ok(DataFormat::Libsvm),
            _ => Err(Error::config(format!("unknown data format '{s}'"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Csv => "csv",
            DataFormat::Libsvm => "libsvm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: PathBuf,
    pub format: DataFormat,
    /// Label column (CSV only): a header name, or a zero-based index without header.
    pub label: Option<String>,
    pub header: bool,
    /// Feature count for LIBSVM files; inferred when absent.
    pub nfeat: Option<usize>,
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self.format {
            DataFormat::Csv => {
                let label = self
                    .label
                    .as_deref()
                    .ok_or_else(|| Error::config("CSV input needs a label column"))?;
                load_csv(&self.path, label, self.header)?.encode()
            }
            DataFormat::Libsvm => load_libsvm(&self.path, self.nfeat),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Template for every run; algorithm, seed and run index are filled in per run.
    pub engine: EngineConfig,
    pub data: DataSource,
    pub runs: usize,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm is required"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be >= 1"));
        }
        if self.algorithms.len() > 1 && self.runs < 2 {
            return Err(Error::config("runs < 2: paired t-tests need at least two runs"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::config(format!("split ratio {} not in (0,1)", self.split_ratio)));
        }
        for &alg in &self.algorithms {
            self.engine.clone().with_algorithm(alg).validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let cfg = file.into_config(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }
}

fn default_true() -> bool {
    true
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn default_runs() -> usize {
    20
}

fn default_split_ratio() -> f64 {
    0.8
}

fn default_split_seed() -> u64 {
    42
}

fn default_output() -> PathBuf {
    PathBuf::from("evofss-out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    data: PathBuf,
    #[serde(default = "csv_format")]
    format: DataFormat,
    label: Option<String>,
    #[serde(default = "default_true")]
    header: bool,
    nfeat: Option<usize>,
    #[serde(default = "default_algorithms")]
    algorithms: Vec<Algorithm>,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_split_ratio")]
    split_ratio: f64,
    #[serde(default = "default_split_seed")]
    split_seed: u64,
    #[serde(default)]
    seed: u64,
    pop: Option<usize>,
    iters: Option<usize>,
    ta_iters: Option<usize>,
    mf: Option<f64>,
    cr: Option<f64>,
    tmf: Option<usize>,
    t0: Option<f64>,
    cool: Option<f64>,
    neighbors: Option<usize>,
    bias: Option<f64>,
    islands: Option<usize>,
    parallelism: Option<usize>,
    patience: Option<usize>,
    #[serde(default = "default_output")]
    output: PathBuf,
}

fn csv_format() -> DataFormat {
    DataFormat::Csv
}

impl ConfigFile {
    fn into_config(self, base: &Path) -> ExperimentConfig {
        let d = EngineConfig::default();
        let de = DeParams {
            mf: self.mf.unwrap_or(d.de.mf),
            cr: self.cr.unwrap_or(d.de.cr),
        };
        let ta = TaParams {
            tmf: self.tmf.unwrap_or(d.ta.tmf),
            t0: self.t0.unwrap_or(d.ta.t0),
            cool: self.cool.unwrap_or(d.ta.cool),
            neighbors_per_iter: self.neighbors.unwrap_or(d.ta.neighbors_per_iter),
        };
        let engine = EngineConfig {
            algorithm: self.algorithms.first().copied().unwrap_or(d.algorithm),
            de,
            ta,
            pop_size: self.pop.unwrap_or(d.pop_size),
            bias: self.bias.unwrap_or(d.bias),
            max_iter1: self.iters.unwrap_or(d.max_iter1),
            max_iter2: self.ta_iters.unwrap_or(d.max_iter2),
            islands: self.islands.unwrap_or(d.islands),
            parallelism: self.parallelism.unwrap_or(d.parallelism),
            master_seed: self.seed,
            run_index: 0,
            patience: self.patience,
        };
        ExperimentConfig {
            engine,
            data: DataSource {
                path: base.join(self.data),
                format: self.format,
                label: self.label,
                header: self.header,
                nfeat: self.nfeat,
            },
            runs: self.runs,
            split_ratio: self.split_ratio,
            split_seed: self.split_seed,
            algorithms: self.algorithms,
            output: base.join(self.output),
        }
    }
}
