//! Dataset ingestion: CSV and LIBSVM loaders, one-hot encoding, stratified
//! train/test splitting and column projection by a feature mask.
//!
//! Everything here is a pure function over immutable inputs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::population::FeatureMask;

/// Dense, row-major numeric dataset with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset from row vectors. Every row must have
    /// `feature_names.len()` finite entries and every label must be 0 or 1.
    pub fn from_rows(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let nfeat = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * nfeat);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != nfeat {
                return Err(Error::data(format!(
                    "row {i} has {} values, expected {nfeat}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(feature_names, values, labels)
    }

    /// Builds a dataset from a row-major buffer of `labels.len() * feature_names.len()` values.
    pub fn from_flat(feature_names: Vec<String>, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if values.len() != labels.len() * feature_names.len() {
            return Err(Error::data(format!(
                "matrix has {} cells, expected {} rows x {} features",
                values.len(),
                labels.len(),
                feature_names.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::data(format!("label {bad} is not binary")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("matrix contains non-finite values"));
        }
        Ok(Self {
            feature_names,
            values,
            labels,
        })
    }

    pub fn nrows(&self) -> usize {
        self.labels.len()
    }

    pub fn nfeat(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.nfeat();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.nrows()).map(move |i| self.row(i))
    }

    /// Number of rows labelled 1 and 0, in that order.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.nrows() - pos)
    }

    /// New dataset with the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let w = self.nfeat();
        let mut values = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            values,
            labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

/// One raw input column before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub values: ColumnValues,
}

impl RawColumn {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values: ColumnValues::Numeric(values),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            values: ColumnValues::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.values {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parsed CSV contents: typed feature columns plus labels mapped to {0,1}.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub labels: Vec<u8>,
    /// Raw label values mapped to class 0 and class 1 respectively.
    pub label_levels: [String; 2],
}

impl RawTable {
    pub fn encode(&self) -> Result<Dataset> {
        one_hot_encode(&self.columns, &self.labels)
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a CSV file. With `header == false` the label column is addressed by
/// its zero-based index and feature columns are named `c<index>`.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, header: bool) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + usize::from(header);
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
            parse_err(line, e.to_string())
        })?;
        cells.push(record.iter().map(str::to_owned).collect());
    }
    let width = cells.first().map(Vec::len).unwrap_or(0);

    let names: Vec<String> = if header {
        reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect()
    } else {
        (0..width).map(|i| format!("c{i}")).collect()
    };
    if cells.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }

    let label_idx = if header {
        names.iter().position(|n| n == label_column)
    } else {
        label_column.parse::<usize>().ok().filter(|&i| i < width)
    }
    .ok_or_else(|| Error::data(format!("label column '{label_column}' not found")))?;

    for (r, row) in cells.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| v.is_empty()) {
            return Err(parse_err(
                r + 1 + usize::from(header),
                format!("missing value in column '{}'", names[c]),
            ));
        }
    }

    let raw_labels: Vec<&str> = cells.iter().map(|row| row[label_idx].as_str()).collect();
    let (labels, label_levels) = map_binary_labels(&raw_labels)?;

    let columns = (0..width)
        .filter(|&c| c != label_idx)
        .map(|c| {
            let column: Vec<&str> = cells.iter().map(|row| row[c].as_str()).collect();
            let parsed: Option<Vec<f64>> = column.iter().map(|v| parse_number(v)).collect();
            match parsed {
                Some(values) => RawColumn::numeric(names[c].clone(), values),
                None => RawColumn::categorical(names[c].clone(), column),
            }
        })
        .collect();

    Ok(RawTable {
        columns,
        labels,
        label_levels,
    })
}

/// Maps exactly two distinct raw labels onto {0,1}; the larger one becomes 1.
/// Labels that all parse as numbers compare numerically, otherwise lexicographically.
fn map_binary_labels(raw: &[&str]) -> Result<(Vec<u8>, [String; 2])> {
    let mut levels: Vec<&str> = raw.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() != 2 {
        return Err(Error::data(format!(
            "non-binary labels: found {} distinct values",
            levels.len()
        )));
    }
    if let (Some(a), Some(b)) = (parse_number(levels[0]), parse_number(levels[1])) {
        if a > b {
            levels.swap(0, 1);
        }
    }
    let labels = raw.iter().map(|v| u8::from(*v == levels[1])).collect();
    Ok((labels, [levels[0].to_owned(), levels[1].to_owned()]))
}

/// Loads a LIBSVM/svmlight file into a dense dataset. Features are named by
/// their 1-based index. Labels `-1`/`0` map to 0, `+1`/`1` to 1.
pub fn load_libsvm(path: impl AsRef<Path>, nfeat_hint: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (label, row) = parse_libsvm_line(content, nfeat_hint).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        })?;
        if let Some(&(last, _)) = row.last() {
            max_index = max_index.max(last);
        }
        labels.push(label);
        sparse_rows.push(row);
    }

    let nfeat = nfeat_hint.unwrap_or(max_index);
    let mut values = vec![0.0; sparse_rows.len() * nfeat];
    for (r, row) in sparse_rows.iter().enumerate() {
        for &(idx, v) in row {
            values[r * nfeat + idx - 1] = v;
        }
    }
    let names = (1..=nfeat).map(|i| i.to_string()).collect();
    Dataset::from_flat(names, values, labels)
}

fn parse_libsvm_line(line: &str, nfeat_hint: Option<usize>) -> Result<(u8, Vec<(usize, f64)>), String> {
    let mut tokens = line.split_whitespace();
    let label_tok = tokens.next().ok_or("empty line")?;
    let label = match label_tok.parse::<f64>() {
        Ok(1.0) => 1,
        Ok(v) if v == 0.0 || v == -1.0 => 0,
        _ => return Err(format!("unsupported label '{label_tok}'")),
    };
    let mut row = Vec::new();
    let mut prev = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("malformed pair '{tok}'"))?;
        if idx == "qid" {
            continue;
        }
        let idx: usize = idx.parse().map_err(|_| format!("bad index '{idx}'"))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("bad value '{val}'"))?;
        if idx == 0 {
            return Err("indices are 1-based".into());
        }
        if idx <= prev {
            return Err(format!("indices not increasing ({prev} then {idx})"));
        }
        if let Some(n) = nfeat_hint {
            if idx > n {
                return Err(format!("index {idx} exceeds feature count {n}"));
            }
        }
        prev = idx;
        row.push((idx, val));
    }
    Ok((label, row))
}

/// Expands each categorical column into one indicator per level (named
/// `column=level`, first-appearance order). Numeric columns pass through.
pub fn one_hot_encode(columns: &[RawColumn], labels: &[u8]) -> Result<Dataset> {
    if columns.is_empty() {
        return Err(Error::data("no feature columns"));
    }
    let nrows = labels.len();
    if let Some(c) = columns.iter().find(|c| c.len() != nrows) {
        return Err(Error::data(format!(
            "column '{}' has {} rows, expected {nrows}",
            c.name,
            c.len()
        )));
    }

    let mut names = Vec::new();
    // Column-major blocks; transposed to row-major at the end.
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        match &col.values {
            ColumnValues::Numeric(v) => {
                names.push(col.name.clone());
                blocks.push(v.clone());
            }
            ColumnValues::Categorical(v) => {
                let mut levels: Vec<&str> = Vec::new();
                let mut index: HashMap<&str, usize> = HashMap::new();
                for s in v {
                    index.entry(s.as_str()).or_insert_with(|| {
                        levels.push(s.as_str());
                        levels.len() - 1
                    });
                }
                if levels.len() == 1 {
                    log::warn!("categorical column '{}' has a single level", col.name);
                }
                let start = blocks.len();
                for level in &levels {
                    names.push(format!("{}={}", col.name, level));
                    blocks.push(vec![0.0; nrows]);
                }
                for (r, s) in v.iter().enumerate() {
                    blocks[start + index[s.as_str()]][r] = 1.0;
                }
            }
        }
    }

    let width = blocks.len();
    let mut values = vec![0.0; nrows * width];
    for (c, block) in blocks.iter().enumerate() {
        for (r, &x) in block.iter().enumerate() {
            values[r * width + c] = x;
        }
    }
    Dataset::from_flat(names, values, labels.to_vec())
}

/// Train/test partition of one source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
}

/// Number of rows per class that go to the training partition: the floor of
/// `ratio * count`, with the leftover seats of `round(ratio * total)` handed
/// out by largest remainder (ties to the lower class label).
pub fn stratified_train_counts(class_counts: [usize; 2], ratio: f64) -> [usize; 2] {
    let total: usize = class_counts.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let exact = class_counts.map(|c| ratio * c as f64);
    let mut counts = exact.map(|x| (x + 1e-9).floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().take(target.saturating_sub(assigned)) {
        if counts[c] < class_counts[c] {
            counts[c] += 1;
        }
    }
    counts
}

/// Stratified random split. Deterministic for a fixed seed.
pub fn stratified_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::data(format!("split ratio {ratio} not in (0,1)")));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in ds.labels().iter().enumerate() {
        by_class[y as usize].push(i);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::data(format!(
                "class {class} has {} rows; stratified split needs at least 2",
                rows.len()
            )));
        }
    }
    let counts = stratified_train_counts([by_class[0].len(), by_class[1].len()], ratio);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (rows, &k) in by_class.iter_mut().zip(&counts) {
        rows.shuffle(&mut rng);
        train_idx.extend_from_slice(&rows[..k]);
        test_idx.extend_from_slice(&rows[k..]);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);

    Ok(SplitPair {
        train: ds.select_rows(&train_idx),
        test: ds.select_rows(&test_idx),
        ratio,
    })
}

/// Keeps exactly the columns whose mask bit is set, in their original order.
pub fn project_columns(ds: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    if mask.len() != ds.nfeat() {
        return Err(Error::data(format!(
            "mask length {} does not match {} features",
            mask.len(),
            ds.nfeat()
        )));
    }
    let keep: Vec<usize> = mask.selected_indices().collect();
    if keep.is_empty() {
        return Err(Error::data("empty subset"));
    }
    let mut values = Vec::with_capacity(ds.nrows() * keep.len());
    for row in ds.rows() {
        values.extend(keep.iter().map(|&c| row[c]));
    }
    Ok(Dataset {
        feature_names: keep.iter().map(|&c| ds.feature_names[c].clone()).collect(),
        values,
        labels: ds.labels.clone(),
    })
}
