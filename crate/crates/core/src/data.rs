//! Dataset loading (CSV and KEEL `.dat`) and stratified cross-validation plans.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A binary-labeled feature matrix. Labels are stored as `true` = positive.
///
/// Loaders min-max normalize every attribute to [0,1] so that k-NN distances
/// are comparable across attributes; datasets built in code via [`LabeledDataset::from_rows`]
/// are left as given.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub name: String,
    pub n_attrs: usize,
    features: Vec<f64>, // row-major, len() * n_attrs
    pub labels: Vec<bool>,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Rows dropped at load time because of missing values.
    pub n_dropped: usize,
}

impl LabeledDataset {
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(Error::Data("rows and labels must have equal nonzero length".into()));
        }
        let n_attrs = rows[0].len();
        let mut features = Vec::with_capacity(rows.len() * n_attrs);
        for row in &rows {
            if row.len() != n_attrs {
                return Err(Error::Data("ragged feature rows".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("non-finite feature value".into()));
            }
            features.extend_from_slice(row);
        }
        let n_pos = labels.iter().filter(|&&l| l).count();
        let n_neg = labels.len() - n_pos;
        // single-class datasets are allowed here: subsets (e.g. a test fold
        // being scored) don't need both classes, loaders and the CV planner
        // enforce their own requirements
        Ok(Self { name: name.into(), n_attrs, features, labels, n_pos, n_neg, n_dropped: 0 })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_attrs..(i + 1) * self.n_attrs]
    }

    /// Extract the examples at `idx` (in the given order) as a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| self.row(i).to_vec()).collect();
        let labels: Vec<bool> = idx.iter().map(|&i| self.labels[i]).collect();
        Self::from_rows(self.name.clone(), rows, labels)
    }

    /// Scale every attribute to [0,1]; constant attributes become all-zero.
    pub fn min_max_normalize(&mut self) {
        for a in 0..self.n_attrs {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..self.len() {
                let v = self.features[i * self.n_attrs + a];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = if hi > lo { hi - lo } else { 1.0 };
            for i in 0..self.len() {
                let v = &mut self.features[i * self.n_attrs + a];
                *v = (*v - lo) / span;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    KeelDat,
}

/// Pick a format from the file extension: `.dat` means KEEL, anything else CSV.
pub fn infer_format(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("dat") => DataFormat::KeelDat,
        _ => DataFormat::Csv,
    }
}

const MISSING_TOKENS: [&str; 3] = ["", "?", "<null>"];

/// Load a dataset from disk.
///
/// CSV: optional header row (detected when any non-label field of the first
/// row fails to parse as a number); the label lives in a column named
/// `label`/`class` when a header is present, otherwise in the last column.
/// Attributes must be numeric.
///
/// KEEL `.dat`: lines starting with `@` are skipped, the last column is the
/// label, and categorical attribute columns are integer-coded in the order
/// their values are first seen.
///
/// Rows with missing values (empty, `?`, `<null>`) are dropped and counted in
/// `n_dropped`. When `positive_label` is not given, the minority class is
/// positive (ties broken toward the lexicographically smaller label). All
/// attributes are min-max normalized to [0,1].
pub fn load_dataset(path: &Path, format: DataFormat, positive_label: Option<&str>) -> Result<LabeledDataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let (grid, label_col, n_dropped) = match format {
        DataFormat::Csv => read_csv(path)?,
        DataFormat::KeelDat => read_keel(path)?,
    };
    if grid.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let width = grid[0].len();
    if width < 2 {
        return Err(Error::Data(format!("{}: need at least one attribute and a label", path.display())));
    }

    let label_strings: Vec<&str> = grid.iter().map(|r| r[label_col].as_str()).collect();
    let positive = pick_positive_label(&label_strings, positive_label)?;
    let labels: Vec<bool> = label_strings.iter().map(|&l| l == positive).collect();

    let attr_cols: Vec<usize> = (0..width).filter(|&c| c != label_col).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    for r in &grid {
        let mut row = Vec::with_capacity(attr_cols.len());
        for &c in &attr_cols {
            let v: f64 = r[c]
                .parse()
                .map_err(|_| Error::Data(format!("{}: non-numeric attribute value {:?}", path.display(), r[c])))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{}: non-finite attribute value", path.display())));
            }
            row.push(v);
        }
        rows.push(row);
    }

    let mut ds = LabeledDataset::from_rows(name, rows, labels)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    ds.n_dropped = n_dropped;
    ds.min_max_normalize();
    Ok(ds)
}

type Grid = (Vec<Vec<String>>, usize, usize); // rows, label column, dropped count

fn read_csv(path: &Path) -> Result<Grid> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        records.push(rec.iter().map(|f| f.to_string()).collect());
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    let width = records[0].len();
    if records.iter().any(|r| r.len() != width) {
        return Err(Error::Data(format!("{}: ragged rows", path.display())));
    }
    // header iff any non-label field of the first row is not a number
    let has_header = records[0][..width - 1].iter().any(|f| f.parse::<f64>().is_err());
    let label_col = if has_header {
        records[0]
            .iter()
            .position(|h| h.eq_ignore_ascii_case("label") || h.eq_ignore_ascii_case("class"))
            .unwrap_or(width - 1)
    } else {
        width - 1
    };
    let body = if has_header { &records[1..] } else { &records[..] };
    let mut rows = Vec::with_capacity(body.len());
    let mut dropped = 0usize;
    for r in body {
        if r.iter().any(|f| MISSING_TOKENS.contains(&f.as_str())) {
            dropped += 1;
        } else {
            rows.push(r.clone());
        }
    }
    Ok((rows, label_col, dropped))
}

fn read_keel(path: &Path) -> Result<Grid> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('@') || line.starts_with('%') {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.iter().any(|f| MISSING_TOKENS.contains(&f.as_str())) {
            dropped += 1;
        } else {
            rows.push(fields);
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Data(format!("{}: ragged rows", path.display())));
    }
    // integer-code categorical attribute columns in first-seen order
    for c in 0..width - 1 {
        if rows.iter().all(|r| r[c].parse::<f64>().is_ok()) {
            continue;
        }
        let mut codes: HashMap<String, usize> = HashMap::new();
        for r in rows.iter_mut() {
            let next = codes.len();
            let code = *codes.entry(r[c].clone()).or_insert(next);
            r[c] = code.to_string();
        }
    }
    Ok((rows, width - 1, dropped))
}

fn pick_positive_label<'a>(labels: &[&'a str], positive_label: Option<&'a str>) -> Result<&'a str> {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for &l in labels {
        match counts.iter_mut().find(|(v, _)| *v == l) {
            Some((_, c)) => *c += 1,
            None => counts.push((l, 1)),
        }
    }
    if counts.len() != 2 {
        return Err(Error::Data(format!("expected exactly two label values, found {}", counts.len())));
    }
    if let Some(p) = positive_label {
        return if counts.iter().any(|(v, _)| *v == p) {
            Ok(p)
        } else {
            Err(Error::Data(format!("positive label {p:?} does not occur in the data")))
        };
    }
    counts.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(b.0)));
    Ok(counts[0].0)
}

/// Seeded stratified cross-validation assignments: `fold_assignments[repeat][example]`
/// is the fold id of that example in that repeat.
#[derive(Debug, Clone)]
pub struct CvPlan {
    pub seed: u64,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub fold_assignments: Vec<Vec<usize>>,
}

impl CvPlan {
    /// (train indices, test indices) for one cell, in ascending index order.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let assign = &self.fold_assignments[repeat];
        let mut train = Vec::with_capacity(assign.len());
        let mut test = Vec::new();
        for (i, &f) in assign.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Stratified plan: per repeat, each class is shuffled and dealt round-robin
/// into folds, so per-fold class counts differ by at most one example.
pub fn make_cv_plan(ds: &LabeledDataset, n_folds: usize, n_repeats: usize, seed: u64) -> Result<CvPlan> {
    if n_folds < 2 {
        return Err(Error::Config("n_folds must be at least 2".into()));
    }
    if n_repeats == 0 {
        return Err(Error::Config("n_repeats must be at least 1".into()));
    }
    if ds.n_pos < n_folds || ds.n_neg < n_folds {
        return Err(Error::Config(format!(
            "each class needs at least {n_folds} examples ({} pos / {} neg present)",
            ds.n_pos, ds.n_neg
        )));
    }
    let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i]).collect();
    let neg: Vec<usize> = (0..ds.len()).filter(|&i| !ds.labels[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_assignments = Vec::with_capacity(n_repeats);
    for _ in 0..n_repeats {
        let mut assign = vec![0usize; ds.len()];
        for class in [&pos, &neg] {
            let mut order = class.clone();
            order.shuffle(&mut rng);
            for (j, &i) in order.iter().enumerate() {
                assign[i] = j % n_folds;
            }
        }
        fold_assignments.push(assign);
    }
    Ok(CvPlan { seed, n_folds, n_repeats, fold_assignments })
}
