//! Scoring: the built-in k-NN vote-fraction scorer and external score files.

use std::path::Path;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// Real-valued scores paired with true labels; higher score ⇒ more positive.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub source: String,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>, source: impl Into<String>) -> Result<Self> {
        if scores.is_empty() || scores.len() != labels.len() {
            return Err(Error::Data("scores and labels must have equal nonzero length".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("non-finite score".into()));
        }
        Ok(Self { scores, labels, source: source.into() })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    /// Positive-class prior r(pos).
    pub fn r_pos(&self) -> f64 {
        self.n_pos() as f64 / self.len() as f64
    }
}

/// Score each test example as the fraction of positives among its k nearest
/// training examples (squared Euclidean distance).
///
/// Distance ties at the k-th neighbor are broken toward the earlier row of a
/// canonical ordering of the training set (attributes lexicographically, then
/// label), which makes the result invariant under permutations of the
/// training rows.
pub fn knn_score(train: &LabeledDataset, test: &LabeledDataset, k: usize) -> Result<ScoreSet> {
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if k == 0 || k > train.len() {
        return Err(Error::Config(format!("k must be in 1..={}, got {k}", train.len())));
    }
    if train.n_attrs != test.n_attrs {
        return Err(Error::Data(format!(
            "attribute-count mismatch: train has {}, test has {}",
            train.n_attrs, test.n_attrs
        )));
    }
    let mut canon: Vec<usize> = (0..train.len()).collect();
    canon.sort_by(|&a, &b| {
        train
            .row(a)
            .partial_cmp(train.row(b))
            .unwrap()
            .then(train.labels[a].cmp(&train.labels[b]))
    });

    let mut scores = Vec::with_capacity(test.len());
    let mut dist: Vec<(f64, usize)> = vec![(0.0, 0); train.len()];
    for i in 0..test.len() {
        let q = test.row(i);
        for (c, &j) in canon.iter().enumerate() {
            let mut acc = 0.0;
            for (a, b) in q.iter().zip(train.row(j)) {
                let d = a - b;
                acc += d * d;
            }
            dist[c] = (acc, c);
        }
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, |x, y| x.partial_cmp(y).unwrap());
        }
        let votes = dist[..k].iter().filter(|&&(_, c)| train.labels[canon[c]]).count();
        scores.push(votes as f64 / k as f64);
    }
    ScoreSet::new(scores, test.labels.clone(), "knn")
}

/// Read a score file: one `score,label` pair per line with labels `pos`/`neg`,
/// optionally preceded by a `score,label` header line.
pub fn load_scores(path: &Path) -> Result<ScoreSet> {
    let text = std::fs::read_to_string(path)?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if ln == 0 && line.eq_ignore_ascii_case("score,label") {
            continue;
        }
        let (s, l) = line
            .split_once(',')
            .ok_or_else(|| Error::Data(format!("line {}: expected `score,label`", ln + 1)))?;
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {}: bad score {:?}", ln + 1, s.trim())))?;
        if !v.is_finite() {
            return Err(Error::Data(format!("line {}: non-finite score", ln + 1)));
        }
        labels.push(match l.trim() {
            "pos" => true,
            "neg" => false,
            other => return Err(Error::Data(format!("line {}: unknown label {other:?}", ln + 1))),
        });
        scores.push(v);
    }
    if scores.is_empty() {
        return Err(Error::Data(format!("{}: empty score file", path.display())));
    }
    ScoreSet::new(scores, labels, "external")
}
