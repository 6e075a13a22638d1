//! Deterministic synthetic score sets and hulls for tests and benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::roc::{build_roc, convex_hull, RocchCurve};
use crate::scorer::ScoreSet;

/// Uniform scores with random labels; both classes guaranteed.
pub fn random_score_set(seed: u64, n: usize) -> ScoreSet {
    assert!(n >= 2, "need at least one example per class");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        scores.push(rng.gen::<f64>());
        labels.push(rng.gen::<bool>());
    }
    // repaint the first two if a class is missing
    if !labels.iter().any(|&l| l) {
        labels[0] = true;
    }
    if labels.iter().all(|&l| l) {
        labels[1] = false;
    }
    ScoreSet::new(scores, labels, "synthetic-uniform").unwrap()
}

/// Two unit-variance gaussian score clouds `sep` apart (positives higher).
pub fn gaussian_score_set(seed: u64, n_pos: usize, n_neg: usize, sep: f64) -> ScoreSet {
    assert!(n_pos >= 1 && n_neg >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut scores = Vec::with_capacity(n_pos + n_neg);
    let mut labels = Vec::with_capacity(n_pos + n_neg);
    for _ in 0..n_pos {
        scores.push(normal() + sep);
        labels.push(true);
    }
    for _ in 0..n_neg {
        scores.push(normal());
        labels.push(false);
    }
    ScoreSet::new(scores, labels, "synthetic-gaussian").unwrap()
}

/// Scores snapped to a small grid, producing heavy ties across classes.
pub fn quantized_score_set(seed: u64, n: usize, levels: usize) -> ScoreSet {
    assert!(levels >= 2);
    let base = random_score_set(seed, n);
    let scores = base
        .scores
        .iter()
        .map(|v| (v * (levels - 1) as f64).round() / (levels - 1) as f64)
        .collect();
    ScoreSet::new(scores, base.labels, "synthetic-quantized").unwrap()
}

/// Hull of a random mildly separated gaussian set of `n` examples.
pub fn random_hull(seed: u64, n: usize) -> RocchCurve {
    let n_pos = (n / 2).max(1);
    let n_neg = (n - n_pos).max(1);
    let sep = 0.5 + (seed % 7) as f64 * 0.25;
    let s = gaussian_score_set(seed, n_pos, n_neg, sep);
    convex_hull(&build_roc(&s).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_classes_present() {
        for seed in 0..50 {
            let s = random_score_set(seed, 2);
            assert!(s.n_pos() >= 1 && s.n_neg() >= 1);
        }
    }

    #[test]
    fn gaussian_sizes_and_determinism() {
        let a = gaussian_score_set(7, 30, 20, 1.0);
        let b = gaussian_score_set(7, 30, 20, 1.0);
        assert_eq!(a.n_pos(), 30);
        assert_eq!(a.n_neg(), 20);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn quantized_has_ties() {
        let s = quantized_score_set(3, 200, 5);
        let mut distinct: Vec<f64> = s.scores.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        assert!(distinct.len() <= 5);
    }

    #[test]
    fn random_hull_is_valid() {
        for seed in 0..20 {
            let h = random_hull(seed, 60);
            assert!(h.points.len() >= 2);
            assert_eq!((h.points[0].fpr, h.points[0].tpr), (0.0, 0.0));
            let last = h.points.last().unwrap();
            assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        }
    }
}
