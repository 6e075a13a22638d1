//! Reject-threshold selection: the greedy two-bound search (BA2), its
//! exhaustive oracle, the cost-ratio baseline (BA), the cost-minimizing
//! reject-option baseline (RO), and abstention evaluation.

use serde::Serialize;

use crate::costmodel::{eq6_geometric_cost, CostSpec};
use crate::error::{Error, Result};
use crate::roc::{auc, build_roc, convex_hull, evaluate_f, hull_abstention_auc, RocchCurve};
use crate::scorer::ScoreSet;

/// A pair of reject thresholds t1 ≤ t2 with the hull positions they came
/// from: (x1, f_x1) is the low-threshold end (larger fpr), (x2, f_x2) the
/// high-threshold end. Scores inside [t1, t2] are rejected.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdPair {
    pub t1: f64,
    pub t2: f64,
    pub x1: f64,
    pub x2: f64,
    pub f_x1: f64,
    pub f_x2: f64,
}

impl ThresholdPair {
    fn at(h: &RocchCurve, x1: f64, x2: f64) -> Self {
        let (f1, t1) = evaluate_f(h, x1);
        let (f2, t2) = evaluate_f(h, x2);
        Self { t1, t2, x1, x2, f_x1: f1, f_x2: f2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Positive,
    Negative,
    Reject,
}

/// The reject rule: positive above t2, negative below t1, reject inside the
/// band — equality with either threshold rejects.
pub fn predict(score: f64, pair: &ThresholdPair) -> Decision {
    if score > pair.t2 {
        Decision::Positive
    } else if score < pair.t1 {
        Decision::Negative
    } else {
        Decision::Reject
    }
}

/// Reject rates read off the hull geometry: rnr = x1 − x2 (negatives swept
/// by the band), rpr = f(x1) − f(x2) (positives swept by the band).
pub fn rates_from_points(h: &RocchCurve, x1: f64, x2: f64) -> (f64, f64) {
    let f1 = evaluate_f(h, x1).0;
    let f2 = evaluate_f(h, x2).0;
    (x1 - x2, f1 - f2)
}

/// Bounds for the two-constraint search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchConfig {
    /// Upper bound on the rejected-positive rate.
    pub p_max: f64,
    /// Upper bound on the rejected-negative rate.
    pub n_max: f64,
    /// Grid step for the walk (default 0.01).
    pub step: f64,
}

impl SearchConfig {
    pub fn new(p_max: f64, n_max: f64) -> Self {
        Self { p_max, n_max, step: 0.01 }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_max) || !(0.0..=1.0).contains(&self.n_max) {
            return Err(Error::Config("p_max and n_max must lie in [0,1]".into()));
        }
        if !(self.step > 0.0 && self.step <= 0.5) {
            return Err(Error::Config("step must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Moved {
    /// x2 moved right (l incremented).
    L,
    /// x1 moved left (r incremented).
    R,
}

/// One iteration of the greedy walk, for invariant checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ba2Step {
    pub x1: f64,
    pub x2: f64,
    pub rnr: f64,
    pub rpr: f64,
    pub n_violated: bool,
    pub p_violated: bool,
    pub moved: Moved,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ba2Result {
    pub pair: ThresholdPair,
    /// false when the walk exhausted the grid (x1 ≤ x2) without finding a
    /// band inside both bounds; the pair is then the empty band at the
    /// midpoint of the final probe.
    pub feasible: bool,
    pub iterations: usize,
}

/// Greedy two-bound threshold search.
///
/// Starting from the widest band (x1 = 1 − step, x2 = step), the walk
/// shrinks whichever end its rules indicate until both reject-rate bounds
/// hold: with both bounds violated the move is decided by comparing the two
/// rates weighted by `times` = max(bound)/min(bound) (for equal bounds this
/// reduces to "move the side with the larger rate"); with one bound violated
/// that end moves.
///
/// A zero bound means "no rejection allowed for that class": `times` is
/// undefined then, so the zero side is repaired first and never walks past
/// rate zero.
pub fn ba2_search(h: &RocchCurve, cfg: &SearchConfig) -> Result<Ba2Result> {
    Ok(ba2_search_traced(h, cfg)?.0)
}

/// [`ba2_search`] plus the per-iteration trace (for the walk's invariants).
pub fn ba2_search_traced(h: &RocchCurve, cfg: &SearchConfig) -> Result<(Ba2Result, Vec<Ba2Step>)> {
    cfg.validate()?;
    let step = cfg.step;
    let (p_max, n_max) = (cfg.p_max, cfg.n_max);
    let zero_p = p_max == 0.0;
    let zero_n = n_max == 0.0;
    let times = if zero_p || zero_n {
        f64::NAN // guarded: the zero-bound branches below never read it
    } else {
        p_max.max(n_max) / p_max.min(n_max)
    };
    let mut l: u64 = 1;
    let mut r: u64 = 1;
    let mut trace = Vec::new();
    loop {
        let x1 = 1.0 - step * r as f64;
        let x2 = step * l as f64;
        if x1 <= x2 {
            let x = ((x1 + x2) / 2.0).clamp(0.0, 1.0);
            let pair = ThresholdPair::at(h, x, x);
            let res = Ba2Result { pair, feasible: false, iterations: trace.len() };
            return Ok((res, trace));
        }
        let (rnr, rpr) = rates_from_points(h, x1, x2);
        let nv = rnr > n_max;
        let pv = rpr > p_max;
        let moved = if nv && pv {
            if zero_p {
                Moved::L // only the left end can drive rpr to zero
            } else if zero_n {
                Moved::R
            } else if n_max > p_max {
                if rnr > rpr * times {
                    Moved::R
                } else {
                    Moved::L
                }
            } else if p_max > n_max {
                if rpr > rnr * times {
                    Moved::L
                } else {
                    Moved::R
                }
            } else if rnr > rpr {
                Moved::R
            } else {
                Moved::L
            }
        } else if nv {
            Moved::R
        } else if pv {
            Moved::L
        } else {
            let pair = ThresholdPair::at(h, x1, x2);
            let res = Ba2Result { pair, feasible: true, iterations: trace.len() };
            return Ok((res, trace));
        };
        trace.push(Ba2Step { x1, x2, rnr, rpr, n_violated: nv, p_violated: pv, moved });
        match moved {
            Moved::L => l += 1,
            Moved::R => r += 1,
        }
    }
}

/// Brute-force oracle for the BA2 objective: over all grid pairs x1 > x2
/// satisfying both bounds, maximize the geometric abstention AUC; ties break
/// toward the smaller rnr + rpr, then the smaller x1.
pub fn ba2_exhaustive(h: &RocchCurve, cfg: &SearchConfig) -> Result<ThresholdPair> {
    cfg.validate()?;
    let grid = grid_evals(h, cfg.step);
    let mut best: Option<(f64, f64, f64, usize, usize)> = None; // auc, rates, x1, i1, i2
    for i2 in 0..grid.len() {
        for i1 in (i2 + 1)..grid.len() {
            let (x2, f2, _) = grid[i2];
            let (x1, f1, _) = grid[i1];
            let rnr = x1 - x2;
            let rpr = f1 - f2;
            if rnr > cfg.n_max || rpr > cfg.p_max {
                continue;
            }
            let a = hull_abstention_auc(h, x1, x2);
            let cand = (a, rnr + rpr, x1, i1, i2);
            let better = match &best {
                None => true,
                Some(b) => a > b.0 || (a == b.0 && (cand.1 < b.1 || (cand.1 == b.1 && x1 < b.2))),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let (_, _, _, i1, i2) =
        best.ok_or_else(|| Error::Degenerate("no feasible grid pair under the bounds".into()))?;
    Ok(ThresholdPair::at(h, grid[i1].0, grid[i2].0))
}

/// AUC of the hull of the retained (non-rejected) examples.
pub fn abstention_auc(s: &ScoreSet, pair: &ThresholdPair) -> Result<f64> {
    let retained = retain_outside_band(s, pair)?;
    let h = convex_hull(&build_roc(&retained)?);
    Ok(auc(&h.points))
}

fn retain_outside_band(s: &ScoreSet, pair: &ThresholdPair) -> Result<ScoreSet> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (&v, &l) in s.scores.iter().zip(&s.labels) {
        if predict(v, pair) != Decision::Reject {
            scores.push(v);
            labels.push(l);
        }
    }
    if scores.is_empty() {
        return Err(Error::Degenerate("all examples rejected".into()));
    }
    let kept = ScoreSet::new(scores, labels, s.source.clone())?;
    if kept.n_pos() == 0 || kept.n_neg() == 0 {
        return Err(Error::Degenerate("a class was fully rejected".into()));
    }
    Ok(kept)
}

/// Counting-based metrics of an abstaining classifier on a score set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AbstentionReport {
    /// AUC of the retained examples' hull.
    pub auc: f64,
    /// True positives over accepted positives (rejected positives excluded).
    pub sensitivity: f64,
    pub rpr: f64,
    pub rnr: f64,
    pub accepted_fraction: f64,
}

pub fn evaluate(s: &ScoreSet, pair: &ThresholdPair) -> Result<AbstentionReport> {
    let n_pos = s.n_pos();
    let n_neg = s.n_neg();
    let (mut tp, mut fn_, mut rp, mut rn) = (0usize, 0usize, 0usize, 0usize);
    for (&v, &l) in s.scores.iter().zip(&s.labels) {
        match (predict(v, pair), l) {
            (Decision::Reject, true) => rp += 1,
            (Decision::Reject, false) => rn += 1,
            (Decision::Positive, true) => tp += 1,
            (Decision::Negative, true) => fn_ += 1,
            _ => {}
        }
    }
    let accepted = s.len() - rp - rn;
    if accepted == 0 {
        return Err(Error::Degenerate("all examples rejected".into()));
    }
    if tp + fn_ == 0 {
        return Err(Error::Degenerate("no accepted positives; sensitivity undefined".into()));
    }
    Ok(AbstentionReport {
        auc: abstention_auc(s, pair)?,
        sensitivity: tp as f64 / (tp + fn_) as f64,
        rpr: rp as f64 / n_pos as f64,
        rnr: rn as f64 / n_neg as f64,
        accepted_fraction: accepted as f64 / s.len() as f64,
    })
}

/// Parameters of the single-bound, cost-ratio baseline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BaConfig {
    /// CR = c01/c10: cost of a false positive in units of a false negative.
    pub cost_ratio: f64,
    /// Upper bound on the overall (prior-weighted) reject rate.
    pub k_max: f64,
}

/// Exhaustive single-bound baseline: over grid pairs x1 ≥ x2 whose overall
/// reject rate r_pos·rpr + r_neg·rnr stays within k_max, minimize the
/// normalized misclassification cost r_neg·CR·x2 + r_pos·(1 − f(x1));
/// ties prefer the larger abstention AUC, then the smaller reject rate,
/// then the smaller x1. The empty band is always feasible.
pub fn ba_search(h: &RocchCurve, cfg: &BaConfig, step: f64) -> Result<ThresholdPair> {
    if !(cfg.cost_ratio.is_finite() && cfg.cost_ratio > 0.0) {
        return Err(Error::Config("cost_ratio must be positive and finite".into()));
    }
    if !(0.0..=1.0).contains(&cfg.k_max) {
        return Err(Error::Config("k_max must lie in [0,1]".into()));
    }
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Config("step must lie in (0, 0.5]".into()));
    }
    let r_pos = h.r_pos;
    let r_neg = 1.0 - r_pos;
    let grid = grid_evals(h, step);
    let mut best: Option<(f64, f64, f64, f64, usize, usize)> = None; // cost, -auc, rate, x1, i1, i2
    for i2 in 0..grid.len() {
        for i1 in i2..grid.len() {
            let (x2, f2, _) = grid[i2];
            let (x1, f1, _) = grid[i1];
            let rate = r_pos * (f1 - f2) + r_neg * (x1 - x2);
            if rate > cfg.k_max {
                continue;
            }
            let cost = r_neg * cfg.cost_ratio * x2 + r_pos * (1.0 - f1);
            let a = hull_abstention_auc(h, x1, x2);
            let cand = (cost, -a, rate, x1, i1, i2);
            let better = match &best {
                None => true,
                Some(b) => (cand.0, cand.1, cand.2, cand.3) < (b.0, b.1, b.2, b.3),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let (_, _, _, _, i1, i2) = best.expect("empty band is always feasible");
    Ok(ThresholdPair::at(h, grid[i1].0, grid[i2].0))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoResult {
    pub pair: ThresholdPair,
    /// false when the cost minimizer is the empty band — rejection is not
    /// applicable under this cost vector.
    pub applicable: bool,
}

/// Cost-minimizing reject-option baseline: exhaustive grid search over hull
/// point pairs x1 ≥ x2 minimizing the six-term expected cost evaluated on
/// the hull geometry; ties prefer the smaller overall reject rate, then the
/// smaller x1 (so the empty band wins ties and flags "not applicable").
pub fn ro_search(s: &ScoreSet, cost: &CostSpec, step: f64) -> Result<RoResult> {
    let h = convex_hull(&build_roc(s)?);
    ro_search_on_hull(&h, cost, step)
}

/// [`ro_search`] on a prebuilt hull (priors are carried by the hull).
pub fn ro_search_on_hull(h: &RocchCurve, cost: &CostSpec, step: f64) -> Result<RoResult> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Config("step must lie in (0, 0.5]".into()));
    }
    cost.validate()?;
    let r_pos = h.r_pos;
    let r_neg = 1.0 - r_pos;
    let grid = grid_evals(h, step);
    let mut best: Option<(f64, f64, f64, usize, usize)> = None; // cost, rate, x1, i1, i2
    for i2 in 0..grid.len() {
        for i1 in i2..grid.len() {
            let (x2, f2, _) = grid[i2];
            let (x1, f1, _) = grid[i1];
            let c = eq6_geometric_cost(cost, r_pos, x1, f1, x2, f2);
            let rate = r_pos * (f1 - f2) + r_neg * (x1 - x2);
            let cand = (c, rate, x1, i1, i2);
            let better = match &best {
                None => true,
                Some(b) => (c, rate, x1) < (b.0, b.1, b.2),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let (_, _, _, i1, i2) = best.expect("grid is never empty");
    Ok(RoResult { pair: ThresholdPair::at(h, grid[i1].0, grid[i2].0), applicable: i1 != i2 })
}

/// Hull evaluations at every grid position: (x, f(x), threshold(x)).
fn grid_evals(h: &RocchCurve, step: f64) -> Vec<(f64, f64, f64)> {
    let g = (1.0 / step).round() as usize;
    (0..=g)
        .map(|i| {
            let x = (i as f64 * step).min(1.0);
            let (f, t) = evaluate_f(h, x);
            (x, f, t)
        })
        .collect()
}
