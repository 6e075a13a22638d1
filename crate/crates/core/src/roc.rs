//! ROC curves, the ROC convex hull (ROCCH), threshold averaging, and AUC.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scorer::ScoreSet;

/// One operating point. The decision rule is "positive iff score > threshold".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Empirical ROC curve: one point per distinct score plus a (1,1) endpoint,
/// ordered by strictly decreasing threshold, running from (0,0) to (1,1).
/// `r_pos` carries the positive-class prior of the source scores for the
/// cost-based searches downstream.
#[derive(Debug, Clone, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub r_pos: f64,
}

/// Upper convex hull of a [`RocCurve`]: same shape, plus concavity — slopes
/// between consecutive vertices never increase. Vertices keep the thresholds
/// of their source points.
#[derive(Debug, Clone, Serialize)]
pub struct RocchCurve {
    pub points: Vec<RocPoint>,
    pub r_pos: f64,
}

/// Build the empirical ROC curve of a two-class score set.
///
/// Sweeping the threshold down through the distinct score values, the point
/// for threshold v counts exactly the examples scoring strictly above v. The
/// (1,1) endpoint gets a pad threshold one minimal score-gap below the lowest
/// score so that threshold interpolation near fpr = 1 stays on the scale of
/// the real scores.
pub fn build_roc(s: &ScoreSet) -> Result<RocCurve> {
    let n_pos = s.n_pos();
    let n_neg = s.n_neg();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate("ROC curve needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[b].partial_cmp(&s.scores[a]).unwrap());

    let mut points = Vec::new();
    let (mut above_pos, mut above_neg) = (0usize, 0usize);
    let mut min_gap = f64::INFINITY;
    let mut prev: Option<f64> = None;
    let mut i = 0;
    while i < order.len() {
        let v = s.scores[order[i]];
        if let Some(p) = prev {
            min_gap = min_gap.min(p - v);
        }
        prev = Some(v);
        points.push(RocPoint {
            fpr: above_neg as f64 / n_neg as f64,
            tpr: above_pos as f64 / n_pos as f64,
            threshold: v,
        });
        while i < order.len() && s.scores[order[i]] == v {
            if s.labels[order[i]] {
                above_pos += 1;
            } else {
                above_neg += 1;
            }
            i += 1;
        }
    }
    let gap = if min_gap.is_finite() { min_gap } else { 1.0 };
    points.push(RocPoint { fpr: 1.0, tpr: 1.0, threshold: prev.unwrap() - gap });
    Ok(RocCurve { points, r_pos: n_pos as f64 / s.len() as f64 })
}

/// Upper convex hull by a single monotone-chain pass; collinear interior
/// points are dropped and every kept vertex retains its source threshold.
pub fn convex_hull(c: &RocCurve) -> RocchCurve {
    let mut hull: Vec<RocPoint> = Vec::with_capacity(c.points.len().min(64));
    for &p in &c.points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.fpr - a.fpr) * (p.tpr - a.tpr) - (b.tpr - a.tpr) * (p.fpr - a.fpr);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    RocchCurve { points: hull, r_pos: c.r_pos }
}

/// Trapezoidal area under an ordered point sequence.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Evaluate the hull as a function of fpr: returns (tpr, threshold), both
/// linearly interpolated between the bracketing vertices. Exactly at a vertex
/// the vertex's own values are returned.
pub fn evaluate_f(h: &RocchCurve, x: f64) -> (f64, f64) {
    let pts = &h.points;
    let lo = pts.partition_point(|p| p.fpr <= x).saturating_sub(1);
    let a = pts[lo];
    if lo == pts.len() - 1 || a.fpr == x {
        return (a.tpr, a.threshold);
    }
    let b = pts[lo + 1];
    let w = (x - a.fpr) / (b.fpr - a.fpr);
    (a.tpr + w * (b.tpr - a.tpr), a.threshold + w * (b.threshold - a.threshold))
}

/// Threshold averaging of several ROC curves.
///
/// `n_samples` thresholds are drawn evenly (by index) from the pooled sorted
/// set of all curves' thresholds; at each sampled threshold t every curve
/// contributes the point of its smallest threshold ≥ t (or (1,1) when it has
/// none), and the contributed (fpr, tpr) are averaged. The result is
/// re-sorted by descending threshold and endpoint-padded.
///
/// The (1,1) fallback assumes the curves span a common threshold range, as
/// fold curves of one scorer do.
pub fn average_curves(curves: &[RocCurve], n_samples: usize) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(Error::Config("average_curves needs at least one curve".into()));
    }
    if n_samples < 2 {
        return Err(Error::Config("n_samples must be at least 2".into()));
    }
    let mut pool: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.threshold))
        .collect();
    pool.sort_by(|a, b| b.partial_cmp(a).unwrap());
    pool.dedup();

    let mut idx = std::collections::BTreeSet::new();
    if pool.len() > 1 {
        for i in 0..n_samples {
            let pos = i as f64 * (pool.len() - 1) as f64 / (n_samples - 1) as f64;
            idx.insert(pos.round() as usize);
        }
    } else {
        idx.insert(0);
    }

    let m = curves.len() as f64;
    let mut out: Vec<RocPoint> = Vec::with_capacity(idx.len());
    for &i in &idx {
        let t = pool[i];
        let (mut sf, mut st) = (0.0, 0.0);
        for c in curves {
            // points are threshold-descending, so candidates with threshold ≥ t
            // form a prefix whose last element has the smallest such threshold
            let k = c.points.partition_point(|p| p.threshold >= t);
            let p = if k == 0 {
                RocPoint { fpr: 1.0, tpr: 1.0, threshold: t }
            } else {
                c.points[k - 1]
            };
            sf += p.fpr;
            st += p.tpr;
        }
        out.push(RocPoint { fpr: sf / m, tpr: st / m, threshold: t });
    }
    out.sort_by(|a, b| b.threshold.partial_cmp(&a.threshold).unwrap());
    if out[0].fpr != 0.0 || out[0].tpr != 0.0 {
        let t = out[0].threshold + 1.0;
        out.insert(0, RocPoint { fpr: 0.0, tpr: 0.0, threshold: t });
    }
    let last = *out.last().unwrap();
    if last.fpr != 1.0 || last.tpr != 1.0 {
        out.push(RocPoint { fpr: 1.0, tpr: 1.0, threshold: last.threshold - 1.0 });
    }
    let r_pos = curves.iter().map(|c| c.r_pos).sum::<f64>() / m;
    Ok(RocCurve { points: out, r_pos })
}

/// AUC of the hull after geometrically removing the reject band [x2, x1]:
/// the two retained arcs are renormalized by the accepted fractions
/// (1 − rnr horizontally, 1 − rpr vertically) and rejoined continuously.
/// Degenerate bands (empty, or consuming a whole class) return the plain
/// hull AUC.
pub fn hull_abstention_auc(h: &RocchCurve, x1: f64, x2: f64) -> f64 {
    let f1 = evaluate_f(h, x1).0;
    let f2 = evaluate_f(h, x2).0;
    let rnr = x1 - x2;
    let rpr = f1 - f2;
    if rnr <= 0.0 || rnr >= 1.0 || rpr >= 1.0 {
        return auc(&h.points);
    }
    let sx = 1.0 - rnr;
    let sy = 1.0 - rpr;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(h.points.len() + 1);
    for p in &h.points {
        if p.fpr < x2 {
            pts.push((p.fpr / sx, p.tpr / sy));
        }
    }
    pts.push((x2 / sx, f2 / sy)); // junction: identical from both sides
    for p in &h.points {
        if p.fpr > x1 {
            pts.push(((p.fpr - rnr) / sx, (p.tpr - rpr) / sy));
        }
    }
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}
