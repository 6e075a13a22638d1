//! Six-term expected-cost evaluation, uniform cost-model sampling, and the
//! Monte-Carlo higher/lower/identical comparison harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abstain::{ba2_search, predict, ro_search, abstention_auc, Decision, SearchConfig, ThresholdPair};
use crate::error::{Error, Result};
use crate::scorer::ScoreSet;

/// Per-example costs; negative values are gains. `cr` is the cost of
/// rejecting (either class).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostSpec {
    pub ctp: f64,
    pub cfp: f64,
    pub ctn: f64,
    pub cfn: f64,
    pub cr: f64,
}

impl CostSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        let vals = [self.ctp, self.cfp, self.ctn, self.cfn, self.cr];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("cost components must be finite".into()));
        }
        Ok(())
    }
}

/// Uniform-range cost generators. All three share CTP, CTN ~ U[−10, 0] and
/// CFP ~ U[0, 50]; CM1 has CFN ~ U[0, 50] and CR = 1; CM3 widens CFN to
/// U[0, 100]; CM4 instead draws CR ~ U[0, 30].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    Cm1,
    Cm3,
    Cm4,
}

impl CostModel {
    pub fn name(&self) -> &'static str {
        match self {
            CostModel::Cm1 => "cm1",
            CostModel::Cm3 => "cm3",
            CostModel::Cm4 => "cm4",
        }
    }
}

impl std::str::FromStr for CostModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cm1" => Ok(CostModel::Cm1),
            "cm3" => Ok(CostModel::Cm3),
            "cm4" => Ok(CostModel::Cm4),
            other => Err(Error::Config(format!("unknown cost model {other:?} (use cm1, cm3 or cm4)"))),
        }
    }
}

/// Draw one cost vector; deterministic per seed. Draw order is fixed:
/// ctp, ctn, cfp, cfn, then cr.
pub fn sample_cost(model: CostModel, seed: u64) -> CostSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctp = rng.gen_range(-10.0..0.0);
    let ctn = rng.gen_range(-10.0..0.0);
    let cfp = rng.gen_range(0.0..50.0);
    let cfn = match model {
        CostModel::Cm3 => rng.gen_range(0.0..100.0),
        _ => rng.gen_range(0.0..50.0),
    };
    let cr = match model {
        CostModel::Cm4 => rng.gen_range(0.0..30.0),
        _ => 1.0,
    };
    CostSpec { ctp, cfp, ctn, cfn, cr }
}

/// The six-term expected cost with empirically counted rates:
/// r(pos)·[CFN·fnr + CTP·tpr + CR·rpr] + r(neg)·[CTN·tnr + CFP·fpr + CR·rnr],
/// where the rates follow the strict reject rule (band inclusive).
pub fn total_cost(s: &ScoreSet, pair: &ThresholdPair, c: &CostSpec) -> f64 {
    let n_pos = s.n_pos();
    let n_neg = s.n_neg();
    let (mut tp, mut fn_, mut rp) = (0usize, 0usize, 0usize);
    let (mut tn, mut fp, mut rn) = (0usize, 0usize, 0usize);
    for (&v, &l) in s.scores.iter().zip(&s.labels) {
        match (predict(v, pair), l) {
            (Decision::Positive, true) => tp += 1,
            (Decision::Negative, true) => fn_ += 1,
            (Decision::Reject, true) => rp += 1,
            (Decision::Positive, false) => fp += 1,
            (Decision::Negative, false) => tn += 1,
            (Decision::Reject, false) => rn += 1,
        }
    }
    let r_pos = n_pos as f64 / s.len() as f64;
    let r_neg = 1.0 - r_pos;
    let p = n_pos as f64;
    let n = n_neg as f64;
    r_pos * (c.cfn * fn_ as f64 / p + c.ctp * tp as f64 / p + c.cr * rp as f64 / p)
        + r_neg * (c.ctn * tn as f64 / n + c.cfp * fp as f64 / n + c.cr * rn as f64 / n)
}

/// The same six terms read off hull geometry at band (x1, x2):
/// fnr = 1 − f(x1), tnr = 1 − x1, tpr = f(x2), fpr = x2, rpr = f(x1) − f(x2),
/// rnr = x1 − x2.
pub fn eq6_geometric_cost(c: &CostSpec, r_pos: f64, x1: f64, f1: f64, x2: f64, f2: f64) -> f64 {
    let r_neg = 1.0 - r_pos;
    r_pos * (c.cfn * (1.0 - f1) + c.ctp * f2 + c.cr * (f1 - f2))
        + r_neg * (c.ctn * (1.0 - x1) + c.cfp * x2 + c.cr * (x1 - x2))
}

/// Higher / lower / identical tallies (from the bounded method's viewpoint).
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CompareCounts {
    pub higher: usize,
    pub lower: usize,
    pub identical: usize,
}

impl CompareCounts {
    fn total(&self) -> usize {
        self.higher + self.lower + self.identical
    }

    fn tally(&mut self, bounded: f64, baseline: f64, tol: f64) {
        if (bounded - baseline).abs() <= tol {
            self.identical += 1;
        } else if bounded > baseline {
            self.higher += 1;
        } else {
            self.lower += 1;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub model: CostModel,
    pub n_trials: usize,
    /// Eq.-6 test cost of BA2 vs RO.
    pub cost: CompareCounts,
    /// Abstention AUC of BA2 vs RO on the test scores.
    pub auc: CompareCounts,
    /// The reject-rate bounds handed to BA2 (mean RO test rates).
    pub p_max: f64,
    pub n_max: f64,
    /// Trials whose cost draw made rejection not applicable for RO.
    pub not_applicable: usize,
    /// Wilcoxon rank-sum statistic of BA2's costs within the pooled
    /// (BA2 ∪ RO) costs over applicable trials — diagnostic only.
    pub cost_rank_sum: f64,
}

const IDENTICAL_TOL: f64 = 1e-9;

/// Monte-Carlo comparison of the bounded two-constraint search against the
/// cost-minimizing baseline.
///
/// Per trial a cost vector is drawn and the baseline fits its band on the
/// training hull; its empirical reject rates on the test scores are recorded.
/// The trial-mean of those rates becomes the fixed (p_max, n_max) for one
/// bounded search on the same training hull, and both bands are then priced
/// on the test scores with each trial's cost vector; abstention AUCs are
/// compared the same way. Trials where the baseline's optimum is the empty
/// band count as identical for both metrics.
pub fn compare_methods(
    s_train: &ScoreSet,
    s_test: &ScoreSet,
    model: CostModel,
    n_trials: usize,
    seed: u64,
) -> Result<CompareReport> {
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be at least 1".into()));
    }
    for (set, which) in [(s_train, "training"), (s_test, "test")] {
        if set.n_pos() == 0 || set.n_neg() == 0 {
            return Err(Error::Data(format!("{which} scores must contain both classes")));
        }
    }
    let step = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trial_seeds: Vec<u64> = (0..n_trials).map(|_| rng.gen()).collect();

    // pass 1: baseline bands and their test reject rates
    let mut specs = Vec::with_capacity(n_trials);
    let mut baseline = Vec::with_capacity(n_trials);
    let (mut sum_rpr, mut sum_rnr) = (0.0, 0.0);
    for &ts in &trial_seeds {
        let spec = sample_cost(model, ts);
        let ro = ro_search(s_train, &spec, step)?;
        let (rp, rn) = counted_reject_rates(s_test, &ro.pair);
        sum_rpr += rp;
        sum_rnr += rn;
        specs.push(spec);
        baseline.push(ro);
    }
    let p_max = sum_rpr / n_trials as f64;
    let n_max = sum_rnr / n_trials as f64;

    // pass 2: one bounded search under the fixed mean bounds, then price both
    let h_train = crate::roc::convex_hull(&crate::roc::build_roc(s_train)?);
    let ba2 = ba2_search(&h_train, &SearchConfig { p_max, n_max, step })?;
    let ba2_auc = abstention_auc(s_test, &ba2.pair)?;

    let mut cost = CompareCounts::default();
    let mut auc_counts = CompareCounts::default();
    let mut not_applicable = 0usize;
    let mut ba2_costs = Vec::new();
    let mut ro_costs = Vec::new();
    for (spec, ro) in specs.iter().zip(&baseline) {
        if !ro.applicable {
            not_applicable += 1;
            cost.identical += 1;
            auc_counts.identical += 1;
            continue;
        }
        let cb = total_cost(s_test, &ba2.pair, spec);
        let cr = total_cost(s_test, &ro.pair, spec);
        cost.tally(cb, cr, IDENTICAL_TOL);
        ba2_costs.push(cb);
        ro_costs.push(cr);
        let ar = abstention_auc(s_test, &ro.pair)?;
        auc_counts.tally(ba2_auc, ar, IDENTICAL_TOL);
    }
    debug_assert_eq!(cost.total(), n_trials);
    debug_assert_eq!(auc_counts.total(), n_trials);

    Ok(CompareReport {
        model,
        n_trials,
        cost,
        auc: auc_counts,
        p_max,
        n_max,
        not_applicable,
        cost_rank_sum: rank_sum(&ba2_costs, &ro_costs),
    })
}

fn counted_reject_rates(s: &ScoreSet, pair: &ThresholdPair) -> (f64, f64) {
    let (mut rp, mut rn) = (0usize, 0usize);
    for (&v, &l) in s.scores.iter().zip(&s.labels) {
        if predict(v, pair) == Decision::Reject {
            if l {
                rp += 1;
            } else {
                rn += 1;
            }
        }
    }
    (rp as f64 / s.n_pos() as f64, rn as f64 / s.n_neg() as f64)
}

/// Rank sum of sample `a` within the pooled samples (mid-ranks for ties).
fn rank_sum(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut sum = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let mid_rank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1..=j
        for p in &pooled[i..j] {
            if p.1 {
                sum += mid_rank;
            }
        }
        i = j;
    }
    sum
}
