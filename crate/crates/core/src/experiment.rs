//! Repeated stratified cross-validation driver.
//!
//! Per cell the reject band is fitted on a hull of averaged inner ROC curves
//! (leave one training fold out, score it against the rest) and then read off
//! the held-out fold's own hull geometrically, so the reported rates live on
//! the same convexified scale the searches optimize.

use std::path::PathBuf;

use crate::abstain::{ba2_search, ba_search, ro_search_on_hull, BaConfig, SearchConfig, ThresholdPair};
use crate::costmodel::{eq6_geometric_cost, CostSpec};
use crate::data::{infer_format, load_dataset, make_cv_plan, DataFormat, LabeledDataset};
use crate::error::{Error, Result};
use crate::roc::{average_curves, build_roc, convex_hull, evaluate_f, hull_abstention_auc, RocchCurve};
use crate::scorer::knn_score;

/// Band-fitting method run inside each cross-validation cell.
#[derive(Debug, Clone, Copy)]
pub enum Method {
    /// Maximize abstention AUC under per-class reject-rate bounds.
    Ba2 { p_max: f64, n_max: f64 },
    /// Minimize `ratio·r_neg·fpr + r_pos·fnr` under an overall reject bound.
    Ba { cost_ratio: f64, k_max: f64 },
    /// Minimize the six-term expected cost.
    Ro { cost: CostSpec },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ba2 { .. } => "ba2",
            Method::Ba { .. } => "ba",
            Method::Ro { .. } => "ro",
        }
    }

    pub fn params(&self) -> String {
        match self {
            Method::Ba2 { p_max, n_max } => format!("pmax={p_max:.2} nmax={n_max:.2}"),
            Method::Ba { cost_ratio, k_max } => format!("ratio={cost_ratio:.2} kmax={k_max:.2}"),
            Method::Ro { cost } => format!(
                "ctp={:.2} cfp={:.2} ctn={:.2} cfn={:.2} cr={:.2}",
                cost.ctp, cost.cfp, cost.ctn, cost.cfn, cost.cr
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |v: f64, what: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must lie in [0, 1], got {v}")))
            }
        };
        match self {
            Method::Ba2 { p_max, n_max } => {
                unit(*p_max, "p_max")?;
                unit(*n_max, "n_max")
            }
            Method::Ba { cost_ratio, k_max } => {
                if !cost_ratio.is_finite() || *cost_ratio < 0.0 {
                    return Err(Error::Config(format!("cost_ratio must be nonnegative, got {cost_ratio}")));
                }
                unit(*k_max, "k_max")
            }
            Method::Ro { cost } => cost.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// `None` infers from the extension (`.dat` is KEEL, anything else CSV).
    pub format: Option<DataFormat>,
    pub positive_label: Option<String>,
    pub method: Method,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Neighbor count of the k-NN scorer.
    pub k: usize,
    /// Grid step of the band searches.
    pub step: f64,
    /// Sample count used when averaging the inner curves.
    pub n_samples: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 3 {
            // the inner leave-one-training-fold-out curves need at least
            // one fold left to train on
            return Err(Error::Config("folds must be at least 3".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step <= 0.5) {
            return Err(Error::Config(format!("step must lie in (0, 0.5], got {}", self.step)));
        }
        if self.n_samples < 2 {
            return Err(Error::Config("n_samples must be at least 2".into()));
        }
        self.method.validate()
    }
}

/// Metrics of one (repeat, fold) cell, all read off the test fold's hull.
#[derive(Debug, Clone, Copy)]
pub struct CellResult {
    pub repeat: usize,
    pub fold: usize,
    pub auc: f64,
    pub sen: f64,
    pub rpr: f64,
    pub rnr: f64,
    /// Method objective on the test hull; absent for the bounded search.
    pub cost: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub dataset: String,
    pub method: String,
    pub params: String,
    pub cells: Vec<CellResult>,
    pub mean_auc: f64,
    pub mean_sen: f64,
    pub mean_rpr: f64,
    pub mean_rnr: f64,
    pub mean_cost: Option<f64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let format = cfg.format.unwrap_or_else(|| infer_format(&cfg.dataset));
    let ds = load_dataset(&cfg.dataset, format, cfg.positive_label.as_deref())?;
    let plan = make_cv_plan(&ds, cfg.folds, cfg.repeats, cfg.seed)?;

    let mut cells = Vec::with_capacity(cfg.repeats * cfg.folds);
    for r in 0..cfg.repeats {
        for f in 0..cfg.folds {
            let cell = run_cell(&ds, &plan.fold_assignments[r], r, f, cfg).map_err(|e| annotate(e, r, f))?;
            cells.push(cell);
        }
    }

    let n = cells.len() as f64;
    let mean = |pick: fn(&CellResult) -> f64| cells.iter().map(pick).sum::<f64>() / n;
    let mean_cost = if cells.iter().all(|c| c.cost.is_some()) {
        Some(cells.iter().map(|c| c.cost.unwrap()).sum::<f64>() / n)
    } else {
        None
    };
    Ok(ExperimentResult {
        dataset: ds.name.clone(),
        method: cfg.method.name().into(),
        params: cfg.method.params(),
        mean_auc: mean(|c| c.auc),
        mean_sen: mean(|c| c.sen),
        mean_rpr: mean(|c| c.rpr),
        mean_rnr: mean(|c| c.rnr),
        mean_cost,
        cells,
    })
}

fn run_cell(
    ds: &LabeledDataset,
    assign: &[usize],
    repeat: usize,
    fold: usize,
    cfg: &ExperimentConfig,
) -> Result<CellResult> {
    // inner curves: hold one training fold out, score it on the remainder
    let mut curves = Vec::with_capacity(cfg.folds - 1);
    for g in 0..cfg.folds {
        if g == fold {
            continue;
        }
        let val_idx: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] == g).collect();
        let fit_idx: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] != g && assign[i] != fold).collect();
        let s = knn_score(&ds.subset(&fit_idx)?, &ds.subset(&val_idx)?, cfg.k)?;
        curves.push(build_roc(&s)?);
    }
    let h_fit = convex_hull(&average_curves(&curves, cfg.n_samples)?);

    let pair = match cfg.method {
        Method::Ba2 { p_max, n_max } => {
            ba2_search(&h_fit, &SearchConfig { p_max, n_max, step: cfg.step })?.pair
        }
        Method::Ba { cost_ratio, k_max } => {
            ba_search(&h_fit, &BaConfig { cost_ratio, k_max }, cfg.step)?
        }
        Method::Ro { cost } => ro_search_on_hull(&h_fit, &cost, cfg.step)?.pair,
    };

    // test side: score the held-out fold with the full training set and read
    // the fitted band off the test fold's own hull
    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] != fold).collect();
    let test_idx: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] == fold).collect();
    let s_te = knn_score(&ds.subset(&train_idx)?, &ds.subset(&test_idx)?, cfg.k)?;
    let h_te = convex_hull(&build_roc(&s_te)?);
    Ok(score_band_on_hull(&h_te, s_te.r_pos(), &pair, &cfg.method, repeat, fold))
}

fn score_band_on_hull(
    h_te: &RocchCurve,
    r_pos: f64,
    pair: &ThresholdPair,
    method: &Method,
    repeat: usize,
    fold: usize,
) -> CellResult {
    let (x1, x2) = (pair.x1, pair.x2);
    let (f1, _) = evaluate_f(h_te, x1);
    let (f2, _) = evaluate_f(h_te, x2);
    let rnr = x1 - x2;
    let rpr = f1 - f2;
    let denom = f2 + 1.0 - f1;
    let sen = if denom > 0.0 { f2 / denom } else { 0.0 };
    let auc = hull_abstention_auc(h_te, x1, x2);
    let cost = match method {
        Method::Ba2 { .. } => None,
        Method::Ba { cost_ratio, .. } => Some(cost_ratio * (1.0 - r_pos) * x2 + r_pos * (1.0 - f1)),
        Method::Ro { cost } => Some(eq6_geometric_cost(cost, r_pos, x1, f1, x2, f2)),
    };
    CellResult { repeat, fold, auc, sen, rpr, rnr, cost }
}

fn annotate(e: Error, repeat: usize, fold: usize) -> Error {
    let tag = format!("repeat {repeat} fold {fold}");
    match e {
        Error::Config(m) => Error::Config(format!("{tag}: {m}")),
        Error::Data(m) => Error::Data(format!("{tag}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{tag}: {m}")),
        Error::Io(e) => Error::Io(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown table format {other:?} (use csv or markdown)"))),
        }
    }
}

/// One summary row per experiment, means over all cells, four decimals.
pub fn emit_table(results: &[ExperimentResult], format: TableFormat) -> String {
    let header = ["dataset", "method", "params", "auc", "sen", "rpr", "rnr", "cost"];
    let rows: Vec<[String; 8]> = results
        .iter()
        .map(|r| {
            [
                r.dataset.clone(),
                r.method.clone(),
                r.params.clone(),
                format!("{:.4}", r.mean_auc),
                format!("{:.4}", r.mean_sen),
                format!("{:.4}", r.mean_rpr),
                format!("{:.4}", r.mean_rnr),
                r.mean_cost.map(|c| format!("{c:.4}")).unwrap_or_default(),
            ]
        })
        .collect();
    match format {
        TableFormat::Csv => {
            let mut out = header.join(",");
            out.push('\n');
            for row in &rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for row in &rows {
                let cells: Vec<&str> = row.iter().map(|c| if c.is_empty() { "-" } else { c.as_str() }).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            out
        }
    }
}

/// Long-format per-cell rows, four decimals.
pub fn emit_folds_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("dataset,method,params,repeat,fold,auc,sen,rpr,rnr,cost\n");
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{}\n",
            result.dataset,
            result.method,
            result.params,
            c.repeat,
            c.fold,
            c.auc,
            c.sen,
            c.rpr,
            c.rnr,
            c.cost.map(|v| format!("{v:.4}")).unwrap_or_default(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn separable_csv() -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        let mut text = String::from("a,b,label\n");
        for i in 0..24 {
            text.push_str(&format!("{},{},p\n", 1.0 + (i % 7) as f64 * 0.03, 2.0 + (i % 5) as f64 * 0.02));
        }
        for i in 0..48 {
            text.push_str(&format!("{},{},n\n", -1.0 - (i % 7) as f64 * 0.03, -2.0 - (i % 5) as f64 * 0.02));
        }
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn base_config(dataset: PathBuf, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset,
            format: None,
            positive_label: None,
            method,
            folds: 3,
            repeats: 1,
            seed: 5,
            k: 3,
            step: 0.01,
            n_samples: 101,
        }
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let f = separable_csv();
        let cfg = base_config(f.path().into(), Method::Ba2 { p_max: 0.1, n_max: 0.1 });
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.cells.len(), 3);
        assert!(res.mean_auc > 0.999, "auc {}", res.mean_auc);
        assert!(res.mean_sen > 0.999, "sen {}", res.mean_sen);
        assert!(res.mean_rpr.abs() < 1e-9);
        assert!(res.mean_rnr <= 0.1 + 1e-9);
        assert!(res.mean_cost.is_none());
    }

    #[test]
    fn reruns_are_identical() {
        let f = separable_csv();
        let cfg = base_config(
            f.path().into(),
            Method::Ro { cost: CostSpec { ctp: 0.0, cfp: 1.0, ctn: 0.0, cfn: 1.0, cr: 0.2 } },
        );
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(emit_folds_csv(&a), emit_folds_csv(&b));
        assert!(a.mean_cost.is_some());
    }

    #[test]
    fn ba_method_reports_cost() {
        let f = separable_csv();
        let cfg = base_config(f.path().into(), Method::Ba { cost_ratio: 1.0, k_max: 0.2 });
        let res = run_experiment(&cfg).unwrap();
        // perfectly separable: no misclassification mass at the optimum
        assert!(res.mean_cost.unwrap() < 0.25);
    }

    #[test]
    fn config_rejects_bad_values() {
        let ok = base_config("x.csv".into(), Method::Ba2 { p_max: 0.1, n_max: 0.1 });
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.folds = 2;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.repeats = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.k = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.step = 0.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.n_samples = 1;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.method = Method::Ba2 { p_max: 1.5, n_max: 0.1 };
        assert!(c.validate().is_err());
        let mut c = ok;
        c.method = Method::Ba { cost_ratio: -1.0, k_max: 0.2 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn table_formats_render_means() {
        let res = ExperimentResult {
            dataset: "toy".into(),
            method: "ba2".into(),
            params: "pmax=0.10 nmax=0.20".into(),
            cells: vec![CellResult { repeat: 0, fold: 0, auc: 0.5, sen: 0.25, rpr: 0.1, rnr: 0.2, cost: None }],
            mean_auc: 0.12345,
            mean_sen: 0.5,
            mean_rpr: 0.1,
            mean_rnr: 0.2,
            mean_cost: None,
        };
        let csv = emit_table(std::slice::from_ref(&res), TableFormat::Csv);
        assert!(csv.starts_with("dataset,method,params,auc,sen,rpr,rnr,cost\n"));
        assert!(csv.contains("toy,ba2,pmax=0.10 nmax=0.20,0.1235,0.5000,0.1000,0.2000,\n"), "{csv}");
        let md = emit_table(std::slice::from_ref(&res), TableFormat::Markdown);
        assert!(md.contains("| toy | ba2 | pmax=0.10 nmax=0.20 | 0.1235 | 0.5000 | 0.1000 | 0.2000 | - |"), "{md}");
        let folds = emit_folds_csv(&res);
        assert!(folds.contains("toy,ba2,pmax=0.10 nmax=0.20,0,0,0.5000,0.2500,0.1000,0.2000,\n"), "{folds}");
    }
}
