//! `abstain`: cross-validated abstaining-classification experiments and ROC
//! dumps on labeled datasets or precomputed score files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use abstain_core::{
    build_roc, compare_methods, convex_hull, emit_folds_csv, emit_table, knn_score, load_dataset,
    load_scores, run_experiment, CostModel, CostSpec, DataFormat, Error, ExperimentConfig, Method,
    TableFormat,
};

#[derive(Parser)]
#[command(name = "abstain", version, about = "Abstaining classification on ROC convex hulls")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cross-validate the two-bound band search (max AUC under per-class reject caps)
    RunBa2(RunBa2),
    /// Cross-validate the single-bound cost-ratio baseline
    RunBa(RunBa),
    /// Cross-validate the cost-minimizing reject-option baseline
    RunRo(RunRo),
    /// Monte-Carlo comparison of the two-bound search against the cost baseline
    CompareCostModels(CompareArgs),
    /// Dump a ROC curve (or its convex hull) as fpr,tpr,threshold CSV
    Roc(RocArgs),
}

/// Flags shared by the run-* commands. Everything is optional here so that a
/// `--config` file can fill the gaps; explicit flags win.
#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Labeled dataset (.csv, or KEEL .dat)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Input format: csv or keel (default: inferred from the extension)
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    /// Label value to treat as positive (default: the minority class)
    #[arg(long)]
    positive_label: Option<String>,
    /// Neighbor count of the k-NN scorer [default: 3]
    #[arg(long)]
    k: Option<usize>,
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    folds: Option<usize>,
    /// Cross-validation repeats [default: 10]
    #[arg(long)]
    repeats: Option<u64>,
    /// RNG seed for fold assignment [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Grid step of the band searches [default: 0.01]
    #[arg(long)]
    step: Option<f64>,
    /// Sample count for inner-curve averaging [default: 101]
    #[arg(long)]
    n_samples: Option<usize>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the summary table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table format: csv or markdown [default: csv]
    #[arg(long, value_parser = parse_table_format)]
    table_format: Option<TableFormat>,
    /// Also write one CSV row per cross-validation cell to this file
    #[arg(long)]
    folds_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunBa2 {
    #[command(flatten)]
    common: CommonArgs,
    /// Upper bound on the rejected-positive rate [default: 0.1]
    #[arg(long)]
    pmax: Option<f64>,
    /// Upper bound on the rejected-negative rate [default: 0.1]
    #[arg(long)]
    nmax: Option<f64>,
}

#[derive(Args)]
struct RunBa {
    #[command(flatten)]
    common: CommonArgs,
    /// False-positive cost in units of a false negative [default: 1.0]
    #[arg(long)]
    ratio: Option<f64>,
    /// Upper bound on the overall reject rate [default: 0.1]
    #[arg(long)]
    kmax: Option<f64>,
}

#[derive(Args)]
struct RunRo {
    #[command(flatten)]
    common: CommonArgs,
    /// Rejection cost; errors cost 1, correct decisions 0 [default: 1.0]
    #[arg(long)]
    cr: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Cost model: cm1, cm3 or cm4
    #[arg(long, value_parser = parse_model)]
    model: CostModel,
    /// Monte-Carlo trials
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// RNG seed for the fold split and the cost draws
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Labeled dataset; one fold is held out, the rest is scored against itself
    #[arg(long, conflicts_with_all = ["train_scores", "test_scores"])]
    dataset: Option<PathBuf>,
    /// Input format: csv or keel (default: inferred from the extension)
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    /// Label value to treat as positive (default: the minority class)
    #[arg(long)]
    positive_label: Option<String>,
    /// Neighbor count of the k-NN scorer
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Folds of the hold-out split (fold 0 becomes the test set)
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Precomputed training scores (score,label lines) instead of a dataset
    #[arg(long, requires = "test_scores")]
    train_scores: Option<PathBuf>,
    /// Precomputed test scores
    #[arg(long, requires = "train_scores")]
    test_scores: Option<PathBuf>,
    /// Write the tally CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    /// Labeled dataset to score against itself with k-NN
    #[arg(long, conflicts_with = "scores")]
    dataset: Option<PathBuf>,
    /// Precomputed scores (score,label lines) instead of a dataset
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Input format: csv or keel (default: inferred from the extension)
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    /// Label value to treat as positive (default: the minority class)
    #[arg(long)]
    positive_label: Option<String>,
    /// Neighbor count of the k-NN scorer
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Dump the convex hull instead of the raw curve
    #[arg(long)]
    hull: bool,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(DataFormat::Csv),
        "keel" | "dat" => Ok(DataFormat::KeelDat),
        other => Err(format!("unknown format {other:?} (use csv or keel)")),
    }
}

fn parse_table_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<CostModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// On-disk mirror of the run-* flags. Unknown keys are rejected so a typo
/// can't silently fall back to a default.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<PathBuf>,
    format: Option<String>,
    positive_label: Option<String>,
    k: Option<usize>,
    folds: Option<usize>,
    repeats: Option<u64>,
    seed: Option<u64>,
    step: Option<f64>,
    n_samples: Option<usize>,
    out: Option<PathBuf>,
    table_format: Option<String>,
    folds_out: Option<PathBuf>,
    pmax: Option<f64>,
    nmax: Option<f64>,
    ratio: Option<f64>,
    kmax: Option<f64>,
    cr: Option<f64>,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
    let Some(p) = path else { return Ok(ConfigFile::default()) };
    let text = std::fs::read_to_string(p)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
    let file = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad config {}: {e}", p.display())))?;
    Ok(file)
}

/// Common flags merged over the config file, with defaults filled in.
struct Resolved {
    dataset: PathBuf,
    format: Option<DataFormat>,
    positive_label: Option<String>,
    k: usize,
    folds: usize,
    repeats: usize,
    seed: u64,
    step: f64,
    n_samples: usize,
    out: Option<PathBuf>,
    table_format: TableFormat,
    folds_out: Option<PathBuf>,
}

fn resolve(args: &CommonArgs, file: &ConfigFile) -> anyhow::Result<Resolved> {
    let dataset = args
        .dataset
        .clone()
        .or_else(|| file.dataset.clone())
        .ok_or_else(|| Error::Config("--dataset is required (flag or config)".into()))?;
    let format = match (&args.format, &file.format) {
        (Some(f), _) => Some(*f),
        (None, Some(s)) => Some(parse_format(s).map_err(Error::Config)?),
        (None, None) => None,
    };
    let table_format = match (&args.table_format, &file.table_format) {
        (Some(t), _) => *t,
        (None, Some(s)) => parse_table_format(s).map_err(Error::Config)?,
        (None, None) => TableFormat::Csv,
    };
    Ok(Resolved {
        dataset,
        format,
        positive_label: args.positive_label.clone().or_else(|| file.positive_label.clone()),
        k: args.k.or(file.k).unwrap_or(3),
        folds: args.folds.or(file.folds).unwrap_or(10),
        repeats: args.repeats.or(file.repeats).unwrap_or(10) as usize,
        seed: args.seed.or(file.seed).unwrap_or(42),
        step: args.step.or(file.step).unwrap_or(0.01),
        n_samples: args.n_samples.or(file.n_samples).unwrap_or(101),
        out: args.out.clone().or_else(|| file.out.clone()),
        table_format,
        folds_out: args.folds_out.clone().or_else(|| file.folds_out.clone()),
    })
}

fn run_cv(common: &CommonArgs, method: impl FnOnce(&ConfigFile) -> Method) -> anyhow::Result<()> {
    let file = load_config(common.config.as_deref())?;
    let r = resolve(common, &file)?;
    let cfg = ExperimentConfig {
        dataset: r.dataset,
        format: r.format,
        positive_label: r.positive_label,
        method: method(&file),
        folds: r.folds,
        repeats: r.repeats,
        seed: r.seed,
        k: r.k,
        step: r.step,
        n_samples: r.n_samples,
    };
    let res = run_experiment(&cfg)?;
    write_out(r.out.as_deref(), &emit_table(std::slice::from_ref(&res), r.table_format))?;
    if let Some(p) = &r.folds_out {
        std::fs::write(p, emit_folds_csv(&res)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> anyhow::Result<()> {
    let (s_train, s_test) = match (&args.dataset, &args.train_scores, &args.test_scores) {
        (Some(ds_path), None, None) => {
            let format = args.format.unwrap_or_else(|| abstain_core::infer_format(ds_path));
            let ds = load_dataset(ds_path, format, args.positive_label.as_deref())?;
            let plan = abstain_core::make_cv_plan(&ds, args.folds, 1, args.seed)?;
            let (train_idx, test_idx) = plan.split(0, 0);
            let train = ds.subset(&train_idx)?;
            let test = ds.subset(&test_idx)?;
            // training scores are resubstitution scores: the band is fitted
            // on the same examples the scorer was built from
            (knn_score(&train, &train, args.k)?, knn_score(&train, &test, args.k)?)
        }
        (None, Some(tr), Some(te)) => (load_scores(tr)?, load_scores(te)?),
        _ => {
            return Err(Error::Config(
                "give either --dataset or both --train-scores and --test-scores".into(),
            )
            .into())
        }
    };
    let rep = compare_methods(&s_train, &s_test, args.model, args.trials, args.seed)?;
    let mut out = String::from("model,metric,higher,lower,identical\n");
    out.push_str(&format!(
        "{},cost,{},{},{}\n",
        rep.model.name(),
        rep.cost.higher,
        rep.cost.lower,
        rep.cost.identical
    ));
    out.push_str(&format!(
        "{},auc,{},{},{}\n",
        rep.model.name(),
        rep.auc.higher,
        rep.auc.lower,
        rep.auc.identical
    ));
    write_out(args.out.as_deref(), &out)?;
    eprintln!(
        "bounds from mean test reject rates: p_max={:.4} n_max={:.4}",
        rep.p_max, rep.n_max
    );
    eprintln!("trials without applicable rejection: {}", rep.not_applicable);
    eprintln!(
        "cost rank sum of the bounded search over {} applicable trials: {:.1}",
        rep.n_trials - rep.not_applicable,
        rep.cost_rank_sum
    );
    Ok(())
}

fn run_roc(args: &RocArgs) -> anyhow::Result<()> {
    let scores = match (&args.dataset, &args.scores) {
        (Some(ds_path), None) => {
            let format = args.format.unwrap_or_else(|| abstain_core::infer_format(ds_path));
            let ds = load_dataset(ds_path, format, args.positive_label.as_deref())?;
            knn_score(&ds, &ds, args.k)?
        }
        (None, Some(path)) => load_scores(path)?,
        _ => return Err(Error::Config("give either --dataset or --scores".into()).into()),
    };
    let curve = build_roc(&scores)?;
    let points = if args.hull { convex_hull(&curve).points } else { curve.points };
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &points {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    write_out(args.out.as_deref(), &out)
}

fn write_out(path: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::RunBa2(a) => run_cv(&a.common, |f| Method::Ba2 {
            p_max: a.pmax.or(f.pmax).unwrap_or(0.1),
            n_max: a.nmax.or(f.nmax).unwrap_or(0.1),
        }),
        Cmd::RunBa(a) => run_cv(&a.common, |f| Method::Ba {
            cost_ratio: a.ratio.or(f.ratio).unwrap_or(1.0),
            k_max: a.kmax.or(f.kmax).unwrap_or(0.1),
        }),
        Cmd::RunRo(a) => run_cv(&a.common, |f| {
            // unit error costs, free correct decisions: only the rejection
            // price is tunable here
            let cr = a.cr.or(f.cr).unwrap_or(1.0);
            Method::Ro { cost: CostSpec { ctp: 0.0, cfp: 1.0, ctn: 0.0, cfn: 1.0, cr } }
        }),
        Cmd::CompareCostModels(a) => run_compare(&a),
        Cmd::Roc(a) => run_roc(&a),
    }
}

/// 0 = success, 2 = usage or config error, 3 = data or runtime failure.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
