//! Abstaining binary classification on ROC convex hulls.
//!
//! A scored classifier is turned into an abstaining one by a pair of
//! thresholds: scores above the upper threshold are called positive, scores
//! below the lower one negative, and everything in between is rejected.
//! This crate builds ROC curves and their convex hulls from scores, fits the
//! threshold band either under per-class reject-rate bounds (maximizing the
//! AUC of the accepted region) or by expected-cost minimization, and runs
//! repeated cross-validation experiments on labeled datasets with a k-NN
//! scorer.

pub mod abstain;
pub mod costmodel;
pub mod data;
pub mod error;
pub mod experiment;
pub mod roc;
pub mod scorer;
pub mod synth;

pub use abstain::{
    abstention_auc, ba2_exhaustive, ba2_search, ba_search, evaluate, predict, ro_search,
    AbstentionReport, Ba2Result, BaConfig, Decision, RoResult, SearchConfig, ThresholdPair,
};
pub use costmodel::{compare_methods, sample_cost, total_cost, CompareReport, CostModel, CostSpec};
pub use data::{infer_format, load_dataset, make_cv_plan, CvPlan, DataFormat, LabeledDataset};
pub use error::{Error, Result};
pub use experiment::{emit_folds_csv, emit_table, run_experiment, ExperimentConfig, ExperimentResult, Method, TableFormat};
pub use roc::{auc, average_curves, build_roc, convex_hull, evaluate_f, hull_abstention_auc, RocCurve, RocPoint, RocchCurve};
pub use scorer::{knn_score, load_scores, ScoreSet};
