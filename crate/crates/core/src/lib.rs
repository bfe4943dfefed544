//! Binary-outcome risk modelling toolkit.
//!
//! The crate covers the whole model-building loop for a 0/1 outcome:
//!
//! * [`tabular`]: typed CSV ingestion under a data dictionary, key joins,
//!   rule-based logic checks and exclusions, and encoding into a
//!   [`FeatureMatrix`].
//! * [`logit`], [`maxmargin`], [`forest`]: logistic regression fitted by
//!   Newton/IRLS, a soft-margin kernel SVM solved by SMO with Platt
//!   scaling, and a Gini random forest with case-fraction leaves.
//! * [`metrics`]: AUC, average precision, Brier score, ROC/PR curves, the
//!   cumulative calibration curve and percentile bootstrap intervals.
//! * [`crossval`]: k-fold plans, pooled cross-validation, grid search,
//!   predictor screening and stratified partial dependence.
//! * [`synth`]: a seeded logistic cohort generator used as ground truth.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the pipeline uses.

pub mod crossval;
pub mod error;
pub mod forest;
pub mod linalg;
pub mod logit;
pub mod maxmargin;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod synth;
pub mod tabular;

pub use error::{Error, ErrorCategory, Result};
pub use model::RiskModel;
pub use scalar::Scalar;
pub use tabular::matrix::{FeatureMatrix, ProductColumn, Standardizer};

pub type Matrix = FeatureMatrix<f64>;
pub type Logistic = logit::LogisticModel<f64>;
pub type Svm = maxmargin::SvmModel<f64>;
pub type Forest = forest::ForestModel<f64>;
pub type Sample = metrics::ScoredSample<f64>;
pub type Curve = metrics::CurvePoints<f64>;
pub type Interval = metrics::IntervalEstimate<f64>;
pub type Evaluation = metrics::Evaluation<f64>;
pub type CvResult = crossval::CvResult<f64>;
