//! K-fold cross-validation with pooled out-of-fold predictions, grid search,
//! predictor screening and stratified partial dependence.

mod folds;
mod grid;
mod learner;
mod pdp;
mod screen;

pub use folds::{make_folds, FoldPlan};
pub use grid::{grid_search, GridOutcome, LeaderboardEntry, SearchGrid};
pub use learner::{Family, Fitted, Hyperparams, Learner, ModelSpec};
pub use pdp::{partial_dependence, PartialDependence};
pub use screen::{enumerate_candidates, screen_predictors, Candidate, ScreenEntry, MAX_ENUMERATED};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, BootstrapSpec, Evaluation, ScoredSample};
use crate::scalar::Scalar;
use crate::tabular::matrix::FeatureMatrix;

/// Training and held-out sizes of one fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldMeta {
    /// 1-based fold number.
    pub fold: usize,
    pub n_train: usize,
    pub train_cases: usize,
    pub n_test: usize,
    pub test_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CvResult<T> {
    /// One held-out prediction per record, in matrix row order.
    pub pooled: ScoredSample<T>,
    pub folds: Vec<FoldMeta>,
    pub evaluation: Evaluation<T>,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

/// Cross-validates `learner` over `plan`, pooling every held-out prediction
/// before computing metrics.
pub fn cross_validate<T: Scalar, L: Learner<T> + ?Sized>(
    learner: &L,
    m: &FeatureMatrix<T>,
    plan: &FoldPlan,
) -> Result<CvResult<T>> {
    cross_validate_with(learner, m, plan, None)
}

/// As [`cross_validate`], adding bootstrap intervals to the pooled metrics.
pub fn cross_validate_with<T: Scalar, L: Learner<T> + ?Sized>(
    learner: &L,
    m: &FeatureMatrix<T>,
    plan: &FoldPlan,
    bootstrap: Option<BootstrapSpec>,
) -> Result<CvResult<T>> {
    if plan.assignments.len() != m.n_rows() {
        return Err(Error::Shape { expected: m.n_rows(), found: plan.assignments.len() });
    }
    let per_fold = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = plan.split(fold);
            let train_m = m.subset(&train);
            let train_cases = train_m.case_count();
            if train_cases == 0 || train_cases == train.len() {
                return Err(Error::StratificationRequired { fold: fold + 1 });
            }
            let model = learner.fit(&train_m)?;
            let preds = test.iter().map(|&r| model.predict_risk(m.row(r))).collect::<Result<Vec<T>>>()?;
            let meta = FoldMeta {
                fold: fold + 1,
                n_train: train.len(),
                train_cases,
                n_test: test.len(),
                test_cases: test.iter().filter(|&&r| m.labels()[r]).count(),
            };
            Ok((meta, test, preds))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = vec![T::nan(); m.n_rows()];
    let mut folds = Vec::with_capacity(plan.k);
    for (meta, test, preds) in per_fold {
        for (r, p) in test.into_iter().zip(preds) {
            scores[r] = p;
        }
        folds.push(meta);
    }
    let pooled = ScoredSample::new(m.labels().to_vec(), scores)?.with_ids(m.record_ids().to_vec())?;
    let evaluation = evaluate(&pooled, bootstrap)?;
    Ok(CvResult { pooled, folds, evaluation, k: plan.k, seed: plan.seed, stratified: plan.stratified })
}
