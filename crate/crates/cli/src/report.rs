//! Evaluation reports: metrics with intervals, curves and the pooled scores
//! they were computed from.

use std::collections::BTreeMap;
use std::path::Path;

use riskkit::crossval::{FoldMeta, Hyperparams};
use riskkit::metrics::{evaluate, BootstrapSpec, Evaluation, Metric, ScoredSample};
use riskkit::CvResult;
use serde::{Deserialize, Serialize};

use crate::error::{Context, Result};
use crate::source::{write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// Pooled held-out predictions of k-fold cross-validation.
    CrossValidation,
    /// Predictions of the final model on its own training rows.
    Apparent,
    /// Predictions of an exported model on an independent cohort.
    External,
}

impl ReportKind {
    pub fn describe(self) -> &'static str {
        match self {
            ReportKind::CrossValidation => "cross-validation",
            ReportKind::Apparent => "apparent",
            ReportKind::External => "external",
        }
    }
}

/// Settings echoed so every number can be traced and reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub seed: u64,
    pub k: Option<usize>,
    pub stratified: Option<bool>,
    pub bootstrap: Option<BootstrapSpec>,
    pub predictors: Vec<String>,
    pub interactions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub kind: ReportKind,
    pub label: String,
    pub params: Option<Hyperparams>,
    /// Rendered point estimates, e.g. `"AUC": "0.82 (0.78, 0.85)"`.
    pub summary: BTreeMap<String, String>,
    pub evaluation: Evaluation<f64>,
    #[serde(default)]
    pub folds: Vec<FoldMeta>,
    pub echo: RunEcho,
    pub pooled: ScoredSample<f64>,
    /// Fold of each pooled record (1-based), for cross-validation reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fold_of: Vec<usize>,
}

pub fn summarize(e: &Evaluation<f64>) -> BTreeMap<String, String> {
    [Metric::Auc, Metric::Ap, Metric::Brier]
        .into_iter()
        .map(|m| {
            let text = match e.interval(m) {
                Some(i) => i.render(),
                None => format!("{:.2}", e.metric(m)),
            };
            (m.label().to_string(), text)
        })
        .collect()
}

impl EvaluationReport {
    pub fn from_cv(label: String, params: Hyperparams, cv: CvResult, fold_of: Vec<usize>, echo: RunEcho) -> Self {
        Self {
            kind: ReportKind::CrossValidation,
            label,
            params: Some(params),
            summary: summarize(&cv.evaluation),
            evaluation: cv.evaluation,
            folds: cv.folds,
            echo,
            pooled: cv.pooled,
            fold_of,
        }
    }

    pub fn from_sample(
        kind: ReportKind,
        label: String,
        params: Option<Hyperparams>,
        sample: ScoredSample<f64>,
        echo: RunEcho,
    ) -> riskkit::Result<Self> {
        let evaluation = evaluate(&sample, echo.bootstrap)?;
        Ok(Self {
            kind,
            label,
            params,
            summary: summarize(&evaluation),
            evaluation,
            folds: Vec::new(),
            echo,
            pooled: sample,
            fold_of: Vec::new(),
        })
    }

    /// Legend text, e.g. `logit (external)`.
    pub fn legend(&self) -> String {
        format!("{} ({})", self.label, self.kind.describe())
    }

    /// Writes `report.json`, the three curve CSVs and `predictions.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("report.json"), self)?;
        let e = &self.evaluation;
        let curves = [
            (&e.roc, "roc.csv", "fpr", "tpr"),
            (&e.pr, "pr.csv", "recall", "precision"),
            (&e.calibration, "calibration.csv", "observed", "predicted"),
        ];
        for (curve, file, x, y) in curves {
            let path = dir.join(file);
            curve.write_csv(crate::source::create(&path)?, x, y).context(path.display())?;
        }
        let ids: Vec<String> = match self.pooled.ids() {
            Some(ids) => ids.to_vec(),
            None => (1..=self.pooled.len()).map(|i| i.to_string()).collect(),
        };
        let with_fold = !self.fold_of.is_empty();
        let header: &[&str] = if with_fold { &["record_id", "label", "risk", "fold"] } else { &["record_id", "label", "risk"] };
        let rows = (0..self.pooled.len()).map(|i| {
            let mut row = vec![
                ids[i].clone(),
                u8::from(self.pooled.labels()[i]).to_string(),
                self.pooled.scores()[i].to_string(),
            ];
            if with_fold {
                row.push(self.fold_of[i].to_string());
            }
            row
        });
        write_csv(&dir.join("predictions.csv"), header, rows)
    }
}
