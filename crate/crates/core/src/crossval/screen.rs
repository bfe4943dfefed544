use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, FoldPlan, Learner};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::scalar::Scalar;
use crate::tabular::matrix::FeatureMatrix;

/// Largest number of subsets enumerated without an explicit override.
pub const MAX_ENUMERATED: usize = 4095;

/// A predictor set with its interaction terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub predictors: Vec<String>,
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
}

impl Candidate {
    /// Every interaction needs both of its parents among the predictors.
    pub fn check_hierarchy(&self) -> Result<()> {
        for (a, b) in &self.interactions {
            for parent in [a, b] {
                if !self.predictors.contains(parent) {
                    return Err(Error::Config(format!(
                        "interaction {a}*{b} needs main effect `{parent}` in the same predictor set"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let mut terms = self.predictors.clone();
        terms.extend(self.interactions.iter().map(|(a, b)| format!("{a}*{b}")));
        terms.join(" + ")
    }
}

/// All non-empty subsets of `base` predictors and `interactions` terms that
/// respect the hierarchy rule, in binary-counting order. The raw number of
/// term subsets is capped at [`MAX_ENUMERATED`] unless `allow_large`.
pub fn enumerate_candidates(
    base: &[String],
    interactions: &[(String, String)],
    allow_large: bool,
) -> Result<Vec<Candidate>> {
    let terms = base.len() + interactions.len();
    if terms == 0 {
        return Err(Error::Config("nothing to enumerate: no predictors given".into()));
    }
    let total = if terms >= 64 { usize::MAX } else { (1usize << terms) - 1 };
    if total > MAX_ENUMERATED && !allow_large {
        return Err(Error::Config(format!(
            "{terms} terms give {total} subsets, above the limit of {MAX_ENUMERATED}; pass the override to proceed"
        )));
    }
    let mut out = Vec::new();
    for mask in 1..=total {
        let predictors: Vec<String> =
            base.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone()).collect();
        let chosen: Vec<(String, String)> = interactions
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> (base.len() + i) & 1 == 1)
            .map(|(_, t)| t.clone())
            .collect();
        let candidate = Candidate { predictors, interactions: chosen };
        if !candidate.predictors.is_empty() && candidate.check_hierarchy().is_ok() {
            out.push(candidate);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenEntry {
    pub rank: usize,
    pub index: usize,
    pub candidate: Candidate,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub brier: Option<f64>,
    pub error: Option<String>,
}

impl ScreenEntry {
    pub fn score(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Auc => self.auc,
            Metric::Ap => self.ap,
            Metric::Brier => self.brier,
        }
    }
}

/// Cross-validates `learner` on each candidate's matrix under the shared
/// plan and returns the leaderboard, best first.
pub fn screen_predictors<T, L, B>(
    candidates: &[Candidate],
    learner: &L,
    build: B,
    plan: &FoldPlan,
    metric: Metric,
) -> Result<Vec<ScreenEntry>>
where
    T: Scalar,
    L: Learner<T> + ?Sized,
    B: Fn(&Candidate) -> Result<FeatureMatrix<T>> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::Config("no candidate predictor sets".into()));
    }
    for c in candidates {
        c.check_hierarchy()?;
    }
    let mut entries: Vec<ScreenEntry> = candidates
        .par_iter()
        .enumerate()
        .map(|(index, candidate)| {
            let mut entry = ScreenEntry {
                rank: 0,
                index,
                candidate: candidate.clone(),
                auc: None,
                ap: None,
                brier: None,
                error: None,
            };
            match build(candidate).and_then(|m| cross_validate(learner, &m, plan)) {
                Ok(cv) => {
                    entry.auc = Some(cv.evaluation.auc.as_f64());
                    entry.ap = Some(cv.evaluation.ap.as_f64());
                    entry.brier = Some(cv.evaluation.brier.as_f64());
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            entry
        })
        .collect();
    entries.sort_by(|a, b| {
        let key = |e: &ScreenEntry| e.score(metric).map(|s| if metric.higher_is_better() { -s } else { s });
        match (key(a), key(b)) {
            (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.index.cmp(&b.index),
        }
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    if entries[0].error.is_some() {
        return Err(Error::Config(format!(
            "every candidate failed; first error: {}",
            entries[0].error.as_deref().unwrap_or_default()
        )));
    }
    Ok(entries)
}
