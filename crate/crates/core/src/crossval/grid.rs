use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, Family, FoldPlan, Hyperparams, ModelSpec};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::scalar::Scalar;
use crate::tabular::matrix::FeatureMatrix;

/// Combinations of one learner family to compare under a shared fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub family: Family,
    /// Empty for logistic regression, which has no hyperparameters.
    #[serde(default)]
    pub combos: Vec<Hyperparams>,
    pub metric: Metric,
    pub seed: u64,
}

impl SearchGrid {
    /// The combinations actually evaluated.
    pub fn cells(&self) -> Result<Vec<Hyperparams>> {
        if self.combos.is_empty() {
            return match self.family {
                Family::Logit => Ok(vec![Hyperparams::Logit]),
                f => Err(Error::Config(format!("{f} grid has no combinations"))),
            };
        }
        if let Some(bad) = self.combos.iter().find(|c| c.family() != self.family) {
            return Err(Error::Config(format!("{} combination in a {} grid", bad.family(), self.family)));
        }
        Ok(self.combos.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// 1-based rank; failed combinations rank last.
    pub rank: usize,
    /// Position in the grid.
    pub index: usize,
    pub params: Hyperparams,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub brier: Option<f64>,
    pub error: Option<String>,
}

impl LeaderboardEntry {
    pub fn score(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Auc => self.auc,
            Metric::Ap => self.ap,
            Metric::Brier => self.brier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: Hyperparams,
    pub metric: Metric,
    pub leaderboard: Vec<LeaderboardEntry>,
}

/// Sorts by the selection metric (best first), ties by grid position, with
/// failures last.
pub(crate) fn rank_entries(entries: &mut [LeaderboardEntry], metric: Metric) {
    entries.sort_by(|a, b| {
        let key = |e: &LeaderboardEntry| e.score(metric).map(|s| if metric.higher_is_better() { -s } else { s });
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
}

/// Cross-validates every combination on the same plan. A combination that
/// fails is recorded on the leaderboard and skipped; the search fails only
/// when every combination fails.
pub fn grid_search<T: Scalar>(grid: &SearchGrid, m: &FeatureMatrix<T>, plan: &FoldPlan) -> Result<GridOutcome> {
    let cells = grid.cells()?;
    let mut entries: Vec<LeaderboardEntry> = cells
        .par_iter()
        .enumerate()
        .map(|(index, &params)| {
            let spec = ModelSpec { params, seed: grid.seed };
            let mut entry = LeaderboardEntry { rank: 0, index, params, auc: None, ap: None, brier: None, error: None };
            match cross_validate(&spec, m, plan) {
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
    rank_entries(&mut entries, grid.metric);
    let first = &entries[0];
    if first.error.is_some() {
        return Err(Error::Config(format!(
            "every {} combination failed; first error: {}",
            grid.family,
            first.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(GridOutcome { best: first.params, metric: grid.metric, leaderboard: entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxmargin::KernelSpec;

    #[test]
    fn ranking_uses_index_for_ties_and_puts_failures_last() {
        let e = |index, ap: Option<f64>| LeaderboardEntry {
            rank: 0,
            index,
            params: Hyperparams::Logit,
            auc: ap,
            ap,
            brier: ap.map(|v| 1.0 - v),
            error: if ap.is_none() { Some("boom".into()) } else { None },
        };
        let mut entries = vec![e(0, None), e(1, Some(0.4)), e(2, Some(0.6)), e(3, Some(0.6))];
        rank_entries(&mut entries, Metric::Ap);
        assert_eq!(entries.iter().map(|x| x.index).collect::<Vec<_>>(), [2, 3, 1, 0]);
        rank_entries(&mut entries, Metric::Brier);
        assert_eq!(entries.iter().map(|x| x.index).collect::<Vec<_>>(), [2, 3, 1, 0]);
        assert_eq!(entries[3].rank, 4);
    }

    #[test]
    fn grid_family_checked() {
        let grid = SearchGrid {
            family: Family::Forest,
            combos: vec![Hyperparams::Svm { kernel: KernelSpec::Linear, c: 1.0 }],
            metric: Metric::Ap,
            seed: 0,
        };
        assert!(matches!(grid.cells(), Err(Error::Config(_))));
        let empty = SearchGrid { family: Family::Logit, combos: vec![], metric: Metric::Ap, seed: 0 };
        assert_eq!(empty.cells().unwrap(), vec![Hyperparams::Logit]);
    }
}
