use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `n` records to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// 0-based fold of each record.
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    /// Row indices outside and inside `fold`, each ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// Writes `record_id,fold` with 1-based folds.
    pub fn write_csv<W: Write>(&self, writer: W, ids: &[String]) -> Result<()> {
        if ids.len() != self.assignments.len() {
            return Err(Error::Shape { expected: self.assignments.len(), found: ids.len() });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["record_id", "fold"])?;
        for (id, f) in ids.iter().zip(&self.assignments) {
            w.write_record([id.as_str(), &(f + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seeded shuffle followed by round-robin assignment. With labels, cases
/// and non-cases are shuffled separately and dealt in turn (cases first,
/// the non-cases continuing the same counter), so both the fold sizes and
/// the per-fold case counts differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64, stratify: Option<&[bool]>) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("need 2 <= k <= n for k-fold splitting (k = {k}, n = {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match stratify {
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::Shape { expected: n, found: labels.len() });
            }
            let mut cases: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
            let mut controls: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
            cases.shuffle(&mut rng);
            controls.shuffle(&mut rng);
            cases.into_iter().chain(controls).collect()
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        }
    };
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed, stratified: stratify.is_some() })
}
