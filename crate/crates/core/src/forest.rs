//! Random forest of Gini classification trees with case-fraction leaves.
//!
//! Each tree is grown on a bootstrap sample drawn from its own random
//! stream (stream `t` of the forest seed), so the fitted forest does not
//! depend on build order or on whether trees are grown in parallel.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_row, RiskModel};
use crate::scalar::Scalar;
use crate::tabular::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Predictors sampled at each split.
    pub mtry: usize,
    /// Minimal terminal-node size.
    pub node_size: usize,
    pub seed: u64,
}

impl ForestConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        if self.mtry == 0 || self.mtry > n_features {
            return Err(Error::Config(format!("mtry must be in 1..={n_features}, got {}", self.mtry)));
        }
        if self.node_size == 0 {
            return Err(Error::Config("node_size must be positive".into()));
        }
        Ok(())
    }
}

/// One node of a tree stored in a flat arena; children are arena indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node<T> {
    /// Rows with `x[feature] < threshold` go left.
    Split { feature: usize, threshold: T, left: usize, right: usize },
    Leaf { fraction: T, count: usize },
}

/// A fitted tree; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    /// The leaf reached by `row`.
    pub fn leaf(&self, row: &[T]) -> &Node<T> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] < *threshold { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, row: &[T]) -> T {
        match self.leaf(row) {
            Node::Leaf { fraction, .. } => *fraction,
            Node::Split { .. } => unreachable!("routing ends at a leaf"),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// How each tree's training rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `n` rows with replacement.
    #[default]
    Bootstrap,
    /// Every row exactly once.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestOptions {
    pub sampling: Sampling,
    pub parallel: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self { sampling: Sampling::Bootstrap, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<T> {
    pub trees: Vec<Tree<T>>,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
}

impl<T: Scalar> ForestModel<T> {
    /// Leaf case fraction reached in each tree.
    pub fn tree_risks(&self, row: &[T]) -> Result<Vec<T>> {
        check_row(self.feature_names.len(), row)?;
        Ok(self.trees.iter().map(|t| t.predict(row)).collect())
    }
}

impl<T: Scalar> RiskModel<T> for ForestModel<T> {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        let risks = self.tree_risks(row)?;
        Ok(risks.iter().copied().sum::<T>() / T::from_count(risks.len()))
    }
}

/// Node impurity scaled by node size: `c(n−c)/n`, i.e. `n·gini/2`.
#[inline]
fn scaled_gini(cases: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (cases * (n - cases)) as f64 / n as f64
    }
}

/// Best split of `rows` over `features`: `(score, feature, threshold)` where
/// score is the summed scaled Gini of the two children. Both children must
/// hold at least `node_size` rows. Ties go to the lower feature, then the
/// lower threshold.
pub fn best_split<T: Scalar>(
    m: &FeatureMatrix<T>,
    rows: &[usize],
    features: &[usize],
    node_size: usize,
) -> Option<(f64, usize, T)> {
    let n = rows.len();
    let total_cases = rows.iter().filter(|&&r| m.labels()[r]).count();
    let mut best: Option<(f64, usize, T)> = None;
    let mut order: Vec<(T, bool)> = Vec::with_capacity(n);
    for &f in features {
        order.clear();
        order.extend(rows.iter().map(|&r| (m.value(r, f), m.labels()[r])));
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        let mut left_cases = 0;
        for i in 1..n {
            left_cases += usize::from(order[i - 1].1);
            let (lo, hi) = (order[i - 1].0, order[i].0);
            if lo == hi || i < node_size || n - i < node_size {
                continue;
            }
            let score = scaled_gini(left_cases, i) + scaled_gini(total_cases - left_cases, n - i);
            if best.map_or(true, |(s, _, _)| score < s) {
                let mut threshold = (lo + hi) / T::of(2.0);
                if threshold <= lo {
                    threshold = hi;
                }
                best = Some((score, f, threshold));
            }
        }
    }
    best
}

/// Grows one tree on `rows` (a multiset of row indices).
pub fn fit_tree<T: Scalar>(m: &FeatureMatrix<T>, rows: Vec<usize>, config: &ForestConfig, rng: &mut ChaCha8Rng) -> Tree<T> {
    let k = m.n_features();
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { fraction: T::zero(), count: 0 }];
    let mut stack = vec![(0usize, rows)];
    while let Some((at, rows)) = stack.pop() {
        let n = rows.len();
        let cases = rows.iter().filter(|&&r| m.labels()[r]).count();
        let leaf = Node::Leaf { fraction: T::from_count(cases) / T::from_count(n.max(1)), count: n };
        if cases == 0 || cases == n || n < 2 * config.node_size {
            nodes[at] = leaf;
            continue;
        }
        let mut features = sample(rng, k, config.mtry).into_vec();
        features.sort_unstable();
        let parent = scaled_gini(cases, n);
        match best_split(m, &rows, &features, config.node_size) {
            Some((score, feature, threshold)) if score < parent - 1e-12 => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| m.value(i, feature) < threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { fraction: T::zero(), count: 0 });
                nodes.push(Node::Leaf { fraction: T::zero(), count: 0 });
                nodes[at] = Node::Split { feature, threshold, left, right: left + 1 };
                stack.push((left + 1, r));
                stack.push((left, l));
            }
            _ => nodes[at] = leaf,
        }
    }
    Tree { nodes }
}

/// Random stream for tree `t` of a forest seeded with `seed`.
pub fn tree_stream(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

/// Row multiset for one tree.
pub fn draw_rows(n: usize, sampling: Sampling, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match sampling {
        Sampling::Bootstrap => (0..n).map(|_| rng.gen_range(0..n)).collect(),
        Sampling::Identity => (0..n).collect(),
    }
}

pub fn fit_forest<T: Scalar>(m: &FeatureMatrix<T>, config: &ForestConfig) -> Result<ForestModel<T>> {
    fit_forest_with(m, config, &ForestOptions::default())
}

pub fn fit_forest_with<T: Scalar>(
    m: &FeatureMatrix<T>,
    config: &ForestConfig,
    opts: &ForestOptions,
) -> Result<ForestModel<T>> {
    config.validate(m.n_features())?;
    if m.n_rows() == 0 {
        return Err(Error::Label("cannot grow a forest on zero rows".into()));
    }
    let grow = |t: usize| {
        let mut rng = tree_stream(config.seed, t);
        let rows = draw_rows(m.n_rows(), opts.sampling, &mut rng);
        fit_tree(m, rows, config, &mut rng)
    };
    let trees = if opts.parallel {
        (0..config.n_trees).into_par_iter().map(grow).collect()
    } else {
        (0..config.n_trees).map(grow).collect()
    };
    Ok(ForestModel { trees, config: *config, feature_names: m.feature_names().to_vec() })
}

/// Tuning grid: n_trees ∈ {250, 500, 1000}, mtry ∈ {⌈√k⌉, ⌈k/2⌉, k},
/// node_size ∈ {5, 10, 15}. Duplicate mtry values are dropped.
pub fn default_grid(n_features: usize, seed: u64) -> Vec<ForestConfig> {
    let k = n_features.max(1);
    let mut mtrys = vec![(k as f64).sqrt().ceil() as usize, k.div_ceil(2), k];
    mtrys.sort_unstable();
    mtrys.dedup();
    let mut grid = Vec::new();
    for n_trees in [250, 500, 1000] {
        for &mtry in &mtrys {
            for node_size in [5, 10, 15] {
                grid.push(ForestConfig { n_trees, mtry, node_size, seed });
            }
        }
    }
    grid
}
