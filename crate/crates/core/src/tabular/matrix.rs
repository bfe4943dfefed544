use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Records that `column` holds the elementwise product of `left` and `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductColumn {
    pub column: usize,
    pub left: usize,
    pub right: usize,
}

/// Encoded numeric design matrix (row-major) with its 0/1 outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    feature_names: Vec<String>,
    x: Vec<T>,
    labels: Vec<bool>,
    record_ids: Vec<String>,
    products: Vec<ProductColumn>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(feature_names: Vec<String>, x: Vec<T>, labels: Vec<bool>, record_ids: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let k = feature_names.len();
        if x.len() != n * k {
            return Err(Error::Schema(format!("matrix has {} cells, expected {n}×{k}", x.len())));
        }
        if record_ids.len() != n {
            return Err(Error::Schema(format!("{} record ids for {n} rows", record_ids.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in row {}, column {}", i / k.max(1), i % k.max(1))));
        }
        Ok(Self { feature_names, x, labels, record_ids, products: Vec::new() })
    }

    /// Builds a matrix from rows; record ids default to 1-based row numbers.
    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<T>], labels: Vec<bool>) -> Result<Self> {
        let k = feature_names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::Shape { expected: k, found: r.len() });
        }
        let ids = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::new(feature_names, rows.concat(), labels, ids)
    }

    pub fn with_products(mut self, products: Vec<ProductColumn>) -> Result<Self> {
        let k = self.n_features();
        if products.iter().any(|p| p.column >= k || p.left >= k || p.right >= k) {
            return Err(Error::Schema("product column index out of range".into()));
        }
        self.products = products;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn record_ids(&self) -> &[String] {
        &self.record_ids
    }

    pub fn products(&self) -> &[ProductColumn] {
        &self.products
    }

    pub fn data(&self) -> &[T] {
        &self.x
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        let k = self.n_features();
        &self.x[i * k..(i + 1) * k]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> T {
        self.x[i * self.n_features() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        let k = self.n_features().max(1);
        self.x.chunks(k).take(self.n_rows())
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn case_count(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// Fails with a label error unless both outcome classes occur.
    pub fn require_both_classes(&self) -> Result<()> {
        let cases = self.case_count();
        if cases == 0 || cases == self.n_rows() {
            return Err(Error::Label(format!(
                "fitting needs both classes; got {cases} cases among {} rows",
                self.n_rows()
            )));
        }
        Ok(())
    }

    /// Rows in the given order (indices may repeat).
    pub fn subset(&self, rows: &[usize]) -> Self {
        let k = self.n_features();
        let mut x = Vec::with_capacity(rows.len() * k);
        for &r in rows {
            x.extend_from_slice(self.row(r));
        }
        Self {
            feature_names: self.feature_names.clone(),
            x,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            record_ids: rows.iter().map(|&r| self.record_ids[r].clone()).collect(),
            products: self.products.clone(),
        }
    }

    /// Keeps the named columns, in the given order. Product metadata is kept
    /// for products whose three columns all survive.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.feature_index(n).ok_or_else(|| Error::Schema(format!("unknown feature `{n}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut x = Vec::with_capacity(self.n_rows() * idx.len());
        for row in self.rows() {
            x.extend(idx.iter().map(|&j| row[j]));
        }
        let remap = |j: usize| idx.iter().position(|&i| i == j);
        let products = self
            .products
            .iter()
            .filter_map(|p| {
                Some(ProductColumn { column: remap(p.column)?, left: remap(p.left)?, right: remap(p.right)? })
            })
            .collect();
        Ok(Self {
            feature_names: names.to_vec(),
            x,
            labels: self.labels.clone(),
            record_ids: self.record_ids.clone(),
            products,
        })
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::Schema(format!("{} labels for {} rows", labels.len(), self.n_rows())));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Replaces the feature data, keeping names, labels and ids.
    pub fn with_data(&self, x: Vec<T>) -> Result<Self> {
        Self::new(self.feature_names.clone(), x, self.labels.clone(), self.record_ids.clone())?
            .with_products(self.products.clone())
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            x: self.x.iter().map(|v| U::of(v.as_f64())).collect(),
            labels: self.labels.clone(),
            record_ids: self.record_ids.clone(),
            products: self.products.clone(),
        }
    }

    /// Recomputes product columns of a single row after its parents changed.
    pub fn refresh_products(&self, row: &mut [T]) {
        for p in &self.products {
            row[p.column] = row[p.left] * row[p.right];
        }
    }
}

/// Per-column centring and scaling constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Mean and sample standard deviation of each column. A constant column
    /// gets scale 1 so it maps to zeros rather than NaN.
    pub fn fit(m: &FeatureMatrix<T>) -> Self {
        let n = m.n_rows();
        let k = m.n_features();
        let nf = T::from_count(n.max(1));
        let mut means = vec![T::zero(); k];
        for row in m.rows() {
            for (mu, &v) in means.iter_mut().zip(row) {
                *mu = *mu + v;
            }
        }
        means.iter_mut().for_each(|mu| *mu = *mu / nf);
        let mut ss = vec![T::zero(); k];
        for row in m.rows() {
            for ((s, &v), &mu) in ss.iter_mut().zip(row).zip(&means) {
                *s = *s + (v - mu) * (v - mu);
            }
        }
        let denom = T::from_count(n.saturating_sub(1).max(1));
        let scales = ss
            .into_iter()
            .map(|s| {
                let sd = (s / denom).sqrt();
                if sd > T::zero() && sd.is_finite() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&v, (&mu, &sd))| (v - mu) / sd)
            .collect()
    }

    pub fn transform(&self, m: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        let mut x = Vec::with_capacity(m.data().len());
        for row in m.rows() {
            x.extend(self.transform_row(row));
        }
        FeatureMatrix::new(m.feature_names().to_vec(), x, m.labels().to_vec(), m.record_ids().to_vec())
    }
}
