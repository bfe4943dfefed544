//! The common scoring contract of the fitted learners.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tabular::matrix::{FeatureMatrix, Standardizer};

/// A fitted model that maps a feature row to a risk in [0, 1].
pub trait RiskModel<T: Scalar>: Send + Sync {
    fn n_features(&self) -> usize;

    fn predict_risk(&self, row: &[T]) -> Result<T>;

    fn predict_matrix(&self, m: &FeatureMatrix<T>) -> Result<Vec<T>> {
        m.rows().map(|r| self.predict_risk(r)).collect()
    }
}

impl<T: Scalar, M: RiskModel<T> + ?Sized> RiskModel<T> for Box<M> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        (**self).predict_risk(row)
    }
}

pub(crate) fn check_row<T: Scalar>(expected: usize, row: &[T]) -> Result<()> {
    if row.len() != expected {
        return Err(Error::Shape { expected, found: row.len() });
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    Ok(())
}

/// A model fitted on standardized features, applied to raw rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized<T, M> {
    pub standardizer: Standardizer<T>,
    pub inner: M,
}

impl<T: Scalar, M: RiskModel<T>> RiskModel<T> for Standardized<T, M> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        check_row(self.n_features(), row)?;
        self.inner.predict_risk(&self.standardizer.transform_row(row))
    }
}
