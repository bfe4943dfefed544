use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forest::{fit_forest, ForestConfig};
use crate::logit::{fit_logistic, LogitOptions};
use crate::maxmargin::{fit_svm, KernelSpec, SvmOptions};
use crate::model::{RiskModel, Standardized};
use crate::scalar::Scalar;
use crate::tabular::matrix::{FeatureMatrix, Standardizer};

/// A fitting recipe: turns a training matrix into a risk model.
pub trait Learner<T: Scalar>: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, m: &FeatureMatrix<T>) -> Result<Box<dyn RiskModel<T>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logit,
    Svm,
    Forest,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logit, Family::Svm, Family::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logit => "logit",
            Family::Svm => "svm",
            Family::Forest => "forest",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One hyperparameter combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparams {
    Logit,
    Svm { kernel: KernelSpec, c: f64 },
    Forest { n_trees: usize, mtry: usize, node_size: usize },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Logit => Family::Logit,
            Hyperparams::Svm { .. } => Family::Svm,
            Hyperparams::Forest { .. } => Family::Forest,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Hyperparams::Logit => "logit".into(),
            Hyperparams::Svm { kernel, c } => match kernel {
                KernelSpec::Linear => format!("svm linear C={c}"),
                KernelSpec::Polynomial { degree, gamma, coef0 } => {
                    format!("svm polynomial degree={degree} gamma={gamma:.4} coef0={coef0} C={c}")
                }
                KernelSpec::Gaussian { gamma } => format!("svm gaussian gamma={gamma:.4} C={c}"),
            },
            Hyperparams::Forest { n_trees, mtry, node_size } => {
                format!("forest n_trees={n_trees} mtry={mtry} node_size={node_size}")
            }
        }
    }
}

/// Hyperparameters plus the seed used by stochastic learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

/// A fitted model of any family.
pub enum Fitted<T> {
    Logit(crate::logit::LogisticModel<T>),
    Svm(Standardized<T, crate::maxmargin::SvmModel<T>>),
    Forest(crate::forest::ForestModel<T>),
}

impl ModelSpec {
    /// Fits and returns the concrete model.
    pub fn fit_concrete<T: Scalar>(&self, m: &FeatureMatrix<T>) -> Result<Fitted<T>> {
        Ok(match self.params {
            Hyperparams::Logit => Fitted::Logit(fit_logistic(m, LogitOptions::default())?),
            Hyperparams::Svm { kernel, c } => {
                // SVM features are standardized on the training rows only.
                let standardizer = Standardizer::fit(m);
                let z = standardizer.transform(m)?;
                let opts = SvmOptions { seed: self.seed, ..SvmOptions::default() };
                Fitted::Svm(Standardized { standardizer, inner: fit_svm(&z, kernel, c, &opts)? })
            }
            Hyperparams::Forest { n_trees, mtry, node_size } => {
                let config = ForestConfig { n_trees, mtry, node_size, seed: self.seed };
                Fitted::Forest(fit_forest(m, &config)?)
            }
        })
    }
}

impl<T: Scalar> Learner<T> for ModelSpec {
    fn name(&self) -> String {
        self.params.describe()
    }

    fn fit(&self, m: &FeatureMatrix<T>) -> Result<Box<dyn RiskModel<T>>> {
        Ok(match self.fit_concrete(m)? {
            Fitted::Logit(model) => Box::new(model),
            Fitted::Svm(model) => Box::new(model),
            Fitted::Forest(model) => Box::new(model),
        })
    }
}

impl<T: Scalar> RiskModel<T> for Fitted<T> {
    fn n_features(&self) -> usize {
        match self {
            Fitted::Logit(m) => m.n_features(),
            Fitted::Svm(m) => m.n_features(),
            Fitted::Forest(m) => m.n_features(),
        }
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        match self {
            Fitted::Logit(m) => m.predict_risk(row),
            Fitted::Svm(m) => m.predict_risk(row),
            Fitted::Forest(m) => m.predict_risk(row),
        }
    }
}
