//! Versioned JSON interchange format for a fitted model and its encoding.

use std::path::Path;

use riskkit::crossval::{Family, Fitted, Hyperparams};
use riskkit::forest::ForestModel;
use riskkit::logit::LogisticModel;
use riskkit::maxmargin::SvmModel;
use riskkit::model::Standardized;
use riskkit::tabular::{EncodingRecipe, Table, UnlabeledRows};
use riskkit::{FeatureMatrix, RiskModel, Standardizer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Context, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// RFC 3339 UTC time of the fit; the only non-deterministic field.
    pub fitted_at: String,
    pub seed: u64,
    /// SHA-256 of the training matrix (names, values, labels, record ids).
    pub training_fingerprint: String,
    pub n_train: usize,
    pub n_cases: usize,
}

/// Family-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelPayload {
    Logit(LogisticModel<f64>),
    Svm(SvmModel<f64>),
    Forest(ForestModel<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortableModel {
    pub format_version: u32,
    pub family: Family,
    pub recipe: EncodingRecipe,
    /// Centring and scaling applied before the model; SVM only.
    pub standardization: Option<Standardizer<f64>>,
    pub params: Hyperparams,
    pub model: ModelPayload,
    pub provenance: Provenance,
}

/// Hex SHA-256 over the feature names, values, labels and record ids.
pub fn fingerprint(m: &FeatureMatrix<f64>) -> String {
    let mut h = Sha256::new();
    for name in m.feature_names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    for v in m.data() {
        h.update(v.to_bits().to_le_bytes());
    }
    for &y in m.labels() {
        h.update([u8::from(y)]);
    }
    for id in m.record_ids() {
        h.update(id.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl PortableModel {
    pub fn new(
        recipe: EncodingRecipe,
        params: Hyperparams,
        fitted: Fitted<f64>,
        seed: u64,
        training: &FeatureMatrix<f64>,
        fitted_at: String,
    ) -> Self {
        let (standardization, model) = match fitted {
            Fitted::Logit(m) => (None, ModelPayload::Logit(m)),
            Fitted::Svm(Standardized { standardizer, inner }) => (Some(standardizer), ModelPayload::Svm(inner)),
            Fitted::Forest(m) => (None, ModelPayload::Forest(m)),
        };
        Self {
            format_version: FORMAT_VERSION,
            family: params.family(),
            recipe,
            standardization,
            params,
            model,
            provenance: Provenance {
                fitted_at,
                seed,
                training_fingerprint: fingerprint(training),
                n_train: training.n_rows(),
                n_cases: training.case_count(),
            },
        }
    }

    /// Parses and checks a model file. The version is checked before the
    /// rest of the document is interpreted.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(riskkit::Error::from).context("reading model")?;
        match raw.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "unsupported model format_version {v}; this build reads version {FORMAT_VERSION}"
                )))
            }
            None => return Err(CliError::Config("model file has no integer format_version".into())),
        }
        let model: Self = serde_json::from_value(raw).map_err(riskkit::Error::from).context("reading model")?;
        model.check()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<()> {
        if self.params.family() != self.family {
            return Err(CliError::Config(format!(
                "model family {} does not match its parameters ({})",
                self.family,
                self.params.family()
            )));
        }
        let payload_family = match self.model {
            ModelPayload::Logit(_) => Family::Logit,
            ModelPayload::Svm(_) => Family::Svm,
            ModelPayload::Forest(_) => Family::Forest,
        };
        if payload_family != self.family {
            return Err(CliError::Config(format!("model family {} holds a {payload_family} payload", self.family)));
        }
        if self.family == Family::Svm && self.standardization.is_none() {
            return Err(CliError::Config("svm model lacks its standardization constants".into()));
        }
        let fitted = self.to_fitted();
        let k = self.recipe.n_features();
        if fitted.n_features() != k {
            return Err(CliError::Config(format!(
                "model expects {} features but its recipe encodes {k}",
                fitted.n_features()
            )));
        }
        if let Some(st) = &self.standardization {
            if st.means.len() != k || st.scales.len() != k {
                return Err(CliError::Config("standardization length differs from the recipe".into()));
            }
        }
        Ok(())
    }

    /// The scoring model, standardization included.
    pub fn to_fitted(&self) -> Fitted<f64> {
        match &self.model {
            ModelPayload::Logit(m) => Fitted::Logit(m.clone()),
            ModelPayload::Svm(m) => Fitted::Svm(Standardized {
                standardizer: self.standardization.clone().expect("checked on load"),
                inner: m.clone(),
            }),
            ModelPayload::Forest(m) => Fitted::Forest(m.clone()),
        }
    }

    /// First phase of scoring: encodes the predictors of `t` (never its
    /// outcome) and predicts a risk for every complete row.
    pub fn predict_table(&self, t: &Table) -> Result<(UnlabeledRows, Vec<f64>)> {
        let rows = self.recipe.encode_features(t).context(format!("encoding `{}`", t.name()))?;
        let model = self.to_fitted();
        let k = self.recipe.n_features();
        let risks = rows
            .x
            .chunks(k.max(1))
            .take(rows.record_ids.len())
            .map(|r| model.predict_risk(r))
            .collect::<riskkit::Result<Vec<f64>>>()
            .context("predicting")?;
        Ok((rows, risks))
    }
}
