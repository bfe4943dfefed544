use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::dictionary::ColumnKind;
use super::matrix::{FeatureMatrix, ProductColumn};
use super::table::{Column, Table, Value};
use crate::error::{Error, Result};

/// How one predictor column becomes design-matrix columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorEncoding {
    Numeric { name: String },
    /// Reference coding against `levels[0]`.
    Factor { name: String, levels: Vec<String> },
}

impl PredictorEncoding {
    pub fn name(&self) -> &str {
        match self {
            PredictorEncoding::Numeric { name } | PredictorEncoding::Factor { name, .. } => name,
        }
    }

    fn feature_names(&self) -> Vec<String> {
        match self {
            PredictorEncoding::Numeric { name } => vec![name.clone()],
            PredictorEncoding::Factor { name, levels } => {
                levels[1..].iter().map(|l| format!("{name}={l}")).collect()
            }
        }
    }
}

/// Everything needed to re-derive a feature matrix from a raw table:
/// predictor order, factor levels and interaction pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingRecipe {
    pub outcome: String,
    pub predictors: Vec<PredictorEncoding>,
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
}

/// Encoded features of the complete-case rows of a table, without labels.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledRows {
    pub x: Vec<f64>,
    pub record_ids: Vec<String>,
    /// Table row behind each encoded row.
    pub table_rows: Vec<usize>,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub matrix: FeatureMatrix<f64>,
    pub recipe: EncodingRecipe,
    /// Rows dropped for a missing outcome or predictor.
    pub dropped: usize,
}

/// Encodes `predictors` (and the products in `interactions`) of `t`, with
/// `outcome` as the 0/1 label. Rows with any missing selected cell are dropped.
pub fn encode(t: &Table, outcome: &str, predictors: &[&str], interactions: &[(&str, &str)]) -> Result<Encoded> {
    let recipe = EncodingRecipe::from_table(t, outcome, predictors, interactions)?;
    let (matrix, dropped) = recipe.encode(t)?;
    Ok(Encoded { matrix, recipe, dropped })
}

impl EncodingRecipe {
    pub fn from_table(t: &Table, outcome: &str, predictors: &[&str], interactions: &[(&str, &str)]) -> Result<Self> {
        let out = t.require_column(outcome)?;
        if out.kind != ColumnKind::Numeric {
            return Err(Error::Label(format!("outcome `{outcome}` must be a 0/1 numeric column")));
        }
        let mut seen = HashSet::new();
        let mut encodings = Vec::with_capacity(predictors.len());
        for &p in predictors {
            if !seen.insert(p) {
                return Err(Error::Config(format!("predictor `{p}` listed twice")));
            }
            if p == outcome {
                return Err(Error::Config(format!("outcome `{p}` cannot be a predictor")));
            }
            let col = t.require_column(p)?;
            encodings.push(match col.kind {
                ColumnKind::Numeric => PredictorEncoding::Numeric { name: p.to_string() },
                ColumnKind::Factor => PredictorEncoding::Factor { name: p.to_string(), levels: col.levels.clone() },
                kind => {
                    return Err(Error::Schema(format!(
                        "predictor `{p}` has kind {kind:?}; only numeric and factor columns can be encoded"
                    )))
                }
            });
        }
        let recipe = Self {
            outcome: outcome.to_string(),
            predictors: encodings,
            interactions: interactions.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        };
        recipe.check_interactions()?;
        Ok(recipe)
    }

    fn check_interactions(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (a, b) in &self.interactions {
            if a == b {
                return Err(Error::Config(format!("interaction `{a}*{b}` needs two distinct columns")));
            }
            for parent in [a, b] {
                if !self.predictors.iter().any(|p| p.name() == parent) {
                    return Err(Error::Config(format!(
                        "interaction `{a}*{b}` references `{parent}`, which is not a predictor"
                    )));
                }
            }
            if !seen.insert((a.as_str(), b.as_str())) {
                return Err(Error::Config(format!("interaction `{a}*{b}` listed twice")));
            }
        }
        Ok(())
    }

    fn predictor(&self, name: &str) -> &PredictorEncoding {
        self.predictors.iter().find(|p| p.name() == name).expect("checked interaction parent")
    }

    /// Output feature names, in column order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.predictors.iter().flat_map(|p| p.feature_names()).collect();
        for (a, b) in &self.interactions {
            for fa in self.predictor(a).feature_names() {
                for fb in self.predictor(b).feature_names() {
                    names.push(format!("{fa}*{fb}"));
                }
            }
        }
        names
    }

    fn products(&self) -> Vec<ProductColumn> {
        let names = self.feature_names();
        let pos = |n: &str| names.iter().position(|x| x == n).expect("recipe feature");
        let mut out = Vec::new();
        for (a, b) in &self.interactions {
            for fa in self.predictor(a).feature_names() {
                for fb in self.predictor(b).feature_names() {
                    out.push(ProductColumn { column: pos(&format!("{fa}*{fb}")), left: pos(&fa), right: pos(&fb) });
                }
            }
        }
        out
    }

    pub fn n_features(&self) -> usize {
        self.feature_names().len()
    }

    /// Predictor cells of one row, or `None` when any is missing.
    fn encode_row(&self, cols: &[&Column], row: usize, out: &mut Vec<f64>) -> Result<bool> {
        let start = out.len();
        for (enc, col) in self.predictors.iter().zip(cols) {
            match (enc, &col.values[row]) {
                (_, Value::Missing) => {
                    out.truncate(start);
                    return Ok(false);
                }
                (PredictorEncoding::Numeric { .. }, Value::Number(v)) => out.push(*v),
                (PredictorEncoding::Factor { name, levels }, Value::Level(i)) => {
                    let label = &col.levels[*i];
                    let idx = levels.iter().position(|l| l == label).ok_or_else(|| {
                        Error::Encoding(format!("unseen level `{label}` in factor `{name}`"))
                    })?;
                    out.extend((1..levels.len()).map(|l| if l == idx { 1.0 } else { 0.0 }));
                }
                (enc, _) => {
                    return Err(Error::Schema(format!("column `{}` does not match its encoding", enc.name())))
                }
            }
        }
        Ok(true)
    }

    fn resolve<'t>(&self, t: &'t Table) -> Result<Vec<&'t Column>> {
        self.predictors
            .iter()
            .map(|p| {
                let col = t.require_column(p.name())?;
                let want = match p {
                    PredictorEncoding::Numeric { .. } => ColumnKind::Numeric,
                    PredictorEncoding::Factor { .. } => ColumnKind::Factor,
                };
                if col.kind != want {
                    return Err(Error::Schema(format!(
                        "column `{}` is {:?}, model expects {want:?}",
                        col.name, col.kind
                    )));
                }
                Ok(col)
            })
            .collect()
    }

    /// Encodes predictors only. The outcome column is never read, so this is
    /// the first phase of scoring external data.
    pub fn encode_features(&self, t: &Table) -> Result<UnlabeledRows> {
        let cols = self.resolve(t)?;
        let products = self.products();
        let base = self.predictors.iter().map(|p| p.feature_names().len()).sum::<usize>();
        let k = base + products.len();
        let mut x = Vec::with_capacity(t.row_count() * k);
        let mut record_ids = Vec::new();
        let mut table_rows = Vec::new();
        for row in 0..t.row_count() {
            let start = x.len();
            if !self.encode_row(&cols, row, &mut x)? {
                continue;
            }
            for p in &products {
                let v = x[start + p.left] * x[start + p.right];
                x.push(v);
            }
            record_ids.push(t.record_id(row));
            table_rows.push(row);
        }
        let dropped = t.row_count() - table_rows.len();
        Ok(UnlabeledRows { x, record_ids, table_rows, dropped })
    }

    /// Outcome of each listed table row: `Some(bool)` or `None` when missing.
    pub fn labels(&self, t: &Table, rows: &[usize]) -> Result<Vec<Option<bool>>> {
        let col = t.require_column(&self.outcome)?;
        if col.kind != ColumnKind::Numeric {
            return Err(Error::Label(format!("outcome `{}` must be a 0/1 numeric column", self.outcome)));
        }
        rows.iter()
            .map(|&r| match col.values[r] {
                Value::Missing => Ok(None),
                Value::Number(v) if v == 0.0 => Ok(Some(false)),
                Value::Number(v) if v == 1.0 => Ok(Some(true)),
                ref other => Err(Error::Label(format!(
                    "outcome `{}` holds {other:?} on record {}; expected 0 or 1",
                    self.outcome,
                    t.record_id(r)
                ))),
            })
            .collect()
    }

    /// Full encoding with labels; returns the matrix and the dropped-row count.
    pub fn encode(&self, t: &Table) -> Result<(FeatureMatrix<f64>, usize)> {
        let all: Vec<usize> = (0..t.row_count()).collect();
        let labels = self.labels(t, &all)?;
        let feats = self.encode_features(t)?;
        let k = self.n_features();
        let mut x = Vec::with_capacity(feats.x.len());
        let mut y = Vec::new();
        let mut ids = Vec::new();
        for (i, &row) in feats.table_rows.iter().enumerate() {
            if let Some(label) = labels[row] {
                x.extend_from_slice(&feats.x[i * k..(i + 1) * k]);
                y.push(label);
                ids.push(feats.record_ids[i].clone());
            }
        }
        let dropped = t.row_count() - y.len();
        let m = FeatureMatrix::new(self.feature_names(), x, y, ids)?.with_products(self.products())?;
        Ok((m, dropped))
    }

    /// Names of all table columns the recipe reads, outcome included.
    pub fn source_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.predictors.iter().map(PredictorEncoding::name).collect();
        cols.push(&self.outcome);
        cols
    }
}
