//! Seeded synthetic cohorts drawn from a known logistic model.
//!
//! Numeric features are uniform on their bounds, binary features are
//! Bernoulli, and each outcome is Bernoulli with the true risk
//! `1 / (1 + exp(−η))`, where `η` is the intercept plus the weighted
//! features and interaction products. The true risks are returned next to
//! the table so tests can compare fitted models with the truth.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::sigmoid;
use crate::tabular::{write_table, Column, ColumnSpec, DataDictionary, Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureDist {
    Uniform {
        low: f64,
        high: f64,
    },
    /// 0/1 indicator; with `levels` it becomes a two-level factor whose
    /// second level plays the role of 1.
    Binary {
        prevalence: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<[String; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub dist: FeatureDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub a: String,
    pub b: String,
    pub coefficient: f64,
}

fn default_outcome() -> String {
    "outcome".into()
}

fn default_id() -> String {
    "id".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub seed: u64,
    pub features: Vec<FeatureSpec>,
    pub intercept: f64,
    /// Main-effect coefficients by feature name; absent features get 0.
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default)]
    pub interactions: Vec<InteractionTerm>,
    #[serde(default = "default_outcome")]
    pub outcome: String,
    #[serde(default = "default_id")]
    pub id_column: String,
}

/// A generated table with the hidden risk of every row.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub table: Table,
    pub true_risk: Vec<f64>,
}

impl Cohort {
    pub fn labels(&self) -> Vec<bool> {
        let col = self.table.column(self.outcome_name()).expect("outcome column");
        (0..self.table.row_count()).map(|r| col.number(r) == Some(1.0)).collect()
    }

    fn outcome_name(&self) -> &str {
        &self.table.columns().last().expect("outcome column").name
    }

    /// Writes the table as CSV and its dictionary as JSON.
    pub fn write(&self, csv_path: impl AsRef<Path>, dictionary_path: impl AsRef<Path>) -> Result<()> {
        write_table(&self.table, BufWriter::new(File::create(csv_path)?))?;
        self.table.dictionary().write_json_file(dictionary_path)
    }
}

impl GeneratorSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    /// A cohort shaped like a late-effects study: age at diagnosis, a
    /// transplant flag, a cumulative dose, a high-dose indicator and an
    /// age × transplant interaction, with prevalence near 6%.
    pub fn example_cohort(n: usize, seed: u64) -> Self {
        let uniform = |name: &str, low, high| FeatureSpec { name: name.into(), dist: FeatureDist::Uniform { low, high } };
        let binary = |name: &str, prevalence| FeatureSpec {
            name: name.into(),
            dist: FeatureDist::Binary { prevalence, levels: None },
        };
        Self {
            n,
            seed,
            features: vec![
                uniform("age", 0.0, 20.0),
                binary("transplant", 0.25),
                uniform("dose", 0.0, 20.0),
                binary("high_dose", 0.2),
            ],
            intercept: -5.15,
            coefficients: [("age", 0.08), ("transplant", 0.3), ("dose", 0.06), ("high_dose", 0.9)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            interactions: vec![InteractionTerm { a: "age".into(), b: "transplant".into(), coefficient: 0.1 }],
            outcome: "outcome".into(),
            id_column: "id".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("n must be positive".into()));
        }
        let known = |name: &str| self.features.iter().any(|f| f.name == name);
        for f in &self.features {
            match &f.dist {
                FeatureDist::Uniform { low, high } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return Err(Error::Spec(format!("feature `{}` needs finite low < high", f.name)));
                    }
                }
                FeatureDist::Binary { prevalence, .. } => {
                    if !(0.0..=1.0).contains(prevalence) {
                        return Err(Error::Spec(format!("feature `{}` prevalence must be in [0, 1]", f.name)));
                    }
                }
            }
        }
        for name in self.coefficients.keys() {
            if !known(name) {
                return Err(Error::Spec(format!("coefficient for unknown feature `{name}`")));
            }
        }
        for t in &self.interactions {
            if !known(&t.a) || !known(&t.b) {
                return Err(Error::Spec(format!("interaction {}*{} names an unknown feature", t.a, t.b)));
            }
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.push(&self.outcome);
        names.push(&self.id_column);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::Spec("feature, outcome and id column names must be distinct".into()));
        }
        Ok(())
    }

    /// Linear predictor for one row of feature values (in `features` order).
    pub fn linear_predictor(&self, values: &[f64]) -> f64 {
        let idx = |name: &str| self.features.iter().position(|f| f.name == name).expect("validated name");
        let mut eta = self.intercept;
        for (name, &beta) in &self.coefficients {
            eta += beta * values[idx(name)];
        }
        for t in &self.interactions {
            eta += t.coefficient * values[idx(&t.a)] * values[idx(&t.b)];
        }
        eta
    }

    pub fn true_risk(&self, values: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(values))
    }
}

/// Stream used for the outcome draws; features use streams 0, 1, ...
const LABEL_STREAM: u64 = 1 << 32;

pub fn generate(spec: &GeneratorSpec) -> Result<Cohort> {
    spec.validate()?;
    let n = spec.n;
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(s);
        rng
    };

    let mut values = vec![vec![0.0; spec.features.len()]; n];
    for (j, f) in spec.features.iter().enumerate() {
        let mut rng = stream(j as u64);
        for row in values.iter_mut() {
            row[j] = match f.dist {
                FeatureDist::Uniform { low, high } => rng.gen_range(low..high),
                FeatureDist::Binary { prevalence, .. } => f64::from(u8::from(rng.gen_bool(prevalence))),
            };
        }
    }
    let true_risk: Vec<f64> = values.iter().map(|v| spec.true_risk(v)).collect();
    let expected_events: f64 = true_risk.iter().sum();
    if expected_events < 1.0 || n as f64 - expected_events < 1.0 {
        return Err(Error::Spec(format!(
            "expected {expected_events:.3} events among {n} rows; the outcome would be degenerate"
        )));
    }
    let mut rng = stream(LABEL_STREAM);
    let labels: Vec<bool> = true_risk.iter().map(|&p| rng.gen::<f64>() < p).collect();
    let events = labels.iter().filter(|&&y| y).count();
    if events == 0 || events == n {
        return Err(Error::Spec(format!("generated outcome has a single class ({events} events among {n})")));
    }

    let mut columns = Vec::with_capacity(spec.features.len() + 2);
    columns.push(Column::new(
        &ColumnSpec::identifier(&spec.id_column),
        (1..=n).map(|i| Value::Text(i.to_string())).collect(),
    ));
    for (j, f) in spec.features.iter().enumerate() {
        let col = match &f.dist {
            FeatureDist::Binary { levels: Some([l0, l1]), .. } => Column::new(
                &ColumnSpec::factor(&f.name, &[l0.as_str(), l1.as_str()]),
                values.iter().map(|v| Value::Level(v[j] as usize)).collect(),
            ),
            _ => Column::new(&ColumnSpec::numeric(&f.name), values.iter().map(|v| Value::Number(v[j])).collect()),
        };
        columns.push(col);
    }
    columns.push(Column::new(
        &ColumnSpec::numeric(&spec.outcome),
        labels.iter().map(|&y| Value::Number(if y { 1.0 } else { 0.0 })).collect(),
    ));
    let table = Table::new("synthetic", columns, Some(&spec.id_column))?;
    Ok(Cohort { table, true_risk })
}

/// Convenience for building a [`DataDictionary`] without writing files.
pub fn dictionary(cohort: &Cohort) -> DataDictionary {
    cohort.table.dictionary()
}
