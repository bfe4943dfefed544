#![allow(dead_code)]

use std::collections::BTreeMap;

use riskkit::metrics::{auc, ScoredSample};
use riskkit::synth::{generate, FeatureDist, FeatureSpec, GeneratorSpec, InteractionTerm};
use riskkit::tabular::encode;
use riskkit::FeatureMatrix;

/// Pairwise AUC straight from the definition.
pub fn brute_auc(y: &[bool], s: &[f64]) -> f64 {
    let (mut twice, mut p, mut n) = (0u128, 0u128, 0u128);
    for i in 0..y.len() {
        if y[i] {
            p += 1;
        } else {
            n += 1;
        }
    }
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] && !y[j] {
                if s[i] > s[j] {
                    twice += 2;
                } else if s[i] == s[j] {
                    twice += 1;
                }
            }
        }
    }
    twice as f64 / (2.0 * p as f64 * n as f64)
}

/// Average precision by walking the ranked list and summing precision at
/// every case.
pub fn enumerated_ap(y: &[bool], s: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let p = y.iter().filter(|&&v| v).count();
    let mut hits = 0usize;
    let mut total = 0.0;
    for (r, &i) in idx.iter().enumerate() {
        if y[i] {
            hits += 1;
            total += hits as f64 / (r + 1) as f64;
        }
    }
    total / p as f64
}

pub fn uniform(name: &str, low: f64, high: f64) -> FeatureSpec {
    FeatureSpec { name: name.into(), dist: FeatureDist::Uniform { low, high } }
}

pub fn binary(name: &str, prevalence: f64) -> FeatureSpec {
    FeatureSpec { name: name.into(), dist: FeatureDist::Binary { prevalence, levels: None } }
}

pub fn spec(
    n: usize,
    seed: u64,
    features: Vec<FeatureSpec>,
    intercept: f64,
    coefficients: &[(&str, f64)],
    interactions: &[(&str, &str, f64)],
) -> GeneratorSpec {
    GeneratorSpec {
        n,
        seed,
        features,
        intercept,
        coefficients: coefficients.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        interactions: interactions
            .iter()
            .map(|(a, b, c)| InteractionTerm { a: a.to_string(), b: b.to_string(), coefficient: *c })
            .collect(),
        outcome: "outcome".into(),
        id_column: "id".into(),
    }
}

/// Generated cohort encoded with every feature and every true interaction.
pub fn synth_matrix(spec: &GeneratorSpec) -> FeatureMatrix<f64> {
    let cohort = generate(spec).unwrap();
    let preds: Vec<&str> = spec.features.iter().map(|f| f.name.as_str()).collect();
    let inter: Vec<(&str, &str)> = spec.interactions.iter().map(|t| (t.a.as_str(), t.b.as_str())).collect();
    encode(&cohort.table, &spec.outcome, &preds, &inter).unwrap().matrix
}

/// AUC of the true risk on a very large draw from the generating process.
pub fn monte_carlo_auc(spec: &GeneratorSpec, n: usize, seed: u64) -> f64 {
    let big = GeneratorSpec { n, seed, ..spec.clone() };
    let cohort = generate(&big).unwrap();
    auc(&ScoredSample::new(cohort.labels(), cohort.true_risk.clone()).unwrap()).unwrap()
}
