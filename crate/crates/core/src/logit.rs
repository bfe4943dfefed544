//! Logistic regression: `ln(p / (1 - p)) = b0 + b1 x1 + ... + bk xk`.
//!
//! Coefficients maximise the binomial log-likelihood by Newton's method
//! (equivalently IRLS) on internally standardized features, then are mapped
//! back to the original feature scale. No penalty is applied, so complete or
//! quasi-complete separation is detected and reported as an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::{check_row, RiskModel};
use crate::scalar::{log1p_exp, sigmoid, Scalar};
use crate::tabular::matrix::{FeatureMatrix, Standardizer};

/// Largest admissible standardized coefficient before declaring separation.
const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    pub max_iter: usize,
    /// Relative deviance change that counts as converged.
    pub tol: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta<T> {
    pub iterations: usize,
    pub deviance: T,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
    pub feature_names: Vec<String>,
    /// Standard errors, intercept first. Empty for models built by hand.
    #[serde(default)]
    pub std_errors: Vec<T>,
    pub fit_meta: FitMeta<T>,
}

impl<T: Scalar> LogisticModel<T> {
    pub fn from_parts(intercept: T, coefficients: Vec<T>, feature_names: Vec<String>) -> Result<Self> {
        if coefficients.len() != feature_names.len() {
            return Err(Error::Shape { expected: feature_names.len(), found: coefficients.len() });
        }
        Ok(Self {
            intercept,
            coefficients,
            feature_names,
            std_errors: Vec::new(),
            fit_meta: FitMeta { iterations: 0, deviance: T::nan(), converged: false },
        })
    }

    pub fn linear_predictor(&self, row: &[T]) -> Result<T> {
        check_row(self.coefficients.len(), row)?;
        Ok(linear(self.intercept, &self.coefficients, row))
    }

    pub fn coefficient(&self, name: &str) -> Option<T> {
        self.feature_names.iter().position(|f| f == name).map(|j| self.coefficients[j])
    }
}

impl<T: Scalar> RiskModel<T> for LogisticModel<T> {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        Ok(sigmoid(self.linear_predictor(row)?))
    }
}

#[inline]
fn linear<T: Scalar>(intercept: T, coef: &[T], row: &[T]) -> T {
    row.iter().zip(coef).fold(intercept, |acc, (&x, &b)| acc + x * b)
}

fn label<T: Scalar>(y: bool) -> T {
    if y {
        T::one()
    } else {
        T::zero()
    }
}

/// Binomial log-likelihood `Σ y·η − ln(1 + e^η)`.
pub fn log_likelihood<T: Scalar>(m: &FeatureMatrix<T>, intercept: T, coef: &[T]) -> T {
    m.rows()
        .zip(m.labels())
        .map(|(row, &y)| {
            let eta = linear(intercept, coef, row);
            label::<T>(y) * eta - log1p_exp(eta)
        })
        .sum()
}

/// Gradient of [`log_likelihood`], intercept first: `Xᵀ(y − p)`.
pub fn score<T: Scalar>(m: &FeatureMatrix<T>, intercept: T, coef: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); coef.len() + 1];
    for (row, &y) in m.rows().zip(m.labels()) {
        let r = label::<T>(y) - sigmoid_raw(linear(intercept, coef, row));
        g[0] = g[0] + r;
        for (gj, &x) in g[1..].iter_mut().zip(row) {
            *gj = *gj + x * r;
        }
    }
    g
}

// Unclamped inverse logit for likelihood derivatives.
fn sigmoid_raw<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

struct Design<T> {
    /// Row-major with a leading column of ones.
    z: Vec<T>,
    y: Vec<T>,
    p: usize,
}

impl<T: Scalar> Design<T> {
    fn rows(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.z.chunks(self.p).zip(self.y.iter().copied())
    }

    fn deviance(&self, beta: &[T]) -> T {
        let two = T::of(2.0);
        self.rows()
            .map(|(row, y)| {
                let eta = dot(row, beta);
                two * (log1p_exp(eta) - y * eta)
            })
            .sum()
    }

    /// Gradient and Fisher information at `beta`.
    fn newton_system(&self, beta: &[T]) -> (Vec<T>, Vec<T>) {
        let p = self.p;
        let mut g = vec![T::zero(); p];
        let mut h = vec![T::zero(); p * p];
        for (row, y) in self.rows() {
            let mu = sigmoid_raw(dot(row, beta));
            let w = mu * (T::one() - mu);
            let r = y - mu;
            for a in 0..p {
                g[a] = g[a] + row[a] * r;
                let wa = w * row[a];
                for b in 0..=a {
                    h[a * p + b] = h[a * p + b] + wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                h[b * p + a] = h[a * p + b];
            }
        }
        (g, h)
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Fits the unpenalized logistic model by Newton/IRLS with step halving.
pub fn fit_logistic<T: Scalar>(m: &FeatureMatrix<T>, opts: LogitOptions) -> Result<LogisticModel<T>> {
    m.require_both_classes()?;
    let k = m.n_features();
    for j in 0..k {
        let first = m.value(0, j);
        if (1..m.n_rows()).all(|i| m.value(i, j) == first) {
            return Err(Error::Design(format!("feature `{}` is constant", m.feature_names()[j])));
        }
    }

    let st = Standardizer::fit(m);
    let p = k + 1;
    let mut z = Vec::with_capacity(m.n_rows() * p);
    for row in m.rows() {
        z.push(T::one());
        z.extend(st.transform_row(row));
    }
    let design = Design { z, y: m.labels().iter().map(|&y| label::<T>(y)).collect(), p };

    let ybar = T::from_count(m.case_count()) / T::from_count(m.n_rows());
    let mut beta = vec![T::zero(); p];
    beta[0] = (ybar / (T::one() - ybar)).ln();
    let mut dev = design.deviance(&beta);
    let tol = T::of(opts.tol);
    let bound = T::of(SEPARATION_BOUND);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let (g, h) = design.newton_system(&beta);
        let step = Cholesky::factor(&h, p)
            .map_err(|_| Error::Numeric("information matrix is singular; check for collinear features".into()))?
            .solve(&g);

        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + scale * s).collect();
            let trial_dev = design.deviance(&trial);
            if trial_dev.is_finite() && trial_dev <= dev * (T::one() + T::epsilon() * T::of(16.0)) {
                accepted = Some((trial, trial_dev));
                break;
            }
            scale = scale / T::of(2.0);
        }
        let Some((next, next_dev)) = accepted else {
            return Err(Error::Numeric("deviance could not be decreased along the Newton direction".into()));
        };
        if let Some(j) = next[1..].iter().position(|b| b.abs() > bound) {
            return Err(Error::Separation(format!(
                "coefficient of `{}` diverges; outcome is (quasi-)perfectly separated",
                m.feature_names()[j]
            )));
        }
        let rel = (dev - next_dev).abs() / (next_dev.abs() + T::of(0.1));
        beta = next;
        dev = next_dev;
        if rel < tol {
            converged = true;
            break;
        }
    }
    if !dev.is_finite() {
        return Err(Error::Numeric("non-finite deviance".into()));
    }

    // Fitted probabilities pinned at 0 or 1 mean the likelihood has no
    // finite maximiser in some direction.
    let pinned = T::epsilon() * T::of(10.0);
    if design.rows().any(|(row, _)| {
        let mu = sigmoid_raw(dot(row, &beta));
        mu < pinned || mu > T::one() - pinned
    }) {
        return Err(Error::Separation("fitted probabilities numerically 0 or 1".into()));
    }
    // Complete separation can meet the deviance criterion before either
    // check above fires; every row is then fitted almost exactly.
    let residual = T::of(1e-6);
    if design.rows().all(|(row, y)| (y - sigmoid_raw(dot(row, &beta))).abs() < residual) {
        return Err(Error::Separation("every outcome is fitted exactly; classes are perfectly separated".into()));
    }

    // Back to the original feature scale: b_j = s_j⁻¹·b̃_j, b0 = b̃0 − Σ m_j b̃_j / s_j.
    let coefficients: Vec<T> = (0..k).map(|j| beta[j + 1] / st.scales[j]).collect();
    let intercept = beta[0] - (0..k).map(|j| st.means[j] * coefficients[j]).sum::<T>();

    let (_, h) = design.newton_system(&beta);
    let std_errors = match Cholesky::factor(&h, p) {
        Ok(ch) => {
            let cov = ch.inverse();
            let mut a = vec![T::zero(); p * p];
            a[0] = T::one();
            for j in 0..k {
                a[j + 1] = -st.means[j] / st.scales[j];
                a[(j + 1) * p + (j + 1)] = T::one() / st.scales[j];
            }
            (0..p)
                .map(|r| {
                    let mut v = T::zero();
                    for s in 0..p {
                        for t in 0..p {
                            v = v + a[r * p + s] * cov[s * p + t] * a[r * p + t];
                        }
                    }
                    v.sqrt()
                })
                .collect()
        }
        Err(_) => vec![T::nan(); p],
    };

    Ok(LogisticModel {
        intercept,
        coefficients,
        feature_names: m.feature_names().to_vec(),
        std_errors,
        fit_meta: FitMeta { iterations, deviance: dev, converged },
    })
}
