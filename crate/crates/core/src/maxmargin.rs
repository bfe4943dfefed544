//! Soft-margin kernel support vector machine.
//!
//! The dual problem
//!
//! ```text
//! max  Σ αᵢ − ½ Σᵢ Σⱼ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)   s.t.  0 ≤ αᵢ ≤ C,  Σ yᵢ αᵢ = 0
//! ```
//!
//! is solved by sequential minimal optimization: each step picks the
//! maximal-violating pair and optimises it analytically. Decision values are
//! turned into risks by a Platt sigmoid fitted on out-of-fold decision
//! values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossval::make_folds;
use crate::error::{Error, Result};
use crate::model::{check_row, RiskModel};
use crate::scalar::{sigmoid, Scalar};
use crate::tabular::matrix::FeatureMatrix;

/// Kernels above this many entries are evaluated row by row instead of cached.
const FULL_CACHE_LIMIT: usize = 4096 * 4096;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, gamma: f64, coef0: f64 },
    Gaussian { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, gamma, coef0 } => {
                if degree == 0 || !(gamma > 0.0) || !gamma.is_finite() || !coef0.is_finite() {
                    Err(Error::Config(format!(
                        "polynomial kernel needs degree >= 1 and gamma > 0 (degree {degree}, gamma {gamma})"
                    )))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Gaussian { gamma } => {
                if !(gamma > 0.0) || !gamma.is_finite() {
                    Err(Error::Config(format!("gaussian kernel needs gamma > 0, got {gamma}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Gaussian { .. } => "gaussian",
        }
    }

    #[inline]
    fn eval<T: Scalar>(&self, x: &[T], z: &[T]) -> T {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Polynomial { degree, gamma, coef0 } => {
                (T::of(gamma) * dot(x, z) + T::of(coef0)).powi(degree as i32)
            }
            KernelSpec::Gaussian { gamma } => {
                let d2 = x.iter().zip(z).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
                (-T::of(gamma) * d2).exp()
            }
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Kernel value of two rows of equal length.
pub fn kernel_eval<T: Scalar>(spec: &KernelSpec, x: &[T], z: &[T]) -> Result<T> {
    if x.len() != z.len() {
        return Err(Error::Shape { expected: x.len(), found: z.len() });
    }
    spec.validate()?;
    Ok(spec.eval(x, z))
}

/// Dense `n × n` Gram matrix of the rows of `m`.
pub fn gram_matrix<T: Scalar>(spec: &KernelSpec, m: &FeatureMatrix<T>) -> Vec<T> {
    let n = m.n_rows();
    let mut g = vec![T::zero(); n * n];
    g.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
        let xi = m.row(i);
        for (j, v) in out.iter_mut().enumerate() {
            *v = spec.eval(xi, m.row(j));
        }
    });
    g
}

/// Dual objective `Σ αᵢ − ½ αᵀQα` for unsigned multipliers.
pub fn dual_objective<T: Scalar>(gram: &[T], labels: &[bool], alpha: &[T]) -> T {
    let n = labels.len();
    let sy = |i: usize| if labels[i] { T::one() } else { -T::one() };
    let mut quad = T::zero();
    for i in 0..n {
        if alpha[i] == T::zero() {
            continue;
        }
        for j in 0..n {
            quad = quad + alpha[i] * alpha[j] * sy(i) * sy(j) * gram[i * n + j];
        }
    }
    alpha.iter().copied().sum::<T>() - quad / T::of(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Stop when the maximal KKT violation `m(α) − M(α)` falls below this.
    pub kkt_tol: f64,
    /// Cap on pair updates.
    pub max_updates: usize,
    /// Folds for the out-of-fold Platt fit.
    pub platt_folds: usize,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self { kkt_tol: 1e-3, max_updates: 1_000_000, platt_folds: 5, seed: 0 }
    }
}

/// Raw solver output over all training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T> {
    /// Unsigned multipliers, one per training row.
    pub alpha: Vec<T>,
    /// Offset: decision value is `Σ yᵢαᵢK(xᵢ, x) − rho`.
    pub rho: T,
    pub updates: usize,
    /// `m(α) − M(α)` at exit.
    pub max_violation: T,
}

enum Kernel<'a, T> {
    Full(Vec<T>),
    Rows { spec: KernelSpec, m: &'a FeatureMatrix<T> },
}

impl<T: Scalar> Kernel<'_, T> {
    fn row(&self, i: usize, buf: &mut Vec<T>) {
        match self {
            Kernel::Full(g) => {
                let n = buf.len();
                buf.copy_from_slice(&g[i * n..(i + 1) * n]);
            }
            Kernel::Rows { spec, m } => {
                let xi = m.row(i);
                for (j, v) in buf.iter_mut().enumerate() {
                    *v = spec.eval(xi, m.row(j));
                }
            }
        }
    }
}

/// Solves the soft-margin dual with maximal-violating-pair SMO. Ties in
/// pair selection go to the lowest index.
pub fn solve_dual<T: Scalar>(
    m: &FeatureMatrix<T>,
    spec: &KernelSpec,
    c: f64,
    opts: &SvmOptions,
) -> Result<DualSolution<T>> {
    let n = m.n_rows();
    let kernel = if n * n <= FULL_CACHE_LIMIT {
        Kernel::Full(gram_matrix(spec, m))
    } else {
        Kernel::Rows { spec: *spec, m }
    };
    let y: Vec<T> = m.labels().iter().map(|&v| if v { T::one() } else { -T::one() }).collect();
    let diag: Vec<T> = (0..n).map(|i| spec.eval(m.row(i), m.row(i))).collect();
    let c = T::of(c);
    let tol = T::of(opts.kkt_tol);
    let tau = T::of(TAU);

    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut ki = vec![T::zero(); n];
    let mut kj = vec![T::zero(); n];
    let mut updates = 0;

    let in_up = |a: T, y: T| (y > T::zero() && a < c) || (y < T::zero() && a > T::zero());
    let in_low = |a: T, y: T| (y > T::zero() && a > T::zero()) || (y < T::zero() && a < c);

    let violation = loop {
        let mut i = usize::MAX;
        let mut gmax = T::neg_infinity();
        let mut j = usize::MAX;
        let mut gmin = T::infinity();
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        let gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < tol {
            break if gap.is_finite() { gap.max(T::zero()) } else { T::zero() };
        }
        if updates >= opts.max_updates {
            return Err(Error::Convergence(format!(
                "SMO hit {} pair updates; worst KKT violation {gap}",
                opts.max_updates
            )));
        }
        updates += 1;

        kernel.row(i, &mut ki);
        kernel.row(j, &mut kj);
        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        let (mut ni, mut nj);
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + T::of(2.0) * qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ni = ai + delta;
            nj = aj + delta;
            if diff > T::zero() {
                if nj < T::zero() {
                    nj = T::zero();
                    ni = diff;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = -diff;
            }
            if diff > T::zero() {
                if ni > c {
                    ni = c;
                    nj = c - diff;
                }
            } else if nj > c {
                nj = c;
                ni = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - T::of(2.0) * qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ni = ai - delta;
            nj = aj + delta;
            if sum > c {
                if ni > c {
                    ni = c;
                    nj = sum - c;
                }
            } else if nj < T::zero() {
                nj = T::zero();
                ni = sum;
            }
            if sum > c {
                if nj > c {
                    nj = c;
                    ni = sum - c;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = sum;
            }
        }
        alpha[i] = ni;
        alpha[j] = nj;
        let (di, dj) = (ni - ai, nj - aj);
        for t in 0..n {
            grad[t] = grad[t] + y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    };

    // Offset: mean of yG over free vectors, else the midpoint of the bounds.
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut free, mut sum_free) = (0usize, T::zero());
    for t in 0..n {
        let yg = y[t] * grad[t];
        let pos = y[t] > T::zero();
        if alpha[t] >= c {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= T::zero() {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free = sum_free + yg;
        }
    }
    let rho = if free > 0 {
        sum_free / T::from_count(free)
    } else {
        (ub + lb) / T::of(2.0)
    };
    Ok(DualSolution { alpha, rho, updates, max_violation: violation })
}

/// Sigmoid map `risk = 1 / (1 + exp(a·d + b))` from decision value `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling<T> {
    pub a: T,
    pub b: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlattSource {
    /// Fitted on decision values from held-out internal folds.
    OutOfFold,
    /// Too few rows per class for the internal folds; fitted in-sample.
    InSample,
}

/// Fits Platt's sigmoid by Newton's method with backtracking, using the
/// smoothed targets `(P+1)/(P+2)` and `1/(N+2)`.
pub fn fit_platt(decision: &[f64], labels: &[bool]) -> PlattScaling<f64> {
    let prior1 = labels.iter().filter(|&&y| y).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let target: Vec<f64> = labels.iter().map(|&y| if y { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&target)
            .map(|(&d, &t)| {
                let f = d * a + b;
                if f >= 0.0 {
                    t * f + (-f).exp().ln_1p()
                } else {
                    (t - 1.0) * f + f.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&d, &t) in decision.iter().zip(&target) {
            let f = d * a + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = t - p;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    PlattScaling { a, b }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<T> {
    pub kernel: KernelSpec,
    pub c: f64,
    pub n_features: usize,
    pub support_vectors: Vec<Vec<T>>,
    /// `yᵢαᵢ` for each support vector.
    pub alphas: Vec<T>,
    pub bias: T,
    pub platt: Option<PlattScaling<T>>,
    pub platt_source: PlattSource,
    pub updates: usize,
}

impl<T: Scalar> SvmModel<T> {
    fn from_solution(m: &FeatureMatrix<T>, kernel: KernelSpec, c: f64, sol: &DualSolution<T>) -> Self {
        let mut support_vectors = Vec::new();
        let mut alphas = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > T::zero() {
                support_vectors.push(m.row(i).to_vec());
                alphas.push(if m.labels()[i] { a } else { -a });
            }
        }
        Self {
            kernel,
            c,
            n_features: m.n_features(),
            support_vectors,
            alphas,
            bias: -sol.rho,
            platt: None,
            platt_source: PlattSource::InSample,
            updates: sol.updates,
        }
    }

    /// Signed distance proxy `Σ αᵢ K(svᵢ, x) + bias`; its sign is the class.
    pub fn decision_value(&self, row: &[T]) -> Result<T> {
        check_row(self.n_features, row)?;
        Ok(self.decision_unchecked(row))
    }

    fn decision_unchecked(&self, row: &[T]) -> T {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .fold(self.bias, |acc, (sv, &a)| acc + a * self.kernel.eval(sv, row))
    }

    /// Primal weight vector; only meaningful for the linear kernel.
    pub fn linear_weights(&self) -> Option<Vec<T>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut w = vec![T::zero(); self.n_features];
        for (sv, &a) in self.support_vectors.iter().zip(&self.alphas) {
            for (wj, &x) in w.iter_mut().zip(sv) {
                *wj = *wj + a * x;
            }
        }
        Some(w)
    }

    pub fn classify(&self, row: &[T]) -> Result<bool> {
        Ok(self.decision_value(row)? > T::zero())
    }
}

impl<T: Scalar> RiskModel<T> for SvmModel<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_risk(&self, row: &[T]) -> Result<T> {
        let platt = self.platt.ok_or_else(|| Error::State("SVM has no Platt parameters".into()))?;
        let d = self.decision_value(row)?;
        Ok(sigmoid(-(platt.a * d + platt.b)))
    }
}

/// Trains the SVM on all rows and attaches a Platt sigmoid fitted on
/// out-of-fold decision values. Features are expected to be standardized.
pub fn fit_svm<T: Scalar>(m: &FeatureMatrix<T>, spec: KernelSpec, c: f64, opts: &SvmOptions) -> Result<SvmModel<T>> {
    m.require_both_classes()?;
    spec.validate()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Config(format!("cost C must be positive, got {c}")));
    }
    let cases = m.case_count();
    let minority = cases.min(m.n_rows() - cases);

    let (decision, source) = if opts.platt_folds >= 2 && minority >= opts.platt_folds {
        let plan = make_folds(m.n_rows(), opts.platt_folds, opts.seed, Some(m.labels()))?;
        let mut oof = vec![0.0f64; m.n_rows()];
        for fold in 0..plan.k {
            let (train, test) = plan.split(fold);
            let sub = m.subset(&train);
            let sol = solve_dual(&sub, &spec, c, opts)?;
            let model = SvmModel::from_solution(&sub, spec, c, &sol);
            for &r in &test {
                oof[r] = model.decision_unchecked(m.row(r)).as_f64();
            }
        }
        (Some(oof), PlattSource::OutOfFold)
    } else {
        (None, PlattSource::InSample)
    };

    let sol = solve_dual(m, &spec, c, opts)?;
    let mut model = SvmModel::from_solution(m, spec, c, &sol);
    let decision = decision.unwrap_or_else(|| m.rows().map(|r| model.decision_unchecked(r).as_f64()).collect());
    let platt = fit_platt(&decision, m.labels());
    model.platt = Some(PlattScaling { a: T::of(platt.a), b: T::of(platt.b) });
    model.platt_source = source;
    Ok(model)
}

/// Kernel and cost combinations swept when tuning: C ∈ {0.1, 1, 10} crossed
/// with linear, polynomial (degree 2 and 3, gamma 1/k, coef0 1) and gaussian
/// (gamma 0.5/k, 1/k, 2/k) kernels.
pub fn default_grid(n_features: usize) -> Vec<(KernelSpec, f64)> {
    let k = n_features.max(1) as f64;
    let mut kernels = vec![KernelSpec::Linear];
    for degree in [2, 3] {
        kernels.push(KernelSpec::Polynomial { degree, gamma: 1.0 / k, coef0: 1.0 });
    }
    for g in [0.5, 1.0, 2.0] {
        kernels.push(KernelSpec::Gaussian { gamma: g / k });
    }
    let mut grid = Vec::new();
    for c in [0.1, 1.0, 10.0] {
        for kernel in &kernels {
            grid.push((*kernel, c));
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{auc, ScoredSample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>], y: &[bool]) -> FeatureMatrix<f64> {
        let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
        FeatureMatrix::from_rows(names, rows, y.to_vec()).unwrap()
    }

    fn xor() -> FeatureMatrix<f64> {
        matrix(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            &[false, false, true, true],
        )
    }

    #[test]
    fn kernel_values() {
        let x = [1.0, 2.0];
        let z = [3.0, 4.0];
        assert_eq!(kernel_eval(&KernelSpec::Linear, &x, &z).unwrap(), 11.0);
        assert_eq!(kernel_eval(&KernelSpec::Gaussian { gamma: 0.3 }, &x, &x).unwrap(), 1.0);
        let poly = KernelSpec::Polynomial { degree: 2, gamma: 1.0, coef0: 1.0 };
        assert_eq!(kernel_eval(&poly, &x, &z).unwrap(), 144.0);
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &x, &[1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn separable_clusters_are_classified() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let centre = if i < 10 { 0.0 } else { 10.0 };
            rows.push(vec![centre + rng.gen_range(-1.0..1.0), centre + rng.gen_range(-1.0..1.0)]);
            y.push(i >= 10);
        }
        let m = matrix(&rows, &y);
        let model = fit_svm(&m, KernelSpec::Linear, 10.0, &SvmOptions::default()).unwrap();
        for (row, &label) in m.rows().zip(&y) {
            assert_eq!(model.classify(row).unwrap(), label);
        }
    }

    #[test]
    fn xor_needs_a_nonlinear_kernel() {
        let m = xor();
        let lin = fit_svm(&m, KernelSpec::Linear, 10.0, &SvmOptions::default()).unwrap();
        let correct = m.rows().zip(m.labels()).filter(|(r, &y)| lin.classify(r).unwrap() == y).count();
        assert!(correct <= 3);
        let rbf = fit_svm(&m, KernelSpec::Gaussian { gamma: 1.0 }, 10.0, &SvmOptions::default()).unwrap();
        assert!(m.rows().zip(m.labels()).all(|(r, &y)| rbf.classify(r).unwrap() == y));
        assert_eq!(rbf.platt_source, PlattSource::InSample);
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] + 0.5 * r[1] + rng.gen_range(-0.7..0.7) > 0.0).collect();
        let m = matrix(&rows, &y);
        let model = fit_svm(&m, KernelSpec::Gaussian { gamma: 0.5 }, 1.0, &SvmOptions::default()).unwrap();
        let mut free = 0;
        for (sv, &a) in model.support_vectors.iter().zip(&model.alphas) {
            if a.abs() < 1.0 - 1e-9 {
                free += 1;
                let d = model.decision_value(sv).unwrap();
                assert!((d.abs() - 1.0).abs() <= 1e-3, "decision {d}");
            }
        }
        assert!(free > 0);
        let total: f64 = model.alphas.iter().sum();
        assert!(total.abs() < 1e-6);
        assert!(model.alphas.iter().all(|a| a.abs() <= 1.0 + 1e-12 && *a != 0.0));
    }

    #[test]
    fn symmetric_midpoint_has_zero_decision() {
        let rows = vec![vec![-1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, -1.0]];
        let y = [false, false, false, true, true, true];
        let model = fit_svm(&matrix(&rows, &y), KernelSpec::Linear, 10.0, &SvmOptions::default()).unwrap();
        assert!(model.decision_value(&[0.0, 0.0]).unwrap().abs() < 1e-6);
        assert!(matches!(model.decision_value(&[0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn risk_is_monotone_in_decision_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<bool> = rows.iter().map(|r| rng.gen::<f64>() < 1.0 / (1.0 + (-2.0 * r[0]).exp())).collect();
        let m = matrix(&rows, &y);
        let model = fit_svm(&m, KernelSpec::Gaussian { gamma: 1.0 }, 1.0, &SvmOptions::default()).unwrap();
        assert_eq!(model.platt_source, PlattSource::OutOfFold);
        let d: Vec<f64> = m.rows().map(|r| model.decision_value(r).unwrap()).collect();
        let p: Vec<f64> = m.rows().map(|r| model.predict_risk(r).unwrap()).collect();
        let platt = model.platt.unwrap();
        assert!(platt.a < 0.0);
        let mid = -platt.b / platt.a;
        assert!((sigmoid(-(platt.a * mid + platt.b)) - 0.5).abs() < 1e-12);
        let ad = auc(&ScoredSample::new(y.clone(), d).unwrap()).unwrap();
        let ap = auc(&ScoredSample::new(y, p).unwrap()).unwrap();
        assert_eq!(ad, ap);
    }

    #[test]
    fn missing_platt_is_state_error() {
        let mut model = fit_svm(&xor(), KernelSpec::Gaussian { gamma: 1.0 }, 1.0, &SvmOptions::default()).unwrap();
        model.platt = None;
        assert!(matches!(model.predict_risk(&[0.0, 0.0]), Err(Error::State(_))));
    }

    #[test]
    fn single_class_and_bad_cost_rejected() {
        let m = matrix(&[vec![0.0], vec![1.0]], &[true, true]);
        assert!(matches!(fit_svm(&m, KernelSpec::Linear, 1.0, &SvmOptions::default()), Err(Error::Label(_))));
        assert!(matches!(fit_svm(&xor(), KernelSpec::Linear, 0.0, &SvmOptions::default()), Err(Error::Config(_))));
    }

    #[test]
    fn update_cap_reports_violation() {
        let opts = SvmOptions { max_updates: 1, ..SvmOptions::default() };
        match solve_dual(&xor(), &KernelSpec::Gaussian { gamma: 1.0 }, 10.0, &opts) {
            Err(Error::Convergence(msg)) => assert!(msg.contains("violation")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_grid_size() {
        assert_eq!(default_grid(4).len(), 18);
    }
}
