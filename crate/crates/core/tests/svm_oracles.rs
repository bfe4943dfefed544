use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskkit::maxmargin::{dual_objective, fit_svm, gram_matrix, kernel_eval, solve_dual, KernelSpec, SvmOptions};
use riskkit::metrics::{auc, ScoredSample};
use riskkit::{FeatureMatrix, RiskModel};

fn matrix(rows: &[Vec<f64>], y: &[bool]) -> FeatureMatrix<f64> {
    let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::from_rows(names, rows, y.to_vec()).unwrap()
}

fn noisy(n: usize, seed: u64) -> FeatureMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
    let mut y: Vec<bool> = rows.iter().map(|r| r[0] - r[1] + rng.gen_range(-1.0..1.0) > 0.0).collect();
    y[0] = true;
    y[1] = false;
    matrix(&rows, &y)
}

fn kernels() -> [KernelSpec; 3] {
    [
        KernelSpec::Linear,
        KernelSpec::Polynomial { degree: 2, gamma: 0.5, coef0: 1.0 },
        KernelSpec::Gaussian { gamma: 0.7 },
    ]
}

/// Uniform box draw rescaled so that Σ yᵢαᵢ = 0.
fn random_feasible(y: &[bool], c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut a: Vec<f64> = y.iter().map(|_| rng.gen_range(0.0..c)).collect();
    let pos: f64 = y.iter().zip(&a).filter(|(&l, _)| l).map(|(_, v)| v).sum();
    let neg: f64 = y.iter().zip(&a).filter(|(&l, _)| !l).map(|(_, v)| v).sum();
    let (shrink_pos, f) = if pos > neg { (true, neg / pos) } else { (false, pos / neg) };
    for (v, &l) in a.iter_mut().zip(y) {
        if l == shrink_pos {
            *v *= f;
        }
    }
    a
}

#[test]
fn dual_objective_beats_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (case, n) in [12usize, 20, 30].into_iter().enumerate() {
        for kernel in kernels() {
            let m = noisy(n, case as u64 + 10);
            let c = 1.0;
            let sol = solve_dual(&m, &kernel, c, &SvmOptions::default()).unwrap();
            let gram = gram_matrix(&kernel, &m);
            let best = dual_objective(&gram, m.labels(), &sol.alpha);
            for _ in 0..1000 {
                let a = random_feasible(m.labels(), c, &mut rng);
                let signed: f64 = a.iter().zip(m.labels()).map(|(v, &l)| if l { *v } else { -v }).sum();
                assert!(signed.abs() < 1e-9);
                assert!(dual_objective(&gram, m.labels(), &a) <= best + 1e-9);
            }
        }
    }
}

#[test]
fn kkt_conditions_hold_at_convergence() {
    let tol = 1e-3;
    for kernel in kernels() {
        let m = noisy(60, 4);
        let c = 2.0;
        let sol = solve_dual(&m, &kernel, c, &SvmOptions { kkt_tol: tol, ..SvmOptions::default() }).unwrap();
        assert!(sol.max_violation < tol);
        let gram = gram_matrix(&kernel, &m);
        let n = m.n_rows();
        let sy = |i: usize| if m.labels()[i] { 1.0 } else { -1.0 };
        let signed: f64 = (0..n).map(|i| sy(i) * sol.alpha[i]).sum();
        assert!(signed.abs() < 1e-6);
        for i in 0..n {
            assert!(sol.alpha[i] >= 0.0 && sol.alpha[i] <= c);
            let f: f64 = (0..n).map(|j| sy(j) * sol.alpha[j] * gram[i * n + j]).sum::<f64>() - sol.rho;
            let margin = sy(i) * f;
            if sol.alpha[i] == 0.0 {
                assert!(margin >= 1.0 - tol, "row {i}: margin {margin} at alpha 0");
            } else if sol.alpha[i] == c {
                assert!(margin <= 1.0 + tol, "row {i}: margin {margin} at alpha C");
            } else {
                assert!((margin - 1.0).abs() <= tol, "row {i}: margin {margin} for free vector");
            }
        }
    }
}

#[test]
fn xor_needs_gaussian_kernel() {
    let m = matrix(
        &[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        &[false, false, true, true],
    );
    let opts = SvmOptions::default();
    let accuracy = |kernel| {
        let model = fit_svm(&m, kernel, 10.0, &opts).unwrap();
        m.rows().zip(m.labels()).filter(|(r, &y)| model.classify(r).unwrap() == y).count() as f64 / 4.0
    };
    assert!(accuracy(KernelSpec::Linear) <= 0.75);
    assert_eq!(accuracy(KernelSpec::Gaussian { gamma: 1.0 }), 1.0);
}

#[test]
fn margin_matches_direction_search() {
    let rows = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.5],
        vec![0.2, 1.4],
        vec![3.0, 2.5],
        vec![4.0, 1.0],
        vec![3.2, 3.6],
    ];
    let y = [false, false, false, true, true, true];
    let model = fit_svm(&matrix(&rows, &y), KernelSpec::Linear, 1e4, &SvmOptions::default()).unwrap();
    let w = model.linear_weights().unwrap();
    let width = 2.0 / (w[0] * w[0] + w[1] * w[1]).sqrt();

    // Widest slab over unit directions: min over cases minus max over non-cases.
    let steps = 200_000;
    let mut best = f64::NEG_INFINITY;
    for s in 0..steps {
        let theta = std::f64::consts::TAU * s as f64 / steps as f64;
        let (u0, u1) = (theta.cos(), theta.sin());
        let proj = |r: &Vec<f64>| u0 * r[0] + u1 * r[1];
        let lo = rows.iter().zip(&y).filter(|(_, &l)| l).map(|(r, _)| proj(r)).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().zip(&y).filter(|(_, &l)| !l).map(|(r, _)| proj(r)).fold(f64::NEG_INFINITY, f64::max);
        best = best.max(lo - hi);
    }
    assert!((width - best).abs() / best < 0.02, "svm {width} vs search {best}");
}

#[test]
fn auc_of_risk_equals_auc_of_decision_value() {
    let m = noisy(50, 21);
    let model = fit_svm(&m, KernelSpec::Gaussian { gamma: 0.5 }, 1.0, &SvmOptions::default()).unwrap();
    let d: Vec<f64> = m.rows().map(|r| model.decision_value(r).unwrap()).collect();
    let p: Vec<f64> = m.rows().map(|r| model.predict_risk(r).unwrap()).collect();
    let a = auc(&ScoredSample::new(m.labels().to_vec(), d).unwrap()).unwrap();
    let b = auc(&ScoredSample::new(m.labels().to_vec(), p).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stored_alphas_respect_box() {
    let m = noisy(80, 6);
    let c = 0.5;
    let model = fit_svm(&m, KernelSpec::Gaussian { gamma: 1.0 }, c, &SvmOptions::default()).unwrap();
    assert!(model.alphas.iter().all(|a| *a != 0.0 && a.abs() <= c));
    assert!(model.alphas.iter().sum::<f64>().abs() < 1e-6);
    assert_eq!(model.alphas.len(), model.support_vectors.len());
}

fn row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, k)
}

proptest! {
    #[test]
    fn kernels_are_symmetric((x, z) in (1usize..6).prop_flat_map(|k| (row(k), row(k)))) {
        for kernel in kernels() {
            prop_assert_eq!(kernel_eval(&kernel, &x, &z).unwrap(), kernel_eval(&kernel, &z, &x).unwrap());
        }
    }

    #[test]
    fn gaussian_kernel_is_bounded((x, z) in (1usize..6).prop_flat_map(|k| (row(k), row(k))), gamma in 0.01f64..0.5) {
        let g = KernelSpec::Gaussian { gamma };
        let v = kernel_eval(&g, &x, &z).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert_eq!(v == 1.0, x == z);
        prop_assert_eq!(kernel_eval(&g, &x, &x).unwrap(), 1.0);
    }
}
