mod common;

use common::{dense_hat, dense_normal, literal_gcv, rmse, spectral_df, Lcg};
use nalgebra::{DMatrix, DVector};
use tsplines::solver::PenalizedSystem;
use tsplines::synth;
use tsplines::*;

fn setup(n: usize, m: usize, p: usize, seed: u64) -> (Vec<f64>, Vec<f64>, KnotVector, BasisMatrix) {
    let s = synth::gramacy_lee_series(n, 0.05, seed).unwrap();
    let t = s.data.times().to_vec();
    let y = s.data.values().to_vec();
    let kv = build_knot_vector(&t, m, p, Placement::Quantile).unwrap();
    let b = eval_basis(&kv, &t).unwrap();
    (t, y, kv, b)
}

#[test]
fn gcv_matches_literal_formula_on_small_instance() {
    // n = 10, c = 6 (m = 2, p = 4), q = 2, lambda = 0.1
    let (_, y, kv, b) = setup(10, 2, 4, 3);
    assert_eq!(kv.n_basis(), 6);
    let pen = penalty_matrix(2, 6, 0.1).unwrap();
    let got = gcv_score(&b, &y, &pen).unwrap();
    let want = literal_gcv(&b.to_dense(), &y, 2, 0.1);
    assert!((got - want).abs() < 1e-10 * want.max(1.0), "{got} vs {want}");
}

#[test]
fn gcv_matches_literal_formula_across_lambdas() {
    let (_, y, kv, b) = setup(60, 12, 3, 8);
    let dense = b.to_dense();
    for lambda in [1e-4, 0.01, 1.0, 100.0] {
        let pen = penalty_matrix(2, kv.n_basis(), lambda).unwrap();
        let got = gcv_score(&b, &y, &pen).unwrap();
        let want = literal_gcv(&dense, &y, 2, lambda);
        assert!((got - want).abs() < 1e-9 * want, "lambda {lambda}: {got} vs {want}");
    }
}

#[test]
fn fit_against_dense_normal_equations() {
    let (_, y, kv, b) = setup(50, 9, 4, 4);
    let lambda = 0.3;
    let pen = penalty_matrix(2, kv.n_basis(), lambda).unwrap();
    let fit = fit_penalized(&b, &y, &pen).unwrap();
    let dense = b.to_dense();
    let a = dense_normal(&dense, 2, lambda);
    let rhs = dense.transpose() * DVector::from_row_slice(&y);
    let theta = a.clone().lu().solve(&rhs).unwrap();
    for (u, v) in fit.theta.iter().zip(theta.iter()) {
        assert!((u - v).abs() < 1e-9);
    }
    // stationarity (B^T B + P) theta = B^T y
    let resid = &a * DVector::from_row_slice(&fit.theta) - &rhs;
    assert!(resid.norm() < 1e-10 * rhs.norm());
    let rss: f64 = y.iter().zip(&fit.fitted).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((rss - fit.residual_ss).abs() < 1e-12 * rss.max(1.0));
}

#[test]
fn smoother_matrix_consistency() {
    let (_, y, kv, b) = setup(40, 7, 3, 5);
    let pen = penalty_matrix(2, kv.n_basis(), 0.01).unwrap();
    let h = smoother_matrix(&b, &pen).unwrap();
    let hy = &h * DVector::from_row_slice(&y);
    let fit = fit_penalized(&b, &y, &pen).unwrap();
    for (u, v) in hy.iter().zip(&fit.fitted) {
        assert!((u - v).abs() < 1e-10);
    }
    let want = dense_hat(&b.to_dense(), 2, 0.01);
    assert!((&h - &want).abs().max() < 1e-10);
    // the banded trace equals the dense one
    assert!((fit.effective_dof - want.trace()).abs() < 1e-9);
}

#[test]
fn square_interpolation_gives_identity() {
    let t: Vec<f64> = (0..7).map(|i| i as f64 + 0.1 * (i as f64).sin()).collect();
    let kv = build_knot_vector(&t, 4, 3, Placement::Quantile).unwrap();
    assert_eq!(kv.n_basis(), t.len());
    let b = eval_basis(&kv, &t).unwrap();
    let h = smoother_matrix(&b, &penalty_matrix(1, 7, 0.0).unwrap()).unwrap();
    assert!((h - DMatrix::<f64>::identity(7, 7)).abs().max() < 1e-9);
}

#[test]
fn huge_lambda_leaves_only_the_constant() {
    let (_, _, kv, b) = setup(30, 6, 3, 6);
    let h = smoother_matrix(&b, &penalty_matrix(1, kv.n_basis(), 1e12).unwrap()).unwrap();
    assert!((h.trace() - 1.0).abs() < 1e-3);
}

#[test]
fn trace_is_monotone_and_bounded() {
    let (_, y, kv, b) = setup(80, 15, 4, 7);
    let c = kv.n_basis() as f64;
    for q in 1..4 {
        let sys = PenalizedSystem::new(&b, &y, q).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in LambdaSearch::default().grid() {
            let tr = sys.solve(lambda).unwrap().effective_dof;
            assert!(tr <= prev + 1e-9, "q {q}: tr(H) increased at {lambda}");
            assert!(tr >= q as f64 - 1e-6 && tr <= c + 1e-9);
            prev = tr;
        }
    }
}

#[test]
fn residual_df_matches_spectral_oracle() {
    let mut rng = Lcg(12);
    for n in [4, 9, 15] {
        // random orthogonal Q from QR, eigenvalues in [0, 1]
        let a = DMatrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
        let q = a.qr().q();
        let ev = DVector::from_fn(n, |_, _| rng.next_f64());
        let h = &q * DMatrix::from_diagonal(&ev) * q.transpose();
        let want = spectral_df(&h);
        assert!((residual_df(&h).unwrap() - want).abs() < 1e-9);
    }
    assert_eq!(residual_df(&DMatrix::zeros(6, 6)).unwrap(), 6.0);
}

#[test]
fn candidate_lambdas_never_beat_the_search() {
    // the selected lambda is at least as good as each of a few hand-picked values
    let (_, y, kv, b) = setup(60, 20, 4, 21);
    let choice = minimize_gcv_lambda(&b, &y, 2).unwrap();
    for lambda in [0.5, 0.01, 0.005, 0.001] {
        let g = gcv_score(&b, &y, &penalty_matrix(2, kv.n_basis(), lambda).unwrap()).unwrap();
        assert!(choice.cost <= g * (1.0 + 1e-12), "{lambda}: {g} < {}", choice.cost);
    }
}

#[test]
fn strong_noise_pushes_lambda_off_the_floor() {
    let t: Vec<f64> = (0..120).map(|i| i as f64 / 119.0).collect();
    let truth: Vec<f64> = t.iter().map(|&x| synth::smooth_truth(x)).collect();
    let mut rng = Lcg(5);
    let y: Vec<f64> = truth
        .iter()
        .map(|v| {
            // sum of uniforms: roughly normal, sd 0.5
            let z: f64 = (0..12).map(|_| rng.next_f64()).sum::<f64>() - 6.0;
            v + 0.5 * z
        })
        .collect();
    let kv = build_knot_vector(&t, 40, 4, Placement::Quantile).unwrap();
    let b = eval_basis(&kv, &t).unwrap();
    let choice = minimize_gcv_lambda(&b, &y, 2).unwrap();
    assert!(choice.lambda > 1e-4);
    let fit_at = |lambda: f64| fit_penalized(&b, &y, &penalty_matrix(2, kv.n_basis(), lambda).unwrap()).unwrap();
    let selected = rmse(&fit_at(choice.lambda).fitted, &truth);
    let floor = rmse(&fit_at(1e-4).fitted, &truth);
    assert!(selected < floor, "{selected} vs {floor}");
}

#[test]
fn error_variance_is_unbiased_in_simulation() {
    // fixed hyperparameters, 500 replicates
    let sigma = 0.2;
    let t: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let kv = build_knot_vector(&t, 10, 4, Placement::Quantile).unwrap();
    let b = eval_basis(&kv, &t).unwrap();
    let pen = penalty_matrix(2, kv.n_basis(), 0.01).unwrap();
    let df = residual_df(&smoother_matrix(&b, &pen).unwrap()).unwrap();
    let mut rng = synth::rng(77);
    let noise = rand_distr::Normal::new(0.0, sigma).unwrap();
    let mut total = 0.0;
    for _ in 0..500 {
        let y: Vec<f64> = t
            .iter()
            .map(|&x| synth::smooth_truth(x) + rand_distr::Distribution::sample(&noise, &mut rng))
            .collect();
        let fit = fit_penalized(&b, &y, &pen).unwrap();
        total += error_variance(&y, &b, &fit.theta, df).unwrap();
    }
    let mean = total / 500.0;
    assert!((mean / (sigma * sigma) - 1.0).abs() < 0.10, "mean sigma2 {mean}");
}

#[test]
fn linear_data_with_quantile_knots_is_not_in_the_penalty_null_space() {
    // A line is exactly representable (coefficients at the Greville abscissae)
    // but with uneven knots those abscissae are unevenly spaced, so the
    // second-difference penalty does not vanish and shrinks the fit away
    // from the line. With equidistant knots it does vanish.
    let t = [0.0, 0.1, 0.15, 0.2, 0.9, 1.4, 2.0, 2.1, 5.0, 9.0];
    let y: Vec<f64> = t.iter().map(|x| 1.0 + 2.0 * x).collect();
    for (placement, vanishes) in [(Placement::Quantile, false), (Placement::Equidistant, true)] {
        let kv = build_knot_vector(&t, 4, 3, placement).unwrap();
        let k = kv.knots();
        let greville: Vec<f64> = (0..kv.n_basis()).map(|i| (k[i + 1] + k[i + 2] + k[i + 3]) / 3.0).collect();
        let theta: Vec<f64> = greville.iter().map(|x| 1.0 + 2.0 * x).collect();
        let b = eval_basis(&kv, &t).unwrap();
        for (f, v) in b.mul_vec(&theta).iter().zip(&y) {
            assert!((f - v).abs() < 1e-12);
        }
        let pen = penalty_matrix(2, kv.n_basis(), 1.0).unwrap();
        let roughness = pen.quadratic_form(&theta);
        assert_eq!(roughness < 1e-20, vanishes, "{placement:?}: {roughness}");
        let fit = fit_penalized(&b, &y, &pen).unwrap();
        let err = fit.fitted.iter().zip(&y).map(|(f, v)| (f - v).abs()).fold(0.0, f64::max);
        assert_eq!(err < 1e-8, vanishes, "{placement:?}: {err}");
    }
}
