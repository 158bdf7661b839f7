mod common;

use common::Lcg;
use nalgebra::{DMatrix, DVector};
use tsplines::synth;
use tsplines::*;

fn series(t: Vec<f64>, y: Vec<f64>) -> TimeSeries {
    TimeSeries::new(t, y).unwrap()
}

fn sign_changes(d: &[f64]) -> usize {
    d.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

#[test]
fn exact_line_and_cubic() {
    let t: Vec<f64> = (0..9).map(|i| 2004.0 + 0.7 * i as f64).collect();
    let line: Vec<f64> = t.iter().map(|x| 3.0 - 0.25 * x).collect();
    let m = fit_polynomial(&series(t.clone(), line), 1).unwrap();
    let mono = m.monomial_coefficients();
    assert!((mono[1] + 0.25).abs() < 1e-10 && (mono[0] - 3.0).abs() < 1e-6);
    assert!((m.derivative(2006.1) + 0.25).abs() < 1e-12);

    let cubic = |x: f64| {
        let u = x - 2006.0;
        1.0 - 2.0 * u + 0.5 * u * u - 0.1 * u * u * u
    };
    let y: Vec<f64> = t.iter().map(|&x| cubic(x)).collect();
    let m = fit_polynomial(&series(t.clone(), y.clone()), 3).unwrap();
    for (p, v) in m.predict(&t).iter().zip(&y) {
        assert!((p - v).abs() < 1e-8);
    }
}

#[test]
fn centering_does_not_change_predictions() {
    // raw-power least squares on a well-conditioned range as the oracle
    let mut rng = Lcg(3);
    let t: Vec<f64> = (0..40).map(|_| rng.uniform(0.0, 3.0)).collect();
    let y: Vec<f64> = t.iter().map(|x| (2.0 * x).sin() + rng.uniform(-0.1, 0.1)).collect();
    for degree in 2..=5 {
        let m = fit_polynomial(&series(t.clone(), y.clone()), degree).unwrap();
        let v = DMatrix::from_fn(t.len(), degree + 1, |i, k| t[i].powi(k as i32));
        let coef = v.clone().svd(true, true).solve(&DVector::from_row_slice(&y), 1e-14).unwrap();
        let want = &v * &coef;
        let sorted = series(t.clone(), y.clone());
        let got = m.predict(sorted.times());
        // the series is stored sorted; map oracle values through the same order
        let mut idx: Vec<usize> = (0..t.len()).collect();
        idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        for (k, &i) in idx.iter().enumerate() {
            assert!((got[k] - want[i]).abs() < 1e-8, "degree {degree}");
        }
    }
}

#[test]
fn polynomial_needs_enough_points() {
    let s = series(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 0.0]);
    assert!(matches!(fit_polynomial(&s, 3), Err(Error::InsufficientData { .. })));
    // repeated epochs leave the design rank deficient
    let s = series(vec![1.0, 1.0, 2.0, 2.0], vec![0.0, 1.0, 2.0, 3.0]);
    assert!(fit_polynomial(&s, 2).is_err());
}

#[test]
fn quintic_overshoots_in_the_sparse_gap() {
    for seed in 0..5 {
        let s = synth::sampling_gap_series(seed).unwrap();
        let m = fit_polynomial(&s.data, 5).unwrap();
        let gap: Vec<f64> = (0..=650).map(|i| 2010.0 + i as f64 * 0.01).collect();
        let max_pred = m.predict(&gap).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let max_data = s.data.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max_pred > max_data, "seed {seed}: {max_pred} vs {max_data}");
    }
}

#[test]
fn interpolation_reproduces_nodes_and_secant_slopes() {
    let s = series(vec![0.0, 1.0, 1.0, 3.0], vec![2.0, 4.0, 6.0, 1.0]);
    let m = linear_interpolation(&s).unwrap();
    assert_eq!(m.breakpoints(), vec![0.0, 1.0, 3.0]);
    assert_eq!(m.value(1.0).unwrap(), Some(5.0));
    assert_eq!(m.value(0.0).unwrap(), Some(2.0));
    assert_eq!(m.value(3.0).unwrap(), Some(1.0));
    assert_eq!(m.derivative(0.5).unwrap(), Some(3.0));
    assert_eq!(m.derivative(2.0).unwrap(), Some(-2.0));
    assert!(m.value(3.5).is_err());
    assert!(linear_interpolation(&series(vec![1.0, 1.0], vec![0.0, 1.0])).is_err());
}

#[test]
fn interpolation_derivative_is_noisier_than_the_spline() {
    for seed in 0..5 {
        let s = synth::smooth_series(80, 0.1, 300 + seed).unwrap();
        let interp = linear_interpolation(&s.data).unwrap();
        let spline = fit(&s.data, &FitOptions::default()).unwrap();
        // one epoch per interpolation piece
        let mids: Vec<f64> = s.data.times().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let di: Vec<f64> = interp.predict_derivative(&mids).unwrap().into_iter().flatten().collect();
        let ds = spline.predict_derivative(&mids, 0.05).unwrap().mean;
        assert!(sign_changes(&di) >= sign_changes(&ds), "seed {seed}");
        assert!(sign_changes(&di) > 10);
    }
}

#[test]
fn windows_single_empty_and_discontinuous() {
    // one window holding everything is the global least-squares line
    let t: Vec<f64> = (0..10).map(|i| 2001.05 + 0.04 * i as f64).collect();
    let y: Vec<f64> = t.iter().map(|x| 2.0 * x + ((x * 37.0) as f64).sin()).collect();
    let s = series(t.clone(), y.clone());
    let w = windowed_linear(&s, WindowRule::HalfYear).unwrap();
    assert_eq!(w.segments().len(), 1);
    let (slope, intercept) = tsplines::baselines::least_squares_line(&t, &y).unwrap();
    let l = w.segments()[0].line.unwrap();
    assert!((l.slope - slope).abs() < 1e-9);
    assert!((l.value_at_start - (intercept + slope * w.segments()[0].start)).abs() < 1e-9);

    // nothing between 2002.0 and 2003.0: that window carries no estimate
    let s = series(vec![2001.1, 2001.3, 2001.6, 2003.2, 2003.4], vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    let w = windowed_linear(&s, WindowRule::Fixed { origin: 2001.0, width: 1.0 }).unwrap();
    let lines: Vec<bool> = w.segments().iter().map(|g| g.line.is_some()).collect();
    assert_eq!(lines, vec![true, false, true]);
    assert_eq!(w.value(2002.5).unwrap(), None);

    // separately fitted halves of a kinked series do not meet
    let t: Vec<f64> = (0..20).map(|i| 2005.0 + 0.049 * i as f64 + 0.01).collect();
    let y: Vec<f64> = t.iter().map(|&x| if x < 2005.5 { x - 2005.0 } else { 3.0 * (x - 2005.0) }).collect();
    let w = windowed_linear(&series(t, y), WindowRule::HalfYear).unwrap();
    let jumps = w.boundary_jumps();
    assert_eq!(jumps.len(), 1);
    assert!(jumps[0].1.abs() > 0.1);
    assert!(windowed_linear(&s, WindowRule::Fixed { origin: 0.0, width: 0.0 }).is_err());
}

#[test]
fn one_perturbed_sample_moves_the_whole_polynomial() {
    let s = synth::locality_series(120, 0.1, 4).unwrap();
    let base = fit_polynomial(&s.data, 5).unwrap();
    let mut y = s.data.values().to_vec();
    y[12] += 1.0;
    let moved = fit_polynomial(&series(s.data.times().to_vec(), y), 5).unwrap();
    let far = (moved.value(10.0) - base.value(10.0)).abs();
    assert!(far > 1e-3, "{far}");
}
