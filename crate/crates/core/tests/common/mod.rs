//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Textbook Cox-de Boor recursion, `0/0 := 0`, half-open spans except that
/// the right end of the domain belongs to the last non-empty span.
pub fn naive_bspline(knots: &[f64], i: usize, p: usize, t: f64, domain_hi: f64) -> f64 {
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        // at the domain end only the span closing there counts
        if t == domain_hi {
            return if b == domain_hi && a < b { 1.0 } else { 0.0 };
        }
        return if a <= t && t < b { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (t - knots[i]) / d1 * naive_bspline(knots, i, p - 1, t, domain_hi);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - t) / d2 * naive_bspline(knots, i + 1, p - 1, t, domain_hi);
    }
    v
}

/// Central difference `(f(t + h) - f(t - h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Dense `(B^T B + lambda D^T D)` with the difference matrix built by
/// repeated first differencing.
pub fn dense_normal(b: &DMatrix<f64>, q: usize, lambda: f64) -> DMatrix<f64> {
    let c = b.ncols();
    let mut d = DMatrix::<f64>::identity(c, c);
    for _ in 0..q {
        let r = d.nrows();
        let mut next = DMatrix::zeros(r - 1, c);
        for i in 0..r - 1 {
            let row = d.row(i + 1) - d.row(i);
            next.set_row(i, &row);
        }
        d = next;
    }
    b.transpose() * b + d.transpose() * d * lambda
}

/// `H = B (B^T B + P)^{-1} B^T` through a dense inverse.
pub fn dense_hat(b: &DMatrix<f64>, q: usize, lambda: f64) -> DMatrix<f64> {
    let inv = dense_normal(b, q, lambda).try_inverse().expect("invertible normal matrix");
    b * inv * b.transpose()
}

/// The GCV score written out literally: squared residuals over the squared
/// common factor `1 - tr(H)/n`.
pub fn literal_gcv(b: &DMatrix<f64>, y: &[f64], q: usize, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let h = dense_hat(b, q, lambda);
    let yv = DVector::from_row_slice(y);
    let r = &yv - &h * &yv;
    let denom = 1.0 - h.trace() / n;
    r.iter().map(|ri| (ri / denom).powi(2)).sum()
}

/// `sum (1 - h_i)^2` over the eigenvalues of a symmetric `H`.
pub fn spectral_df(h: &DMatrix<f64>) -> f64 {
    h.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|e| (1.0 - e).powi(2))
        .sum()
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Small deterministic generator for tests that only need "some" numbers.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Evenly spaced epochs strictly inside `(lo, hi)`.
pub fn interior_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect()
}
