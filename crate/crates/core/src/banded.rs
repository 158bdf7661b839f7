//! Symmetric banded matrices and their Cholesky factorization.
//!
//! Normal matrices `B^T B + P` are banded with half-bandwidth `max(p, q)`,
//! so factorization, solves, and the in-band entries of the inverse all cost
//! `O(c * bw^2)` rather than `O(c^3)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix, `data[i * (bw + 1) + k] = A[i][i - k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// `A[i][j]`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        if k > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + k]
        }
    }

    /// Mutable `A[i][i - k]`; `k <= min(i, bw)`.
    pub fn at_mut(&mut self, i: usize, k: usize) -> &mut f64 {
        debug_assert!(k <= self.bw && k <= i);
        &mut self.data[i * (self.bw + 1) + k]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)]).sum()
    }

    /// `self + scale * other`, where `other` may have a narrower band.
    pub fn add_scaled(&self, other: &SymBand, scale: f64) -> SymBand {
        assert_eq!(self.n, other.n);
        assert!(other.bw <= self.bw);
        let mut out = self.clone();
        for i in 0..self.n {
            for k in 0..=other.bw.min(i) {
                *out.at_mut(i, k) += scale * other.data[i * (other.bw + 1) + k];
            }
        }
        out
    }

    /// Sum of `self[i][j] * other[j][i]` over the band of `other`.
    ///
    /// With `self = A^{-1}` restricted to a band that covers `other`, this is
    /// `tr(A^{-1} other)`.
    pub fn trace_product(&self, other: &SymBand) -> f64 {
        assert!(other.bw <= self.bw);
        let mut sum = 0.0;
        for i in 0..self.n {
            sum += self.get(i, i) * other.get(i, i);
            for k in 1..=other.bw.min(i) {
                sum += 2.0 * self.get(i, i - k) * other.get(i, i - k);
            }
        }
        sum
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }
}

/// `A = L L^T` for a symmetric positive-definite banded `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedCholesky {
    lower: SymBand,
    /// Diagonal ridge that had to be added for the factorization to succeed.
    ridge: Option<f64>,
}

impl BandedCholesky {
    /// Factors `a`, retrying once with a `1e-12 * trace` ridge if the plain
    /// factorization breaks down.
    pub fn factor(a: &SymBand) -> Result<Self> {
        if let Some(lower) = try_factor(a, 0.0) {
            return Ok(Self { lower, ridge: None });
        }
        let ridge = 1e-12 * a.trace().abs();
        if ridge > 0.0 {
            if let Some(lower) = try_factor(a, ridge) {
                log::warn!("normal matrix needed a diagonal ridge of {ridge:e}");
                return Ok(Self {
                    lower,
                    ridge: Some(ridge),
                });
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.lower.n
    }

    pub fn bandwidth(&self) -> usize {
        self.lower.bw
    }

    pub fn ridge(&self) -> Option<f64> {
        self.ridge
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower.data[i * (self.lower.bw + 1) + (i - j)]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let bw = self.bandwidth();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(bw)..i {
                s -= self.l(i, j) * x[j];
            }
            x[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l(k, i) * x[k];
            }
            x[i] = s / self.l(i, i);
        }
        x
    }

    /// Entries of `A^{-1}` within the band of `A`, by the backward recursion
    /// `L^T S = L^{-1}` restricted to the band.
    pub fn inverse_band(&self) -> SymBand {
        let n = self.dim();
        let bw = self.bandwidth();
        let mut s = SymBand::zeros(n, bw);
        for i in (0..n).rev() {
            let lii = self.l(i, i);
            let kmax = (i + bw).min(n - 1);
            for j in (i..=kmax).rev() {
                let mut acc = if j == i { 1.0 / lii } else { 0.0 };
                for k in i + 1..=kmax {
                    acc -= self.l(k, i) * s.get(k, j);
                }
                *s.at_mut(j, j - i) = acc / lii;
            }
        }
        s
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.l(i, i).ln()).sum()
    }
}

fn try_factor(a: &SymBand, ridge: f64) -> Option<SymBand> {
    let n = a.n;
    let bw = a.bw;
    let mut l = SymBand::zeros(n, bw);
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let mut sum = a.get(i, j);
            if i == j {
                sum += ridge;
            }
            for k in lo.max(j.saturating_sub(bw))..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                *l.at_mut(i, 0) = sum.sqrt();
            } else {
                *l.at_mut(i, i - j) = sum / l.get(j, j);
            }
        }
    }
    Some(l)
}
