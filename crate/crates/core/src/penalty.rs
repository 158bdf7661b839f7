//! Difference penalties on adjacent spline coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coefficients of the order-`q` difference stencil, lowest index first.
///
/// `q = 2` gives `[1, -2, 1]`.
pub fn difference_stencil(q: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for _ in 0..q {
        let mut next = vec![0.0; w.len() + 1];
        for (k, c) in w.iter().enumerate() {
            next[k] -= c;
            next[k + 1] += c;
        }
        w = next;
    }
    w
}

/// The `(c - q) x c` matrix form of the order-`q` difference operator.
pub fn difference_matrix(q: usize, c: usize) -> Result<DMatrix<f64>> {
    check_order(q, c)?;
    let w = difference_stencil(q);
    let mut d = DMatrix::zeros(c - q, c);
    for r in 0..c - q {
        for (k, v) in w.iter().enumerate() {
            d[(r, r + k)] = *v;
        }
    }
    Ok(d)
}

fn check_order(q: usize, c: usize) -> Result<()> {
    if q == 0 || q >= c {
        return Err(Error::InvalidOrder {
            order: q,
            n_coeffs: c,
        });
    }
    Ok(())
}

/// Penalty order, smoothing parameter and the matrices they induce.
#[derive(Debug, Clone)]
pub struct PenaltySpec {
    order: usize,
    lambda: f64,
    difference: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

impl PenaltySpec {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_coeffs(&self) -> usize {
        self.matrix.nrows()
    }

    /// `D_q`.
    pub fn difference(&self) -> &DMatrix<f64> {
        &self.difference
    }

    /// `P = lambda * D_q^T D_q`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `theta^T P theta`.
    pub fn quadratic_form(&self, theta: &[f64]) -> f64 {
        let d = self.difference.nrows();
        let q = self.order;
        let w = difference_stencil(q);
        let sum: f64 = (0..d)
            .map(|r| {
                let diff: f64 = w.iter().zip(&theta[r..r + q + 1]).map(|(a, b)| a * b).sum();
                diff * diff
            })
            .sum();
        self.lambda * sum
    }
}

/// Lower band of `D_q^T D_q` as `band[i][k] = (D^T D)[i][i - k]`, built
/// from the stencil without forming `D_q`.
pub(crate) fn unit_penalty_band(q: usize, c: usize) -> Vec<Vec<f64>> {
    let w = difference_stencil(q);
    let mut band = vec![vec![0.0; q + 1]; c];
    // row r of D touches columns r..=r+q
    for r in 0..c.saturating_sub(q) {
        for a in 0..=q {
            for b in 0..=a {
                band[r + a][a - b] += w[a] * w[b];
            }
        }
    }
    band
}

/// Builds `P = lambda * D_q^T D_q` for `c` coefficients.
pub fn penalty_matrix(q: usize, c: usize, lambda: f64) -> Result<PenaltySpec> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "smoothing parameter must be finite and non-negative, got {lambda}"
        )));
    }
    let difference = difference_matrix(q, c)?;
    let mut matrix = DMatrix::zeros(c, c);
    for (i, row) in unit_penalty_band(q, c).iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            if k <= i {
                matrix[(i, i - k)] = lambda * v;
                matrix[(i - k, i)] = lambda * v;
            }
        }
    }
    Ok(PenaltySpec {
        order: q,
        lambda,
        difference,
        matrix,
    })
}
