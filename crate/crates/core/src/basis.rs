//! Knot vectors and B-spline basis evaluation.
//!
//! A knot vector of degree `p` with `m` sections holds `m + 2p + 1` knots;
//! the modeling domain `[u_0, u_m]` sits at full-vector indices `p` and
//! `p + m`, and there are `c = m + p` basis functions. The last span is
//! closed so that `u_m` itself can be evaluated.
//!
//! Evaluation uses the triangular form of the Cox-de Boor recursion: for an
//! epoch in span `s` only `B_{s-p}, ..., B_s` are non-zero, so each row of a
//! [`BasisMatrix`] is stored as a window of `p + 1` values plus its start
//! column.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How interior knots are distributed over the data span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Interior knot `a` at the `a/m` sample quantile of the unique epochs.
    #[default]
    Quantile,
    /// Interior knots evenly spaced between the first and last epoch.
    Equidistant,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantile" => Ok(Placement::Quantile),
            "equidistant" => Ok(Placement::Equidistant),
            other => Err(Error::InvalidInput(format!("unknown knot placement {other:?}"))),
        }
    }
}

/// Non-decreasing knot sequence with `p` knots on either side of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
    sections: usize,
}

impl KnotVector {
    /// Wraps a full knot sequence of length `m + 2p + 1`.
    ///
    /// Any value may repeat at most `p + 1` times and the domain must have
    /// positive length.
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if knots.len() < 2 * degree + 2 {
            return Err(Error::InvalidInput(format!(
                "{} knots cannot carry degree {degree} (need at least {})",
                knots.len(),
                2 * degree + 2
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidInput("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("knots must be non-decreasing".into()));
        }
        let sections = knots.len() - 2 * degree - 1;
        check_multiplicity(&knots, degree + 1)?;
        if knots[degree + sections] <= knots[degree] {
            return Err(Error::InvalidInput("knot domain has zero length".into()));
        }
        Ok(Self {
            knots,
            degree,
            sections,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of sections `m` between `u_0` and `u_m`.
    pub fn sections(&self) -> usize {
        self.sections
    }

    /// Number of basis functions, `m + p`.
    pub fn n_basis(&self) -> usize {
        self.sections + self.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.degree + self.sections])
    }

    /// `u_0, ..., u_m`.
    pub fn domain_knots(&self) -> &[f64] {
        &self.knots[self.degree..=self.degree + self.sections]
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t >= lo && t <= hi
    }

    /// Index `s` of the full knot vector with `knots[s] <= t < knots[s + 1]`,
    /// closing the last non-empty span at `u_m`.
    pub fn span_index(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { epoch: t, lo, hi });
        }
        let p = self.degree;
        let last = p + self.sections - 1;
        if t == hi {
            let mut s = last;
            while self.knots[s] == self.knots[s + 1] {
                s -= 1;
            }
            return Ok(s);
        }
        let domain = &self.knots[p..=p + self.sections];
        let s = p + domain.partition_point(|&k| k <= t) - 1;
        Ok(s.min(last))
    }

    /// Non-zero basis values `B_{s-deg}(t), ..., B_s(t)` of degree `deg <= p`
    /// in span `s`.
    fn local_values(&self, s: usize, t: f64, deg: usize, out: &mut [f64]) {
        let u = &self.knots;
        let mut left = [0.0; MAX_DEGREE + 1];
        let mut right = [0.0; MAX_DEGREE + 1];
        out[0] = 1.0;
        for j in 1..=deg {
            left[j] = t - u[s + 1 - j];
            right[j] = u[s + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }
}

/// Largest supported degree; the local-support modeling use rarely wants more
/// than 4.
pub const MAX_DEGREE: usize = 10;

fn check_multiplicity(values: &[f64], max: usize) -> Result<()> {
    let mut run = 1;
    for w in values.windows(2) {
        if w[1] == w[0] {
            run += 1;
            if run > max {
                return Err(Error::DegenerateKnots {
                    value: w[0],
                    multiplicity: run,
                    max,
                });
            }
        } else {
            run = 1;
        }
    }
    Ok(())
}

/// Builds the knot vector for `m` sections of degree `p` over the span of
/// `times`.
///
/// Interior quantiles use linear interpolation between order statistics of
/// the unique epochs. The `p` knots outside each end of the domain continue
/// with the mean width of the adjacent (up to `p`) sections.
pub fn build_knot_vector(
    times: &[f64],
    m: usize,
    p: usize,
    placement: Placement,
) -> Result<KnotVector> {
    if m == 0 {
        return Err(Error::InvalidInput("section count must be at least 1".into()));
    }
    if p == 0 || p > MAX_DEGREE {
        return Err(Error::InvalidInput(format!("degree {p} not in 1..={MAX_DEGREE}")));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("non-finite epoch".into()));
    }
    let mut unique = times.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    if unique.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 distinct epochs, got {}",
            unique.len()
        )));
    }

    let lo = unique[0];
    let hi = unique[unique.len() - 1];
    let mut domain = Vec::with_capacity(m + 1);
    domain.push(lo);
    for a in 1..m {
        let frac = a as f64 / m as f64;
        domain.push(match placement {
            Placement::Quantile => quantile_sorted(&unique, frac),
            Placement::Equidistant => lo + frac * (hi - lo),
        });
    }
    domain.push(hi);
    check_multiplicity(&domain, p)?;

    let k = p.min(m);
    let left_step = (domain[k] - domain[0]) / k as f64;
    let right_step = (domain[m] - domain[m - k]) / k as f64;

    let mut knots = Vec::with_capacity(m + 2 * p + 1);
    knots.extend((1..=p).rev().map(|j| lo - j as f64 * left_step));
    knots.extend_from_slice(&domain);
    knots.extend((1..=p).map(|j| hi + j as f64 * right_step));

    Ok(KnotVector {
        knots,
        degree: p,
        sections: m,
    })
}

/// Sample quantile of sorted data, interpolating linearly between order
/// statistics at position `(k - 1) * frac`.
pub fn quantile_sorted(sorted: &[f64], frac: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * frac;
    let i = h.floor() as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

/// Basis (or basis-derivative) values at a set of epochs.
///
/// Row `j` has at most `p + 1` non-zero entries, stored contiguously starting
/// at column [`BasisMatrix::row`]`.0`.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    epochs: Vec<f64>,
    n_basis: usize,
    width: usize,
    starts: Vec<usize>,
    local: Vec<f64>,
    derivative_order: u8,
}

impl BasisMatrix {
    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn n_rows(&self) -> usize {
        self.epochs.len()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn derivative_order(&self) -> u8 {
        self.derivative_order
    }

    /// Width of every row window (`p + 1`).
    pub fn window(&self) -> usize {
        self.width
    }

    /// Start column and non-zero window of row `j`.
    pub fn row(&self, j: usize) -> (usize, &[f64]) {
        (self.starts[j], &self.local[j * self.width..(j + 1) * self.width])
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        let (start, w) = self.row(j);
        if i >= start && i < start + self.width {
            w[i - start]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_rows(), self.n_basis);
        for j in 0..self.n_rows() {
            let (start, w) = self.row(j);
            for (k, v) in w.iter().enumerate() {
                out[(j, start + k)] = *v;
            }
        }
        out
    }

    /// `B * theta`.
    pub fn mul_vec(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_basis);
        (0..self.n_rows())
            .map(|j| {
                let (start, w) = self.row(j);
                w.iter().zip(&theta[start..]).map(|(b, t)| b * t).sum()
            })
            .collect()
    }

    /// `B^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_rows());
        let mut out = vec![0.0; self.n_basis];
        for (j, &vj) in v.iter().enumerate() {
            let (start, w) = self.row(j);
            for (k, b) in w.iter().enumerate() {
                out[start + k] += b * vj;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|j| self.row(j).1.iter().sum()).collect()
    }
}

/// Evaluates `B_i(t; p)` for every basis function at each epoch.
pub fn eval_basis(kv: &KnotVector, epochs: &[f64]) -> Result<BasisMatrix> {
    let p = kv.degree;
    let width = p + 1;
    let mut starts = Vec::with_capacity(epochs.len());
    let mut local = vec![0.0; epochs.len() * width];
    for (j, &t) in epochs.iter().enumerate() {
        let s = kv.span_index(t)?;
        kv.local_values(s, t, p, &mut local[j * width..(j + 1) * width]);
        starts.push(s - p);
    }
    Ok(BasisMatrix {
        epochs: epochs.to_vec(),
        n_basis: kv.n_basis(),
        width,
        starts,
        local,
        derivative_order: 0,
    })
}

/// Evaluates first derivatives `B'_i(t; p)` at each epoch.
///
/// `B'_i = p / (u_{i+p} - u_i) B_i(t; p-1) - p / (u_{i+p+1} - u_{i+1}) B_{i+1}(t; p-1)`,
/// with terms over a zero-length knot span taken as zero.
pub fn eval_basis_derivative(kv: &KnotVector, epochs: &[f64]) -> Result<BasisMatrix> {
    let p = kv.degree;
    if p == 0 {
        return Err(Error::InvalidInput(
            "derivative of a degree-0 basis is not defined".into(),
        ));
    }
    let u = &kv.knots;
    let width = p + 1;
    let pf = p as f64;
    let mut starts = Vec::with_capacity(epochs.len());
    let mut local = vec![0.0; epochs.len() * width];
    let mut lower = [0.0; MAX_DEGREE + 1];
    for (j, &t) in epochs.iter().enumerate() {
        let s = kv.span_index(t)?;
        // lower[r] = B_{s-p+1+r}(t; p-1), r = 0..p
        kv.local_values(s, t, p - 1, &mut lower);
        let lower_at = |i: usize| -> f64 {
            if i + p > s && i <= s {
                lower[i + p - 1 - s]
            } else {
                0.0
            }
        };
        let row = &mut local[j * width..(j + 1) * width];
        for (k, out) in row.iter_mut().enumerate() {
            let i = s - p + k;
            let d1 = u[i + p] - u[i];
            let d2 = u[i + p + 1] - u[i + 1];
            let a = if d1 > 0.0 { pf / d1 * lower_at(i) } else { 0.0 };
            let b = if d2 > 0.0 { pf / d2 * lower_at(i + 1) } else { 0.0 };
            *out = a - b;
        }
        starts.push(s - p);
    }
    Ok(BasisMatrix {
        epochs: epochs.to_vec(),
        n_basis: kv.n_basis(),
        width,
        starts,
        local,
        derivative_order: 1,
    })
}
