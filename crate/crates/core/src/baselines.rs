//! Comparator models: global polynomials, local linear interpolation, and
//! independent least-squares lines over fixed calendar windows.

use nalgebra::{DMatrix, DVector};

use crate::calendar::half_year_boundaries;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Least-squares polynomial in the scaled variable `x = (t - center) / scale`,
/// which maps the data span onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    degree: usize,
    /// Ascending powers of `x`.
    coefficients: Vec<f64>,
    center: f64,
    scale: f64,
}

impl PolyModel {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn centering(&self) -> (f64, f64) {
        (self.center, self.scale)
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.scale;
        let dx = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c);
        dx / self.scale
    }

    pub fn predict(&self, epochs: &[f64]) -> Vec<f64> {
        epochs.iter().map(|&t| self.value(t)).collect()
    }

    pub fn predict_derivative(&self, epochs: &[f64]) -> Vec<f64> {
        epochs.iter().map(|&t| self.derivative(t)).collect()
    }

    /// Coefficients of the same polynomial in raw powers of `t`.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        // expand sum_k a_k ((t - c)/s)^k
        let d = self.degree;
        let mut out = vec![0.0; d + 1];
        for (k, a) in self.coefficients.iter().enumerate() {
            let scaled = a / self.scale.powi(k as i32);
            let mut binom = 1.0;
            for j in 0..=k {
                // term t^j (-c)^(k-j) C(k, j)
                out[j] += scaled * binom * (-self.center).powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// Least-squares polynomial of the given degree.
pub fn fit_polynomial(data: &TimeSeries, degree: usize) -> Result<PolyModel> {
    let n = data.len();
    if n < degree + 1 {
        return Err(Error::InsufficientData {
            have: n,
            need: degree + 1,
        });
    }
    let (lo, hi) = data.span();
    let center = 0.5 * (lo + hi);
    let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let v = DMatrix::from_fn(n, degree + 1, |i, k| ((data.times()[i] - center) / scale).powi(k as i32));
    let y = DVector::from_row_slice(data.values());
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::SingularDesign(format!(
            "degree-{degree} polynomial on {} distinct epochs",
            data.unique_times().len()
        )));
    }
    let coef = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::SingularDesign(e.to_string()))?;
    Ok(PolyModel {
        degree,
        coefficients: coef.iter().copied().collect(),
        center,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiecewiseKind {
    Interpolation,
    Windowed,
}

/// `value_at_start + slope * (t - start)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub value_at_start: f64,
    pub slope: f64,
}

/// One piece on `[start, end)`; `line` is `None` where a window had too few
/// samples for an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub line: Option<Line>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearModel {
    kind: PiecewiseKind,
    segments: Vec<Segment>,
}

impl PiecewiseLinearModel {
    pub fn kind(&self) -> PiecewiseKind {
        self.kind
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        if let Some(last) = self.segments.last() {
            b.push(last.end);
        }
        b
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.segments[0].start, self.segments[self.segments.len() - 1].end)
    }

    fn segment_at(&self, t: f64) -> Result<&Segment> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { epoch: t, lo, hi });
        }
        let i = self.segments.partition_point(|s| s.start <= t);
        Ok(&self.segments[i.saturating_sub(1)])
    }

    /// Value at `t`, `None` inside a window without an estimate.
    pub fn value(&self, t: f64) -> Result<Option<f64>> {
        let s = self.segment_at(t)?;
        Ok(s.line.map(|l| l.value_at_start + l.slope * (t - s.start)))
    }

    /// Slope of the piece containing `t` (the right-hand piece at a node).
    pub fn derivative(&self, t: f64) -> Result<Option<f64>> {
        Ok(self.segment_at(t)?.line.map(|l| l.slope))
    }

    pub fn predict(&self, epochs: &[f64]) -> Result<Vec<Option<f64>>> {
        epochs.iter().map(|&t| self.value(t)).collect()
    }

    pub fn predict_derivative(&self, epochs: &[f64]) -> Result<Vec<Option<f64>>> {
        epochs.iter().map(|&t| self.derivative(t)).collect()
    }

    /// `(boundary, right - left)` at each interior breakpoint where both
    /// neighbours have an estimate.
    pub fn boundary_jumps(&self) -> Vec<(f64, f64)> {
        self.segments
            .windows(2)
            .filter_map(|w| {
                let (l, r) = (w[0].line?, w[1].line?);
                let left = l.value_at_start + l.slope * (w[0].end - w[0].start);
                Some((w[1].start, r.value_at_start - left))
            })
            .collect()
    }
}

/// Averages values at repeated epochs.
fn collapse_duplicates(data: &TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let mut t: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut count: Vec<f64> = Vec::new();
    for (&ti, &yi) in data.times().iter().zip(data.values()) {
        if t.last() == Some(&ti) {
            *y.last_mut().unwrap() += yi;
            *count.last_mut().unwrap() += 1.0;
        } else {
            t.push(ti);
            y.push(yi);
            count.push(1.0);
        }
    }
    for (v, c) in y.iter_mut().zip(&count) {
        *v /= c;
    }
    (t, y)
}

/// Piecewise-linear curve through every (duplicate-averaged) sample.
pub fn linear_interpolation(data: &TimeSeries) -> Result<PiecewiseLinearModel> {
    let (t, y) = collapse_duplicates(data);
    if t.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "interpolation needs 2 distinct epochs, got {}",
            t.len()
        )));
    }
    let segments = (0..t.len() - 1)
        .map(|i| Segment {
            start: t[i],
            end: t[i + 1],
            line: Some(Line {
                value_at_start: y[i],
                slope: (y[i + 1] - y[i]) / (t[i + 1] - t[i]),
            }),
        })
        .collect();
    Ok(PiecewiseLinearModel {
        kind: PiecewiseKind::Interpolation,
        segments,
    })
}

/// How the time axis is cut into windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowRule {
    /// January 1 - June 30 and July 1 - December 31.
    HalfYear,
    /// `[origin + k * width, origin + (k + 1) * width)`.
    Fixed { origin: f64, width: f64 },
}

fn window_boundaries(rule: WindowRule, lo: f64, hi: f64) -> Result<Vec<f64>> {
    match rule {
        WindowRule::HalfYear => half_year_boundaries(lo, hi),
        WindowRule::Fixed { origin, width } => {
            if !(width > 0.0) || !width.is_finite() || !origin.is_finite() {
                return Err(Error::InvalidInput(format!("window width {width} must be positive")));
            }
            let first = ((lo - origin) / width).floor();
            let mut out = Vec::new();
            let mut k = first;
            loop {
                let b = origin + k * width;
                out.push(b);
                if b > hi {
                    break;
                }
                k += 1.0;
            }
            Ok(out)
        }
    }
}

/// Independent least-squares line in each window; windows with fewer than
/// two distinct epochs carry no estimate.
pub fn windowed_linear(data: &TimeSeries, rule: WindowRule) -> Result<PiecewiseLinearModel> {
    let (lo, hi) = data.span();
    let bounds = window_boundaries(rule, lo, hi)?;
    let mut segments = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (start, end) = (w[0], w[1]);
        let idx: Vec<usize> = (0..data.len())
            .filter(|&i| data.times()[i] >= start && data.times()[i] < end)
            .collect();
        segments.push(Segment {
            start,
            end,
            line: window_line(data, &idx, start),
        });
    }
    Ok(PiecewiseLinearModel {
        kind: PiecewiseKind::Windowed,
        segments,
    })
}

fn window_line(data: &TimeSeries, idx: &[usize], start: f64) -> Option<Line> {
    let t: Vec<f64> = idx.iter().map(|&i| data.times()[i] - start).collect();
    let y: Vec<f64> = idx.iter().map(|&i| data.values()[i]).collect();
    let (slope, intercept) = least_squares_line(&t, &y)?;
    Some(Line {
        value_at_start: intercept,
        slope,
    })
}

/// `(slope, intercept)` of the least-squares line, `None` with fewer than two
/// distinct abscissae.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
