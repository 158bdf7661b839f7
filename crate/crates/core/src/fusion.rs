//! Combining sparse observations with a dense model series.
//!
//! The dense series `h_s` (e.g. a 10-day surface-process model) is shifted to
//! pass through the first observation, the residual `h - h_s` is formed at the
//! observation epochs and smoothed with a spline, and the reconstruction is
//! `h_s + f_dibc` on the dense epochs. Uncertainty of the dense series itself
//! is taken as negligible, so the reconstruction band is that of the
//! residual model alone.

use std::io::Write;
use std::path::Path;

use crate::baselines::least_squares_line;
use crate::error::{Error, Result};
use crate::model::{fit, FitOptions, PredictionBand, SplineModel};
use crate::series::{fmt_f64, TimeSeries};

#[derive(Debug, Clone)]
pub struct FusionInput {
    observations: TimeSeries,
    dense_model: TimeSeries,
}

impl FusionInput {
    /// Requires strictly increasing dense epochs whose span covers every
    /// observation epoch.
    pub fn new(observations: TimeSeries, dense_model: TimeSeries) -> Result<Self> {
        if dense_model.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "dense model needs at least 2 samples, got {}",
                dense_model.len()
            )));
        }
        if let Some(w) = dense_model.times().windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "dense model epochs must be strictly increasing (repeated {})",
                w[0]
            )));
        }
        let (lo, hi) = dense_model.span();
        let outside: Vec<f64> = observations
            .times()
            .iter()
            .copied()
            .filter(|&t| t < lo || t > hi)
            .collect();
        if !outside.is_empty() {
            return Err(Error::Coverage { lo, hi, epochs: outside });
        }
        Ok(Self {
            observations,
            dense_model,
        })
    }

    pub fn observations(&self) -> &TimeSeries {
        &self.observations
    }

    pub fn dense_model(&self) -> &TimeSeries {
        &self.dense_model
    }
}

/// Linear interpolation of a strictly increasing series at `t`.
pub fn interpolate(series: &TimeSeries, t: f64) -> Result<f64> {
    let ts = series.times();
    let ys = series.values();
    let (lo, hi) = series.span();
    if !(t >= lo && t <= hi) {
        return Err(Error::Coverage {
            lo,
            hi,
            epochs: vec![t],
        });
    }
    let k = ts.partition_point(|&s| s <= t);
    if k == 0 {
        return Ok(ys[0]);
    }
    let i = k - 1;
    if ts[i] == t || i + 1 == ts.len() {
        return Ok(ys[i]);
    }
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    Ok(ys[i] + w * (ys[i + 1] - ys[i]))
}

/// Offset that makes the dense series pass through the first observation.
pub fn alignment_shift(input: &FusionInput) -> Result<f64> {
    let obs = &input.observations;
    let first = interpolate(&input.dense_model, obs.times()[0])?;
    Ok(obs.values()[0] - first)
}

/// The dense series shifted by [`alignment_shift`].
pub fn align_dense_model(input: &FusionInput) -> Result<TimeSeries> {
    let shift = alignment_shift(input)?;
    Ok(input.dense_model.map_values(|_, v| v + shift))
}

/// `h - h_s` at each observation epoch, against the aligned dense series.
pub fn compute_difference(input: &FusionInput) -> Result<TimeSeries> {
    let aligned = align_dense_model(input)?;
    difference_against(&input.observations, &aligned)
}

fn difference_against(obs: &TimeSeries, aligned: &TimeSeries) -> Result<TimeSeries> {
    let mut outside = Vec::new();
    let mut values = Vec::with_capacity(obs.len());
    for (&t, &h) in obs.times().iter().zip(obs.values()) {
        match interpolate(aligned, t) {
            Ok(hs) => values.push(h - hs),
            Err(_) => outside.push(t),
        }
    }
    if !outside.is_empty() {
        let (lo, hi) = aligned.span();
        return Err(Error::Coverage { lo, hi, epochs: outside });
    }
    TimeSeries::with_sigma(obs.times().to_vec(), values, obs.sigma().map(<[f64]>::to_vec))
}

#[derive(Debug, Clone)]
pub struct FusionResult {
    pub shift: f64,
    pub aligned_dense: TimeSeries,
    pub difference_series: TimeSeries,
    pub dibc_model: SplineModel,
    /// At the dense epochs inside the observation span (no extrapolation).
    pub reconstruction: PredictionBand,
}

impl FusionResult {
    /// Reconstruction mean `h_s(t) + f_dibc(t)` at arbitrary epochs, with the
    /// dense series interpolated linearly.
    pub fn at_epochs(&self, epochs: &[f64]) -> Result<Vec<f64>> {
        let f = self.dibc_model.evaluate(epochs)?;
        epochs
            .iter()
            .zip(f)
            .map(|(&t, v)| Ok(interpolate(&self.aligned_dense, t)? + v))
            .collect()
    }
}

/// Full pipeline: align, difference, fit, recombine.
pub fn reconstruct(input: &FusionInput, options: &FitOptions, alpha: f64) -> Result<FusionResult> {
    let shift = alignment_shift(input)?;
    let aligned_dense = input.dense_model.map_values(|_, v| v + shift);
    let difference_series = difference_against(&input.observations, &aligned_dense)?;
    let dibc_model = fit(&difference_series, options)?;

    let (lo, hi) = dibc_model.domain();
    let (epochs, hs): (Vec<f64>, Vec<f64>) = aligned_dense
        .times()
        .iter()
        .zip(aligned_dense.values())
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, &v)| (t, v))
        .unzip();
    let mut reconstruction = dibc_model.predict(&epochs, alpha)?;
    for (m, h) in reconstruction.mean.iter_mut().zip(&hs) {
        *m += h;
    }
    Ok(FusionResult {
        shift,
        aligned_dense,
        difference_series,
        dibc_model,
        reconstruction,
    })
}

/// Derivative of series A next to the value of series B at common epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossRow {
    pub epoch: f64,
    pub derivative: f64,
    pub value_b: f64,
    pub derivative_std: f64,
    pub derivative_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossTable {
    pub rows: Vec<CrossRow>,
    pub alpha: f64,
}

impl CrossTable {
    /// Least-squares `(slope, intercept)` of A's derivative against B's value.
    /// With A in metres, B in kilometres and epochs in years, the slope is in
    /// m yr^-1 per km; see [`per_month`].
    pub fn relationship(&self) -> Option<(f64, f64)> {
        let x: Vec<f64> = self.rows.iter().map(|r| r.value_b).collect();
        let y: Vec<f64> = self.rows.iter().map(|r| r.derivative).collect();
        least_squares_line(&x, &y)
    }

    /// `epoch,derivative,value_b,derivative_std,ci_lo,ci_hi`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["epoch", "derivative", "value_b", "derivative_std", "ci_lo", "ci_hi"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.epoch),
                fmt_f64(r.derivative),
                fmt_f64(r.value_b),
                fmt_f64(r.derivative_std),
                fmt_f64(r.derivative - r.derivative_half_width),
                fmt_f64(r.derivative + r.derivative_half_width),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Rate per year expressed per month.
pub fn per_month(rate_per_year: f64) -> f64 {
    rate_per_year / 12.0
}

/// Pairs `model_a`'s derivative (with its band) with `model_b`'s mean on `grid`.
pub fn cross_series_table(
    model_a: &SplineModel,
    model_b: &SplineModel,
    grid: &[f64],
    alpha: f64,
) -> Result<CrossTable> {
    // fail on the first grid epoch outside either domain
    let da = model_a.predict_derivative(grid, alpha)?;
    let vb = model_b.evaluate(grid)?;
    let rows = (0..grid.len())
        .map(|i| CrossRow {
            epoch: grid[i],
            derivative: da.mean[i],
            value_b: vb[i],
            derivative_std: da.std[i],
            derivative_half_width: da.half_width[i],
        })
        .collect();
    Ok(CrossTable { rows, alpha })
}
