//! Automatic penalized-spline fitting and prediction.
//!
//! [`fit`] scans every section count `m = 1, ..., n - 1`, picks the
//! GCV-minimizing smoothing parameter for each, keeps the overall cheapest
//! configuration (smaller `m` wins ties), and refits there. The resulting
//! [`SplineModel`] predicts the mean curve and its first derivative with
//! Student-t confidence bands.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::banded::{BandedCholesky, SymBand};
use crate::basis::{build_knot_vector, eval_basis, eval_basis_derivative, BasisMatrix, KnotVector, Placement};
use crate::error::{Error, Result};
use crate::series::{fmt_f64, TimeSeries};
use crate::solver::{search_lambda, strictly_better, LambdaSearch, PenalizedSystem, COST_FLOOR_FACTOR};

pub const DEFAULT_DEGREE: usize = 4;
pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Above this many observations the strided scan becomes available.
pub const STRIDED_SCAN_MIN_N: usize = 500;

/// How section counts are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Every `m` in `1..n`.
    #[default]
    Exhaustive,
    /// For `n > 500`: every `ceil(n/100)`-th `m`, then all `m` within one
    /// stride of the best. Falls back to exhaustive for smaller series.
    Strided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub degree: usize,
    pub order: usize,
    pub placement: Placement,
    pub search: LambdaSearch,
    pub scan: ScanMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            order: DEFAULT_ORDER,
            placement: Placement::Quantile,
            search: LambdaSearch::default(),
            scan: ScanMode::Exhaustive,
        }
    }
}

impl FitOptions {
    pub fn with_degree_order(degree: usize, order: usize) -> Self {
        Self {
            degree,
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_degree_order(self.degree, self.order)?;
        self.search.validate()
    }
}

fn validate_degree_order(degree: usize, order: usize) -> Result<()> {
    if !(2..=4).contains(&degree) {
        return Err(Error::InvalidInput(format!("degree p = {degree} not in 2..=4")));
    }
    if order == 0 || order >= degree {
        return Err(Error::InvalidInput(format!(
            "penalty order q = {order} must satisfy 1 <= q < p = {degree}"
        )));
    }
    Ok(())
}

/// Fixed hyperparameters for a single penalized fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub sections: usize,
    pub lambda: f64,
    pub degree: usize,
    pub order: usize,
    pub placement: Placement,
}

/// Outcome of one section count in the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub sections: usize,
    pub lambda: f64,
    /// `+inf` when no smoothing parameter was usable.
    pub cost: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub sections: usize,
    pub gcv_cost: f64,
    pub placement: Placement,
    pub n_obs: usize,
    /// `tr(H)` at the selected configuration.
    pub effective_dof: f64,
}

/// A fitted penalized spline. Immutable once built.
#[derive(Debug, Clone)]
pub struct SplineModel {
    knots: KnotVector,
    order: usize,
    lambda: f64,
    theta: Vec<f64>,
    df_res: f64,
    sigma2: f64,
    factorization: BandedCholesky,
    metadata: FitMetadata,
    /// In-band entries of `(B^T B + P)^{-1}`.
    covariance: SymBand,
}

/// Fits with GCV-selected section count and smoothing parameter.
pub fn fit(data: &TimeSeries, options: &FitOptions) -> Result<SplineModel> {
    fit_with_scan(data, options).map(|(model, _)| model)
}

/// [`fit`], also returning the cost of every evaluated section count.
pub fn fit_with_scan(data: &TimeSeries, options: &FitOptions) -> Result<(SplineModel, Vec<ScanEntry>)> {
    options.validate()?;
    let p = options.degree;
    let n = data.len();
    if n < p + 2 {
        return Err(Error::InsufficientData { have: n, need: p + 2 });
    }
    if data.unique_times().len() < 2 {
        return Err(Error::InvalidInput("need at least 2 distinct epochs".into()));
    }

    let evaluate = |m: usize| scan_one(data, m, options);
    let mut entries: Vec<ScanEntry> = match options.scan {
        ScanMode::Strided if n > STRIDED_SCAN_MIN_N => {
            let stride = n.div_ceil(100);
            let coarse: Vec<usize> = (1..n).step_by(stride).collect();
            let mut entries: Vec<ScanEntry> = coarse.par_iter().map(|&m| evaluate(m)).collect();
            let floor = cost_floor(data);
            let best = select(&entries, floor).map(|e| e.sections);
            if let Some(best) = best {
                let lo = best.saturating_sub(stride).max(1);
                let hi = (best + stride).min(n - 1);
                let fine: Vec<usize> = (lo..=hi).filter(|m| !coarse.contains(m)).collect();
                entries.extend(fine.par_iter().map(|&m| evaluate(m)).collect::<Vec<_>>());
                entries.sort_by_key(|e| e.sections);
            }
            entries
        }
        _ => (1..n).into_par_iter().map(evaluate).collect(),
    };
    entries.sort_by_key(|e| e.sections);

    let best = select(&entries, cost_floor(data)).cloned().ok_or_else(|| {
        Error::FitFailure(
            entries
                .iter()
                .map(|e| {
                    (
                        e.sections,
                        e.failure.clone().unwrap_or_else(|| "degenerate GCV".into()),
                    )
                })
                .collect(),
        )
    })?;
    log::debug!(
        "selected m = {} lambda = {} (GCV {})",
        best.sections,
        best.lambda,
        best.cost
    );

    let model = fit_fixed(
        data,
        &Hyperparameters {
            sections: best.sections,
            lambda: best.lambda,
            degree: p,
            order: options.order,
            placement: options.placement,
        },
    )?;
    let model = SplineModel {
        metadata: FitMetadata {
            gcv_cost: best.cost,
            ..model.metadata
        },
        ..model
    };
    Ok((model, entries))
}

fn cost_floor(data: &TimeSeries) -> f64 {
    let yty: f64 = data.values().iter().map(|v| v * v).sum();
    (COST_FLOOR_FACTOR * yty).max(f64::MIN_POSITIVE)
}

/// First entry (ascending `m`) not beaten by any later one beyond round-off.
fn select(entries: &[ScanEntry], floor: f64) -> Option<&ScanEntry> {
    let mut best: Option<&ScanEntry> = None;
    for e in entries {
        if !e.cost.is_finite() {
            continue;
        }
        match best {
            None => best = Some(e),
            Some(b) if strictly_better(e.cost, b.cost, floor) => best = Some(e),
            _ => {}
        }
    }
    best
}

fn scan_one(data: &TimeSeries, m: usize, options: &FitOptions) -> ScanEntry {
    let attempt = || -> Result<(f64, f64)> {
        let kv = build_knot_vector(data.times(), m, options.degree, options.placement)?;
        let basis = eval_basis(&kv, data.times())?;
        let sys = PenalizedSystem::new(&basis, data.values(), options.order)?;
        let choice = search_lambda(&sys, &options.search)?;
        Ok((choice.lambda, choice.cost))
    };
    match attempt() {
        Ok((lambda, cost)) => ScanEntry {
            sections: m,
            lambda,
            cost,
            failure: None,
        },
        Err(e) => ScanEntry {
            sections: m,
            lambda: f64::NAN,
            cost: f64::INFINITY,
            failure: Some(e.to_string()),
        },
    }
}

/// Penalized fit at fixed hyperparameters.
pub fn fit_fixed(data: &TimeSeries, hyper: &Hyperparameters) -> Result<SplineModel> {
    validate_degree_order(hyper.degree, hyper.order)?;
    if !(hyper.lambda >= 0.0) || !hyper.lambda.is_finite() {
        return Err(Error::InvalidInput(format!("bad smoothing parameter {}", hyper.lambda)));
    }
    let kv = build_knot_vector(data.times(), hyper.sections, hyper.degree, hyper.placement)?;
    let basis = eval_basis(&kv, data.times())?;
    let sys = PenalizedSystem::new(&basis, data.values(), hyper.order)?;
    let solution = sys.solve(hyper.lambda)?;
    let sigma2 = solution.sigma2()?;
    let covariance = solution.normal_factorization.inverse_band();
    Ok(SplineModel {
        metadata: FitMetadata {
            sections: hyper.sections,
            gcv_cost: sys.gcv(hyper.lambda),
            placement: hyper.placement,
            n_obs: data.len(),
            effective_dof: solution.effective_dof,
        },
        knots: kv,
        order: hyper.order,
        lambda: hyper.lambda,
        theta: solution.theta,
        df_res: solution.df_res,
        sigma2,
        factorization: solution.normal_factorization,
        covariance,
    })
}

/// Mean (or derivative) predictions with pointwise confidence bands.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBand {
    pub epochs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `t(1 - alpha/2; df_res) * std`
    pub half_width: Vec<f64>,
    pub alpha: f64,
}

impl PredictionBand {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.half_width).map(|(m, h)| m - h).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.half_width).map(|(m, h)| m + h).collect()
    }

    /// `epoch,mean,std,ci_lo,ci_hi` with 17 significant digits.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["epoch", "mean", "std", "ci_lo", "ci_hi"]).map_err(csv_err)?;
        for i in 0..self.len() {
            let h = self.half_width[i];
            w.write_record([
                fmt_f64(self.epochs[i]),
                fmt_f64(self.mean[i]),
                fmt_f64(self.std[i]),
                fmt_f64(self.mean[i] - h),
                fmt_f64(self.mean[i] + h),
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

/// Two-sided Student-t critical value `t(1 - alpha/2; df)`.
pub fn t_critical(alpha: f64, df: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} not in (0, 1)")));
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| Error::DegenerateVariance(df))?;
    Ok(dist.inverse_cdf(1.0 - alpha / 2.0))
}

impl SplineModel {
    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sections(&self) -> usize {
        self.metadata.sections
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn df_res(&self) -> f64 {
        self.df_res
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn metadata(&self) -> &FitMetadata {
        &self.metadata
    }

    pub fn factorization(&self) -> &BandedCholesky {
        &self.factorization
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            sections: self.metadata.sections,
            lambda: self.lambda,
            degree: self.degree(),
            order: self.order,
            placement: self.metadata.placement,
        }
    }

    /// `f(t) = B_t theta` with its confidence band.
    pub fn predict(&self, epochs: &[f64], alpha: f64) -> Result<PredictionBand> {
        let b = eval_basis(&self.knots, epochs)?;
        self.band(&b, alpha)
    }

    /// `f'(t) = B'_t theta` with its confidence band.
    pub fn predict_derivative(&self, epochs: &[f64], alpha: f64) -> Result<PredictionBand> {
        let b = eval_basis_derivative(&self.knots, epochs)?;
        self.band(&b, alpha)
    }

    /// Mean values only.
    pub fn evaluate(&self, epochs: &[f64]) -> Result<Vec<f64>> {
        Ok(eval_basis(&self.knots, epochs)?.mul_vec(&self.theta))
    }

    fn band(&self, b: &BasisMatrix, alpha: f64) -> Result<PredictionBand> {
        let t = t_critical(alpha, self.df_res)?;
        let sigma = self.sigma2.sqrt();
        let mean = b.mul_vec(&self.theta);
        let mut std = Vec::with_capacity(b.n_rows());
        for j in 0..b.n_rows() {
            let (start, w) = b.row(j);
            let mut quad = 0.0;
            for (a, wa) in w.iter().enumerate() {
                for (c, wc) in w.iter().enumerate() {
                    quad += wa * wc * self.covariance.get(start + a, start + c);
                }
            }
            std.push(sigma * quad.max(0.0).sqrt());
        }
        let half_width = std.iter().map(|s| t * s).collect();
        Ok(PredictionBand {
            epochs: b.epochs().to_vec(),
            mean,
            std,
            half_width,
            alpha,
        })
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            degree: self.degree(),
            order: self.order,
            lambda: self.lambda,
            knots: self.knots.knots().to_vec(),
            theta: self.theta.clone(),
            df_res: self.df_res,
            sigma2: self.sigma2,
            normal_cholesky: self.factorization.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        let knots = KnotVector::new(doc.knots, doc.degree)?;
        let c = knots.n_basis();
        if doc.theta.len() != c || doc.normal_cholesky.dim() != c || knots.sections() != doc.metadata.sections {
            return Err(Error::InvalidInput(
                "model document has inconsistent dimensions".into(),
            ));
        }
        if doc.normal_cholesky.bandwidth() < doc.degree {
            return Err(Error::InvalidInput("factorization band narrower than degree".into()));
        }
        let covariance = doc.normal_cholesky.inverse_band();
        Ok(Self {
            knots,
            order: doc.order,
            lambda: doc.lambda,
            theta: doc.theta,
            df_res: doc.df_res,
            sigma2: doc.sigma2,
            factorization: doc.normal_cholesky,
            metadata: doc.metadata,
            covariance,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub const MODEL_FORMAT: &str = "tsplines-model";
pub const MODEL_VERSION: u32 = 1;

/// On-disk form of a [`SplineModel`] (JSON).
///
/// `normal_cholesky` is the banded Cholesky factor of `B^T B + P` at the
/// training epochs; it is all that band computation needs, so predictions do
/// not require the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub degree: usize,
    pub order: usize,
    pub lambda: f64,
    pub knots: Vec<f64>,
    pub theta: Vec<f64>,
    pub df_res: f64,
    pub sigma2: f64,
    pub normal_cholesky: BandedCholesky,
    pub metadata: FitMetadata,
}
