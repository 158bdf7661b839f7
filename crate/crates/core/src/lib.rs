//! Penalized B-spline modeling of irregularly sampled time series.
//!
//! The pipeline builds quantile-placed knot vectors, fits B-splines with a
//! difference penalty on adjacent coefficients, chooses the number of
//! sections and the smoothing parameter by generalized cross validation, and
//! reports the fitted curve and its first derivative with Student-t
//! confidence bands. Around that core sit two-level outlier rejection,
//! baseline comparators (global polynomials, local linear models) and a
//! fusion step that combines sparse observations with a dense model series.

pub mod banded;
pub mod baselines;
pub mod basis;
pub mod calendar;
pub mod error;
pub mod fusion;
pub mod model;
pub mod outliers;
pub mod penalty;
pub mod series;
pub mod solver;
pub mod synth;

pub use baselines::{
    fit_polynomial, linear_interpolation, windowed_linear, PiecewiseKind, PiecewiseLinearModel, PolyModel, WindowRule,
};
pub use basis::{build_knot_vector, eval_basis, eval_basis_derivative, BasisMatrix, KnotVector, Placement};
pub use error::{Error, Result};
pub use fusion::{
    align_dense_model, compute_difference, cross_series_table, reconstruct, CrossTable, FusionInput, FusionResult,
};
pub use model::{fit, fit_fixed, fit_with_scan, FitOptions, Hyperparameters, PredictionBand, ScanMode, SplineModel};
pub use outliers::{detect_and_refit, FlagBand, OutlierReport, OutlierThresholds};
pub use penalty::{difference_matrix, penalty_matrix, PenaltySpec};
pub use series::{SeriesKind, TimeSeries};
pub use solver::{
    error_variance, fit_penalized, gcv_score, minimize_gcv_lambda, residual_df, smoother_matrix, FitResult,
    LambdaChoice, LambdaSearch,
};
