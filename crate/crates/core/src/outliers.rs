//! Two-level outlier rejection.
//!
//! Level 1 fits all samples and flags those whose residual exceeds
//! `threshold1` times the 99% t-band half-width at their epoch. Level 2
//! refits without them (full GCV re-selection) and flags with `threshold2`.
//! The final model is fitted on what survives both levels. Indices refer to
//! positions in the (time-sorted) input series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fit, t_critical, FitOptions, SplineModel};
use crate::series::TimeSeries;

/// Confidence level of the band used for flagging.
pub const FLAG_ALPHA: f64 = 0.01;

/// Which standard deviation the flagging band is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagBand {
    /// `sigma * sqrt(1 + b_t A^{-1} b_t^T)`: spread of a new observation
    /// around the fitted curve.
    #[default]
    Observation,
    /// `sigma * sqrt(b_t A^{-1} b_t^T)`: uncertainty of the fitted mean only.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierThresholds {
    pub level1: f64,
    pub level2: f64,
    pub band: FlagBand,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        Self {
            level1: 3.0,
            level2: 1.2,
            band: FlagBand::Observation,
        }
    }
}

impl OutlierThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.level1 > 0.0 && self.level2 > 0.0) || !self.level1.is_finite() || !self.level2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "outlier thresholds must be positive, got {} and {}",
                self.level1, self.level2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OutlierReport {
    pub level1_indices: Vec<usize>,
    pub level2_indices: Vec<usize>,
    pub thresholds: OutlierThresholds,
    /// Fit on every sample, before any rejection.
    pub initial_model: SplineModel,
    pub final_model: SplineModel,
    pub clean_data: TimeSeries,
}

impl OutlierReport {
    /// Level-1 and level-2 flags, ascending.
    pub fn all_flagged(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.level1_indices.iter().chain(&self.level2_indices).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Flags samples of `data` lying outside `scale` times the 99% band of
/// `model`. Returns positions within `data`.
pub fn flag_outside_band(
    model: &SplineModel,
    data: &TimeSeries,
    scale: f64,
    band: FlagBand,
) -> Result<Vec<usize>> {
    let pred = model.predict(data.times(), FLAG_ALPHA)?;
    let t = t_critical(FLAG_ALPHA, model.df_res())?;
    let sigma2 = model.sigma2();
    Ok((0..data.len())
        .filter(|&i| {
            let std = match band {
                FlagBand::Mean => pred.std[i],
                FlagBand::Observation => (pred.std[i].powi(2) + sigma2).sqrt(),
            };
            (data.values()[i] - pred.mean[i]).abs() > scale * t * std
        })
        .collect())
}

/// Runs both rejection levels and fits the cleaned series.
pub fn detect_and_refit(
    data: &TimeSeries,
    options: &FitOptions,
    thresholds: &OutlierThresholds,
) -> Result<OutlierReport> {
    thresholds.validate()?;
    options.validate()?;
    let need = options.degree + 2;

    let initial_model = fit(data, options)?;
    let level1 = flag_outside_band(&initial_model, data, thresholds.level1, thresholds.band)?;
    log::info!("level 1 flagged {} of {}", level1.len(), data.len());
    let too_few = |remaining: usize, level1: &[usize], level2: &[usize]| Error::InsufficientAfterRejection {
        remaining,
        need,
        level1: level1.to_vec(),
        level2: level2.to_vec(),
    };
    if data.len() - level1.len() < need {
        return Err(too_few(data.len() - level1.len(), &level1, &[]));
    }

    let kept: Vec<usize> = (0..data.len()).filter(|i| !level1.contains(i)).collect();
    let stage2 = data.without(&level1)?;
    let stage2_model = if level1.is_empty() {
        initial_model.clone()
    } else {
        fit(&stage2, options)?
    };
    let level2: Vec<usize> = flag_outside_band(&stage2_model, &stage2, thresholds.level2, thresholds.band)?
        .into_iter()
        .map(|i| kept[i])
        .collect();
    log::info!("level 2 flagged {} of {}", level2.len(), stage2.len());

    let mut removed: Vec<usize> = level1.iter().chain(&level2).copied().collect();
    removed.sort_unstable();
    if data.len() - removed.len() < need {
        return Err(too_few(data.len() - removed.len(), &level1, &level2));
    }
    let clean_data = data.without(&removed)?;
    let final_model = if level2.is_empty() {
        stage2_model
    } else {
        fit(&clean_data, options)?
    };

    Ok(OutlierReport {
        level1_indices: level1,
        level2_indices: level2,
        thresholds: *thresholds,
        initial_model,
        final_model,
        clean_data,
    })
}
