//! Command-line flags and the validated run configuration built from them.

use clap::{Args, ValueEnum};
use tsplines::solver::LambdaSearch;
use tsplines::{FitOptions, FlagBand, OutlierThresholds, Placement, ScanMode};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    Quantile,
    Equidistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanArg {
    Exhaustive,
    Strided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    Observation,
    Mean,
}

/// Flags shared by every command that fits a spline.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// B-spline degree p (2..=4)
    #[arg(short = 'p', long, default_value_t = tsplines::model::DEFAULT_DEGREE)]
    pub degree: usize,
    /// Difference-penalty order q (1 <= q < p)
    #[arg(short = 'q', long, default_value_t = tsplines::model::DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = PlacementArg::Quantile)]
    pub placement: PlacementArg,
    /// Confidence-band level is 1 - alpha
    #[arg(long, default_value_t = tsplines::model::DEFAULT_ALPHA, allow_hyphen_values = true)]
    pub alpha: f64,
    /// log10 of the smallest smoothing parameter searched
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub log10_lambda_min: f64,
    /// log10 of the largest smoothing parameter searched
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub log10_lambda_max: f64,
    #[arg(long, default_value_t = 41)]
    pub lambda_grid_points: usize,
    #[arg(long, default_value_t = 40)]
    pub lambda_refine_iterations: usize,
    /// Section-count scan; `strided` only differs from `exhaustive` for n > 500
    #[arg(long, value_enum, default_value_t = ScanArg::Exhaustive)]
    pub scan: ScanArg,
}

/// Outlier-rejection flags.
#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub threshold1: f64,
    #[arg(long, default_value_t = 1.2, allow_hyphen_values = true)]
    pub threshold2: f64,
    /// Standard deviation the flagging band is built from
    #[arg(long, value_enum, default_value_t = BandArg::Observation)]
    pub band: BandArg,
}

/// Everything a fitting command needs, checked before any work is done.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fit: FitOptions,
    pub alpha: f64,
    pub thresholds: OutlierThresholds,
}

impl RunConfig {
    pub fn from_args(fit: &FitArgs, thresholds: Option<&ThresholdArgs>) -> Result<Self, Failure> {
        let options = FitOptions {
            degree: fit.degree,
            order: fit.order,
            placement: match fit.placement {
                PlacementArg::Quantile => Placement::Quantile,
                PlacementArg::Equidistant => Placement::Equidistant,
            },
            search: LambdaSearch {
                log10_min: fit.log10_lambda_min,
                log10_max: fit.log10_lambda_max,
                grid_points: fit.lambda_grid_points,
                refine_iterations: fit.lambda_refine_iterations,
            },
            scan: match fit.scan {
                ScanArg::Exhaustive => ScanMode::Exhaustive,
                ScanArg::Strided => ScanMode::Strided,
            },
        };
        let thresholds = thresholds.map_or_else(OutlierThresholds::default, |t| OutlierThresholds {
            level1: t.threshold1,
            level2: t.threshold2,
            band: match t.band {
                BandArg::Observation => FlagBand::Observation,
                BandArg::Mean => FlagBand::Mean,
            },
        });
        let config = Self {
            fit: options,
            alpha: fit.alpha,
            thresholds,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let cfg = |e: tsplines::Error| Failure::config(e.to_string());
        self.fit.validate().map_err(cfg)?;
        self.thresholds.validate().map_err(cfg)?;
        validate_alpha(self.alpha)
    }
}

pub fn validate_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::config(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Probe {
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        th: ThresholdArgs,
    }

    fn parse(args: &[&str]) -> Result<RunConfig, Failure> {
        let p = Probe::parse_from(std::iter::once("probe").chain(args.iter().copied()));
        RunConfig::from_args(&p.fit, Some(&p.th))
    }

    #[test]
    fn defaults_validate() {
        let c = parse(&[]).unwrap();
        assert_eq!(c.fit, FitOptions::default());
        assert_eq!(c.thresholds, OutlierThresholds::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse(&["-p", "3", "-q", "3"]).is_err());
        assert!(parse(&["--alpha", "1.5"]).is_err());
        assert!(parse(&["--threshold2", "-1"]).is_err());
        assert!(parse(&["--log10-lambda-min", "2", "--log10-lambda-max", "1"]).is_err());
        assert!(parse(&["-p", "3", "-q", "1", "--log10-lambda-min", "-6"]).is_ok());
    }
}
