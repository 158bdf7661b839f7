//! Irregularly sampled time series and their CSV representation.
//!
//! Epochs are decimal years throughout. Files carry a header row naming the
//! columns `time,value` with an optional third `sigma` column.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a series measures. Carried for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Elevation,
    Thickness,
    Velocity,
    Terminus,
    #[default]
    Generic,
}

/// Ordered `(time, value)` samples.
///
/// Samples are sorted ascending by time on construction (stable, so duplicate
/// epochs keep their input order). The optional per-point `sigma` is nominal
/// measurement error and never enters the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    sigma: Option<Vec<f64>>,
    kind: SeriesKind,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_sigma(times, values, None)
    }

    pub fn with_sigma(times: Vec<f64>, values: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("time series is empty".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(s) = &sigma {
            if s.len() != times.len() {
                return Err(Error::InvalidInput(format!(
                    "{} times but {} sigmas",
                    times.len(),
                    s.len()
                )));
            }
        }
        if let Some(i) = times
            .iter()
            .zip(&values)
            .position(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }

        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Ok(Self {
            times: pick(&times),
            values: pick(&values),
            sigma: sigma.as_deref().map(pick),
            kind: SeriesKind::Generic,
        })
    }

    pub fn with_kind(mut self, kind: SeriesKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Sorted distinct epochs.
    pub fn unique_times(&self) -> Vec<f64> {
        let mut u = self.times.clone();
        u.dedup();
        u
    }

    /// Copy of the series without the samples at `indices`.
    pub fn without(&self, indices: &[usize]) -> Result<Self> {
        let mut keep = vec![true; self.len()];
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidInput(format!("index {i} out of range")));
            }
            keep[i] = false;
        }
        let filter = |v: &[f64]| {
            v.iter()
                .zip(&keep)
                .filter_map(|(x, k)| k.then_some(*x))
                .collect::<Vec<_>>()
        };
        let mut out = Self::with_sigma(
            filter(&self.times),
            filter(&self.values),
            self.sigma.as_deref().map(filter),
        )?;
        out.kind = self.kind;
        Ok(out)
    }

    /// Same epochs with values mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| f(t, v))
            .collect();
        Self {
            times: self.times.clone(),
            values,
            sigma: self.sigma.clone(),
            kind: self.kind,
        }
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let ts = Self::read_csv(file)?;
        let (lo, hi) = ts.span();
        log::info!(
            "read {} samples from {} spanning [{lo}, {hi}]",
            ts.len(),
            path.display()
        );
        Ok(ts)
    }

    /// Parses `time,value[,sigma]` CSV with a header row.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        let has_sigma = match names.as_slice() {
            ["time", "value"] => false,
            ["time", "value", "sigma"] => true,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header time,value[,sigma], got {}", names.join(",")),
                })
            }
        };

        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut sigma = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            // header is line 1
            let line = row + 2;
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(line, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("missing column {}", i + 1),
                })?;
                let v: f64 = raw.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: {raw:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-finite value {raw:?}"),
                    });
                }
                Ok(v)
            };
            times.push(field(0)?);
            values.push(field(1)?);
            if has_sigma {
                sigma.push(field(2)?);
            }
        }
        if times.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "no data rows".into(),
            });
        }
        Self::with_sigma(times, values, has_sigma.then_some(sigma))
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        match &self.sigma {
            Some(s) => {
                w.write_record(["time", "value", "sigma"]).map_err(csv_err)?;
                for i in 0..self.len() {
                    w.write_record([fmt_f64(self.times[i]), fmt_f64(self.values[i]), fmt_f64(s[i])])
                        .map_err(csv_err)?;
                }
            }
            None => {
                w.write_record(["time", "value"]).map_err(csv_err)?;
                for i in 0..self.len() {
                    w.write_record([fmt_f64(self.times[i]), fmt_f64(self.values[i])])
                        .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Formats a float with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
