//! One function per subcommand. Each validates its configuration first and
//! only then reads inputs and writes outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tsplines::fusion::{compute_difference, FusionInput};
use tsplines::series::fmt_f64;
use tsplines::synth::{self, DecompositionConfig};
use tsplines::{
    detect_and_refit, fit, fit_polynomial, linear_interpolation, reconstruct, SplineModel, TimeSeries,
};

use crate::config::{validate_alpha, RunConfig};
use crate::failure::{with_path, Failure};

type Outcome = Result<(), Failure>;

fn read_series(path: &Path) -> Result<TimeSeries, Failure> {
    TimeSeries::read_csv_path(path).map_err(with_path(path))
}

/// Output failures are reported as configuration problems (bad path).
fn output_error(path: &Path) -> impl Fn(tsplines::Error) -> Failure + '_ {
    move |e| Failure::config(format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<fs::File, Failure> {
    fs::File::create(path).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Outcome {
    fs::create_dir_all(path).map_err(|e| Failure::config(format!("cannot create {}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::config(format!("cannot write {}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::config(e.to_string()))?;
    let mut f = create(path)?;
    writeln!(f, "{text}").map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

/// Summary of a fitted model.
#[derive(Debug, Serialize)]
pub struct FitReport {
    pub n_obs: usize,
    pub degree: usize,
    pub order: usize,
    pub sections: usize,
    pub lambda: f64,
    pub gcv_cost: f64,
    pub effective_dof: f64,
    pub df_res: f64,
    pub sigma2: f64,
}

impl FitReport {
    pub fn of(model: &SplineModel) -> Self {
        let meta = model.metadata();
        Self {
            n_obs: meta.n_obs,
            degree: model.degree(),
            order: model.order(),
            sections: model.sections(),
            lambda: model.lambda(),
            gcv_cost: meta.gcv_cost,
            effective_dof: meta.effective_dof,
            df_res: model.df_res(),
            sigma2: model.sigma2(),
        }
    }
}

fn fit_one(config: &RunConfig, input: &Path, output: &Path, report: Option<&Path>) -> Outcome {
    let data = read_series(input)?;
    let model = fit(&data, &config.fit)?;
    model.save(output).map_err(output_error(output))?;
    let rep = FitReport::of(&model);
    match report {
        Some(p) => write_json(p, &rep),
        None => {
            println!("{}", serde_json::to_string(&rep).map_err(|e| Failure::config(e.to_string()))?);
            Ok(())
        }
    }
}

pub fn run_fit(config: &RunConfig, input: &Path, output: &Path, report: Option<&Path>) -> Outcome {
    fit_one(config, input, output, report)
}

/// Fits every `*.csv` in `dir` concurrently. Per-file outputs are
/// `<stem>.json` and `<stem>.report.json` in `out_dir`; one status line per
/// file goes to stdout in file-name order. The first failure (by name)
/// decides the exit status.
pub fn run_fit_batch(config: &RunConfig, dir: &Path, out_dir: &Path) -> Outcome {
    let mut inputs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(Failure::config(format!("no .csv files in {}", dir.display())));
    }
    create_dir(out_dir)?;
    let results: Vec<Outcome> = inputs
        .par_iter()
        .map(|input| {
            let stem = input.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let model = out_dir.join(format!("{stem}.json"));
            let report = out_dir.join(format!("{stem}.report.json"));
            fit_one(config, input, &model, Some(&report))
        })
        .collect();
    let mut first = None;
    for (input, r) in inputs.iter().zip(results) {
        match r {
            Ok(()) => println!("{},ok", input.display()),
            Err(f) => {
                println!("{},{}", input.display(), f.category.code());
                log::warn!("{}: {}", input.display(), f.message);
                first.get_or_insert(f);
            }
        }
    }
    first.map_or(Ok(()), Err)
}

/// Epoch column of a CSV: the column named `time` or `epoch`, else the first.
fn read_epochs(path: &Path) -> Result<Vec<f64>, Failure> {
    let parse = |line: usize, message: String| Failure::from(tsplines::Error::Parse { line, message });
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::from(tsplines::Error::Io(std::io::Error::other(e))))
        .map_err(|mut f| {
            f.message = format!("{}: {}", path.display(), f.message);
            f
        })?;
    let headers = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    let col = headers.iter().position(|h| h == "time" || h == "epoch").unwrap_or(0);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse(line, e.to_string()))?;
        let raw = rec.get(col).unwrap_or("");
        let t: f64 = raw
            .parse()
            .map_err(|_| parse(line, format!("{}: not a number: {raw:?}", path.display())))?;
        out.push(t);
    }
    if out.is_empty() {
        return Err(parse(1, format!("{}: no epochs", path.display())));
    }
    Ok(out)
}

/// Where `predict` evaluates the model.
#[derive(Debug, Clone)]
pub enum EpochSource {
    File(PathBuf),
    /// First day of every month inside the domain.
    Monthly,
    /// Evenly spaced points over the domain, ends included.
    Points(usize),
}

fn resolve_epochs(model: &SplineModel, source: &EpochSource) -> Result<Vec<f64>, Failure> {
    let (lo, hi) = model.domain();
    match source {
        EpochSource::File(p) => read_epochs(p),
        EpochSource::Monthly => Ok(tsplines::calendar::monthly_epochs(lo, hi)?),
        EpochSource::Points(k) if *k >= 2 => Ok((0..*k)
            .map(|i| (lo + (hi - lo) * i as f64 / (*k - 1) as f64).min(hi))
            .collect()),
        EpochSource::Points(k) => Err(Failure::config(format!("need at least 2 points, got {k}"))),
    }
}

pub fn run_predict(
    model_path: &Path,
    epochs: &EpochSource,
    alpha: f64,
    output: &Path,
    derivative_output: Option<&Path>,
) -> Outcome {
    validate_alpha(alpha)?;
    let model = SplineModel::load(model_path).map_err(with_path(model_path))?;
    let t = resolve_epochs(&model, epochs)?;
    // compute everything before writing anything
    let mean = model.predict(&t, alpha)?;
    let deriv = derivative_output.map(|_| model.predict_derivative(&t, alpha)).transpose()?;
    mean.write_csv(create(output)?).map_err(output_error(output))?;
    if let (Some(p), Some(d)) = (derivative_output, deriv) {
        d.write_csv(create(p)?).map_err(output_error(p))?;
    }
    Ok(())
}

pub fn run_outliers(config: &RunConfig, input: &Path, out_dir: &Path) -> Outcome {
    let data = read_series(input)?;
    let rep = detect_and_refit(&data, &config.fit, &config.thresholds)?;
    create_dir(out_dir)?;

    let flags = out_dir.join("flags.csv");
    let mut w = csv_writer(&flags)?;
    let fail = csv_fail(&flags);
    w.write_record(["index", "time", "value", "level"]).map_err(&fail)?;
    for (level, idx) in [(1, &rep.level1_indices), (2, &rep.level2_indices)] {
        for &i in idx.iter() {
            w.write_record([
                i.to_string(),
                fmt_f64(data.times()[i]),
                fmt_f64(data.values()[i]),
                level.to_string(),
            ])
            .map_err(&fail)?;
        }
    }
    w.flush().map_err(|e| Failure::config(format!("cannot write {}: {e}", flags.display())))?;

    let clean = out_dir.join("clean.csv");
    rep.clean_data.write_csv_path(&clean).map_err(output_error(&clean))?;
    let model = out_dir.join("model.json");
    rep.final_model.save(&model).map_err(output_error(&model))?;
    write_json(&out_dir.join("report.json"), &FitReport::of(&rep.final_model))?;
    println!(
        "level1={} level2={} remaining={}",
        rep.level1_indices.len(),
        rep.level2_indices.len(),
        rep.clean_data.len()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct FuseSummary {
    shift: f64,
    n_observations: usize,
    n_reconstructed: usize,
    dibc: FitReport,
}

pub struct FusePaths<'a> {
    pub observations: &'a Path,
    pub dense: &'a Path,
    pub output: &'a Path,
    pub difference: Option<&'a Path>,
    pub model: Option<&'a Path>,
}

pub fn run_fuse(config: &RunConfig, paths: &FusePaths<'_>) -> Outcome {
    let obs = read_series(paths.observations)?;
    let dense = read_series(paths.dense)?;
    let input = FusionInput::new(obs, dense)?;
    let res = reconstruct(&input, &config.fit, config.alpha)?;
    res.reconstruction
        .write_csv(create(paths.output)?)
        .map_err(output_error(paths.output))?;
    if let Some(p) = paths.difference {
        compute_difference(&input)?.write_csv_path(p).map_err(output_error(p))?;
    }
    if let Some(p) = paths.model {
        res.dibc_model.save(p).map_err(output_error(p))?;
    }
    let summary = FuseSummary {
        shift: res.shift,
        n_observations: input.observations().len(),
        n_reconstructed: res.reconstruction.len(),
        dibc: FitReport::of(&res.dibc_model),
    };
    println!("{}", serde_json::to_string(&summary).map_err(|e| Failure::config(e.to_string()))?);
    Ok(())
}

/// Row labels of `compare`, in output order.
pub const COMPARE_MODELS: [&str; 6] = ["alps", "poly2", "poly3", "poly4", "poly5", "interp"];

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Predictions of each comparator at `epochs`; `None` where a model could
/// not be fitted.
fn comparator_predictions(
    config: &RunConfig,
    data: &TimeSeries,
    epochs: &[f64],
) -> Result<Vec<Option<Vec<f64>>>, Failure> {
    let mut out = Vec::with_capacity(COMPARE_MODELS.len());
    out.push(Some(fit(data, &config.fit)?.evaluate(epochs)?));
    for degree in 2..=5 {
        out.push(match fit_polynomial(data, degree) {
            Ok(m) => Some(m.predict(epochs)),
            Err(e) => {
                log::warn!("poly{degree}: {e}");
                None
            }
        });
    }
    let interp = linear_interpolation(data)?;
    out.push(Some(
        interp
            .predict(epochs)?
            .into_iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect(),
    ));
    Ok(out)
}

pub fn run_compare(
    config: &RunConfig,
    input: &Path,
    truth: Option<&Path>,
    output: &Path,
    predictions: Option<&Path>,
) -> Outcome {
    let data = read_series(input)?;
    let truth = truth.map(read_series).transpose()?;
    let (lo, hi) = data.span();
    // truth epochs outside the data span are not comparable
    let truth = truth.map(|t| {
        let (tt, tv): (Vec<f64>, Vec<f64>) = t
            .times()
            .iter()
            .zip(t.values())
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(&x, &v)| (x, v))
            .unzip();
        (tt, tv)
    });
    if let Some((tt, _)) = &truth {
        if tt.is_empty() {
            return Err(Failure::from(tsplines::Error::Coverage {
                lo,
                hi,
                epochs: vec![],
            }));
        }
    }

    let at_data = comparator_predictions(config, &data, data.times())?;
    let at_truth = match &truth {
        Some((tt, _)) => Some(comparator_predictions(config, &data, tt)?),
        None => None,
    };

    let mut w = csv_writer(output)?;
    let fail = csv_fail(output);
    w.write_record(["model", "rmse_data", "rmse_truth"]).map_err(&fail)?;
    for (k, name) in COMPARE_MODELS.iter().enumerate() {
        let fit_cell = at_data[k].as_ref().map_or(String::new(), |p| fmt_f64(rmse(p, data.values())));
        let truth_cell = match (&truth, &at_truth) {
            (Some((_, tv)), Some(pred)) => pred[k].as_ref().map_or(String::new(), |p| fmt_f64(rmse(p, tv))),
            _ => String::new(),
        };
        w.write_record([name.to_string(), fit_cell, truth_cell]).map_err(&fail)?;
    }
    w.flush().map_err(|e| Failure::config(format!("cannot write {}: {e}", output.display())))?;

    if let Some(p) = predictions {
        let (epochs, preds, tv) = match (&truth, &at_truth) {
            (Some((tt, tv)), Some(pred)) => (tt.as_slice(), pred, Some(tv)),
            _ => (data.times(), &at_data, None),
        };
        let mut w = csv_writer(p)?;
        let fail = csv_fail(p);
        let mut header = vec!["epoch".to_string()];
        if tv.is_some() {
            header.push("truth".into());
        }
        header.extend(COMPARE_MODELS.iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(&fail)?;
        for (i, &t) in epochs.iter().enumerate() {
            let mut row = vec![fmt_f64(t)];
            if let Some(tv) = tv {
                row.push(fmt_f64(tv[i]));
            }
            row.extend(preds.iter().map(|p| p.as_ref().map_or(String::new(), |p| fmt_f64(p[i]))));
            w.write_record(&row).map_err(&fail)?;
        }
        w.flush().map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn run_synth_gramacy_lee(n: usize, noise: f64, seed: u64, output: &Path, truth: Option<(&Path, usize)>) -> Outcome {
    if n < 2 || !(noise >= 0.0) {
        return Err(Failure::config(format!("need n >= 2 and noise >= 0, got {n} and {noise}")));
    }
    let s = synth::gramacy_lee_series(n, noise, seed)?;
    s.data.write_csv_path(output).map_err(output_error(output))?;
    if let Some((path, points)) = truth {
        if points < 2 {
            return Err(Failure::config("truth grid needs at least 2 points"));
        }
        let (lo, hi) = s.data.span();
        let t: Vec<f64> = (0..points)
            .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).min(hi))
            .collect();
        let y = t.iter().map(|&x| synth::gramacy_lee(x)).collect();
        TimeSeries::new(t, y)?.write_csv_path(path).map_err(output_error(path))?;
    }
    Ok(())
}

pub fn run_synth_decomposition(config: &DecompositionConfig, seed: u64, out_dir: &Path) -> Outcome {
    if config.n_observations < 2 || !(config.cadence > 0.0) || !(config.end > config.start) {
        return Err(Failure::config("decomposition needs >= 2 observations, cadence > 0 and end > start"));
    }
    let d = synth::decomposition_suite(config, seed)?;
    create_dir(out_dir)?;
    let obs = out_dir.join("observations.csv");
    d.observations.write_csv_path(&obs).map_err(output_error(&obs))?;
    let dense = out_dir.join("dense.csv");
    d.dense_model.write_csv_path(&dense).map_err(output_error(&dense))?;
    let truth = out_dir.join("truth.csv");
    TimeSeries::new(d.dense_model.times().to_vec(), d.dense_truth.clone())?
        .write_csv_path(&truth)
        .map_err(output_error(&truth))?;
    Ok(())
}
