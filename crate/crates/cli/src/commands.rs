use std::path::PathBuf;

use clap::Subcommand;
use entrochart::entropy::{
    autocorr_lag1, flattened_length, fourier_highfreq_ratio, multiscale_entropy, pae_pixels,
    sample_entropy, EntropyParams, DEFAULT_HIGHFREQ_CUTOFF,
};
use entrochart::noise::{perturb_pixels, NoiseSpec, PerturbOptions, DEFAULT_TOLERANCE};
use entrochart::raster::rasterize;
use entrochart::series::{generate_base, load_series, series_to_csv, BaseFunctionKind, SeriesFormat, TimeSeries};
use entrochart::stats::{accuracy_summary, build_design, logit_fit, wald_categorical, ResponseTable};
use entrochart::studio::{
    aspect_sweep, calibrate_params, generate_diff_grid, generate_diff_pair, generate_glance_sweep,
    generate_lineup_set, generate_shape_trials, run_experiment1, smooth_to_pae, CalibrationConfig,
    GenConfig, LineupSource, StimulusSet, DEFAULT_EXP1_LEVELS, DIFF_DELTAS, DIFF_INITIAL_PAES,
    GLANCE_DELTAS, GLANCE_MS, LINEUP_LEVELS, SHAPE_LEVELS, SHAPE_PER_CELL,
};
use entrochart::{Error, Result};
use serde_json::{json, Value};

use crate::report::{measure, write_atomic, Report};
use crate::{ChartOpts, Command, InputOpts, SeedOpt};

const MULTISCALE_SCALES: [usize; 3] = [1, 2, 5];

#[derive(Debug, Subcommand)]
pub enum StimuliCommand {
    /// One line-up of charts at increasing PAE levels.
    Lineup {
        /// Cut windows from this recorded series instead of adding noise.
        #[arg(long, conflicts_with = "base")]
        input: Option<PathBuf>,
        /// Samples per window when `--input` is given.
        #[arg(long, default_value_t = 300)]
        window: usize,
        #[arg(long, default_value = "linear")]
        base: BaseFunctionKind,
        #[arg(long, value_delimiter = ',', default_values_t = LINEUP_LEVELS)]
        levels: Vec<f64>,
        #[command(flatten)]
        common: StimuliOpts,
    },
    /// Find-the-difference pairs: a single pair with `--initial-pae` and a
    /// signed `--delta`, otherwise the full initial x delta grid.
    Diff {
        #[arg(long, default_value = "linear")]
        base: BaseFunctionKind,
        #[arg(long, requires = "delta")]
        initial_pae: Option<f64>,
        #[arg(long, requires = "initial_pae", allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DIFF_INITIAL_PAES)]
        initial_paes: Vec<f64>,
        /// Delta magnitudes; each is used with both signs.
        #[arg(long, value_delimiter = ',', default_values_t = DIFF_DELTAS)]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        per_cell: usize,
        #[command(flatten)]
        common: StimuliOpts,
    },
    /// Noisy trend/peak/trough charts for shape identification.
    ShapeId {
        #[arg(long, value_delimiter = ',', default_values_t = BaseFunctionKind::SHAPES)]
        shapes: Vec<BaseFunctionKind>,
        #[arg(long, value_delimiter = ',', default_values_t = SHAPE_LEVELS)]
        levels: Vec<f64>,
        #[arg(long, default_value_t = SHAPE_PER_CELL)]
        per_cell: usize,
        #[command(flatten)]
        common: StimuliOpts,
    },
    /// Find-the-difference pairs crossed with glance times, no pause.
    Glance {
        #[arg(long, value_delimiter = ',', default_values_t = GLANCE_MS)]
        glance_ms: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = DIFF_INITIAL_PAES)]
        initial_paes: Vec<f64>,
        /// Delta magnitudes; each is used with both signs.
        #[arg(long, value_delimiter = ',', default_values_t = GLANCE_DELTAS)]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        per_cell: usize,
        #[command(flatten)]
        common: StimuliOpts,
    },
}

#[derive(Debug, Clone, clap::Args, serde::Serialize)]
pub struct StimuliOpts {
    #[command(flatten)]
    chart: ChartOpts,
    #[command(flatten)]
    seed: SeedOpt,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Output directory; the set is written to a subdirectory named after it.
    #[arg(long)]
    out: PathBuf,
}

impl StimuliOpts {
    fn gen_config(&self) -> Result<GenConfig> {
        Ok(GenConfig {
            dims: self.chart.dims,
            params: self.chart.params()?,
            tolerance: self.tol,
            ..GenConfig::default()
        })
    }
}

fn load_input(input: &InputOpts, width: usize) -> Result<TimeSeries> {
    match (&input.input, input.base) {
        (Some(path), _) => {
            let format = input.format.unwrap_or_else(|| SeriesFormat::from_path(path));
            load_series(path, format)
        }
        (None, Some(kind)) => generate_base(kind, width, 0),
        (None, None) => Err(Error::InvalidArgument("give an input file or --base".into())),
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Score {
            input,
            chart,
            all_measures,
            out,
        } => score(&input, &chart, all_measures, out),
        Command::Noise {
            input,
            chart,
            seed,
            target,
            tol,
            max_steps,
            out,
            report,
        } => noise(&input, &chart, seed.seed, target, tol, max_steps, out, report),
        Command::Stimuli(cmd) => stimuli(cmd),
        Command::Exp1 {
            chart,
            seed,
            levels,
            replicates,
            out,
        } => {
            let levels = levels.unwrap_or_else(|| DEFAULT_EXP1_LEVELS.to_vec());
            let rep = run_experiment1(&levels, replicates, chart.dims, chart.params()?, seed.seed)?;
            for f in &rep.functions {
                eprintln!(
                    "{:<9} R2 {:.3}  slope {:.5}  t {:.1}  p {:.2e}",
                    f.base.name(),
                    f.fit.r_squared,
                    f.fit.slope,
                    f.fit.t_stat,
                    f.fit.p_value
                );
            }
            let config = json!({ "chart": chart, "levels": levels, "replicates": replicates });
            Report::new("exp1", Some(seed.seed), config, rep).emit(out.as_deref())
        }
        Command::Calibrate {
            seed,
            m_grid,
            r_grid,
            dims_list,
            levels,
            replicates,
            out,
        } => {
            let config = CalibrationConfig {
                levels: levels.unwrap_or_else(|| DEFAULT_EXP1_LEVELS.to_vec()),
                replicates,
                ..CalibrationConfig::default()
            };
            let rep = calibrate_params(&m_grid, &r_grid, &dims_list, &config, seed.seed)?;
            for row in rep.rows.iter().take(5) {
                eprintln!(
                    "rank {:>2}  m {}  r {:<4}  mean corr {:.4}",
                    row.rank.map_or("-".to_owned(), |r| r.to_string()),
                    row.m,
                    row.r,
                    row.mean_correlation
                );
            }
            let echo = json!({ "m_grid": m_grid, "r_grid": r_grid, "dims_list": dims_list });
            Report::new("calibrate", Some(seed.seed), echo, rep).emit(out.as_deref())
        }
        Command::Smooth {
            input,
            chart,
            target,
            max_window,
            out,
            report,
        } => {
            let series = load_input(&input, chart.dims.width)?;
            let res = smooth_to_pae(&series, chart.dims, target, max_window, &chart.params()?)?;
            if let Some(path) = &out {
                write_atomic(path, series_to_csv(&res.series)?.as_bytes())?;
            }
            eprintln!(
                "window {}  PAE {:.4}  {}",
                res.window,
                res.achieved_pae,
                if res.reached { "reached" } else { "target not reached" }
            );
            let config = json!({ "input": input, "chart": chart, "target": target, "max_window": max_window });
            let result = json!({
                "window": res.window,
                "achieved_pae": res.achieved_pae,
                "reached": res.reached,
                "output": out,
            });
            Report::new("smooth", None, config, result).emit(report.as_deref())
        }
        Command::Aspect {
            input,
            m,
            r,
            dims_list,
            out,
        } => {
            let width = dims_list.first().map_or(300, |d| d.width);
            let series = load_input(&input, width)?;
            let rows = aspect_sweep(&series, &dims_list, &EntropyParams::new(m, r)?)?;
            let result: Vec<Value> = rows
                .iter()
                .map(|row| json!({ "dims": row.dims, "pae": measure(row.pae) }))
                .collect();
            let config = json!({ "input": input, "m": m, "r": r, "dims_list": dims_list });
            Report::new("aspect", None, config, result).emit(out.as_deref())
        }
        Command::Analyze {
            responses,
            seed,
            numeric,
            categorical,
            group_by,
            max_iter,
            tol,
            resamples,
            out,
        } => analyze(
            &responses,
            seed.seed,
            &numeric,
            &categorical,
            group_by,
            max_iter,
            tol,
            resamples,
            out,
        ),
    }
}

fn score(input: &InputOpts, chart: &ChartOpts, all_measures: bool, out: Option<PathBuf>) -> Result<()> {
    let series = load_input(input, chart.dims.width)?;
    let params = chart.params()?;
    let ps = rasterize(&series, chart.dims)?;
    let pae = pae_pixels(&ps, &params)?.value;
    let mut result = json!({ "pae": measure(pae) });
    if all_measures {
        let ys = ps.ys();
        let multiscale: Vec<Value> = match multiscale_entropy(ys, &params, &MULTISCALE_SCALES) {
            Ok(scores) => scores
                .iter()
                .map(|(s, e)| json!({ "scale": s, "value": measure(e.value) }))
                .collect(),
            Err(_) => MULTISCALE_SCALES
                .iter()
                .map(|s| json!({ "scale": s, "value": "undefined" }))
                .collect(),
        };
        result["sample_entropy"] = measure(sample_entropy(ys, &params)?.value);
        result["multiscale_entropy"] = Value::from(multiscale);
        result["flattened_length"] = measure(Some(flattened_length(&ps)));
        result["autocorr_lag1"] = measure(autocorr_lag1(&ps));
        result["fourier_highfreq_ratio"] = measure(fourier_highfreq_ratio(&ps, DEFAULT_HIGHFREQ_CUTOFF)?);
    }
    eprintln!("PAE {}", pae.map_or("undefined".to_owned(), |v| format!("{v:.4}")));
    let config = json!({ "input": input, "chart": chart, "all_measures": all_measures });
    Report::new("score", None, config, result).emit(out.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn noise(
    input: &InputOpts,
    chart: &ChartOpts,
    seed: u64,
    target: f64,
    tol: f64,
    max_steps: usize,
    out: PathBuf,
    report: Option<PathBuf>,
) -> Result<()> {
    let series = load_input(input, chart.dims.width)?;
    let params = chart.params()?;
    let start = rasterize(&series, chart.dims)?;
    let start_pae = pae_pixels(&start, &params)?.value;
    let spec = NoiseSpec::for_series(&series, seed)?;
    let opts = PerturbOptions {
        tolerance: tol,
        max_steps,
        params,
        ..PerturbOptions::default()
    };
    let res = perturb_pixels(&start, target, &opts, &spec, &mut spec.rng())?;
    write_atomic(&out, series_to_csv(&res.series.to_time_series())?.as_bytes())?;
    eprintln!(
        "PAE {} -> {:.4} after {} steps",
        start_pae.map_or("undefined".to_owned(), |v| format!("{v:.4}")),
        res.achieved_pae,
        res.steps
    );
    let config = json!({
        "input": input,
        "chart": chart,
        "target": target,
        "tol": tol,
        "max_steps": max_steps,
        "half_width": spec.half_width,
        "sigma": spec.sigma,
    });
    let result = json!({
        "start_pae": measure(start_pae),
        "achieved": res.achieved_pae,
        "steps": res.steps,
        "converged": res.converged,
        "output": out,
    });
    Report::new("noise", Some(seed), config, result).emit(report.as_deref())?;
    if !res.converged {
        return Err(Error::NotConverged(format!(
            "target {target} not reached within {max_steps} steps (closest {:.4})",
            res.achieved_pae
        )));
    }
    Ok(())
}

fn stimuli(cmd: StimuliCommand) -> Result<()> {
    let (name, common, config, set): (&'static str, StimuliOpts, Value, StimulusSet) = match cmd {
        StimuliCommand::Lineup {
            input,
            window,
            base,
            levels,
            common,
        } => {
            let cfg = common.gen_config()?;
            let source = match &input {
                Some(path) => LineupSource::Real {
                    name: path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("series")
                        .to_owned(),
                    series: load_series(path, SeriesFormat::from_path(path))?,
                    window,
                },
                None => LineupSource::Synthetic(base),
            };
            let set = generate_lineup_set(&source, &levels, &cfg, common.seed.seed)?;
            let echo = json!({ "input": input, "window": window, "base": base, "levels": levels });
            ("stimuli lineup", common, echo, set)
        }
        StimuliCommand::Diff {
            base,
            initial_pae,
            delta,
            initial_paes,
            deltas,
            per_cell,
            common,
        } => {
            let cfg = common.gen_config()?;
            let seed = common.seed.seed;
            let set = match (initial_pae, delta) {
                (Some(i), Some(d)) => generate_diff_pair(base, i, d, &cfg, seed)?,
                _ => generate_diff_grid(base, &initial_paes, &deltas, per_cell, &cfg, seed)?,
            };
            let echo = json!({
                "base": base,
                "initial_pae": initial_pae,
                "delta": delta,
                "initial_paes": initial_paes,
                "deltas": deltas,
                "per_cell": per_cell,
            });
            ("stimuli diff", common, echo, set)
        }
        StimuliCommand::ShapeId {
            shapes,
            levels,
            per_cell,
            common,
        } => {
            let set = generate_shape_trials(&shapes, &levels, per_cell, &common.gen_config()?, common.seed.seed)?;
            let echo = json!({ "shapes": shapes, "levels": levels, "per_cell": per_cell });
            ("stimuli shape-id", common, echo, set)
        }
        StimuliCommand::Glance {
            glance_ms,
            initial_paes,
            deltas,
            per_cell,
            common,
        } => {
            let set = generate_glance_sweep(
                &glance_ms,
                &initial_paes,
                &deltas,
                per_cell,
                &common.gen_config()?,
                common.seed.seed,
            )?;
            let echo = json!({
                "glance_ms": glance_ms,
                "initial_paes": initial_paes,
                "deltas": deltas,
                "per_cell": per_cell,
            });
            ("stimuli glance", common, echo, set)
        }
    };
    let dir = set.write_to(&common.out)?;
    let images: usize = set.trials.iter().map(|t| t.charts.len()).sum();
    eprintln!("{} trials, {images} images in {}", set.trials.len(), dir.display());
    let config = json!({ "chart": common.chart, "tol": common.tol, "out": common.out, "generator": config });
    let result = json!({
        "set_id": set.set_id,
        "experiment": set.experiment,
        "trials": set.trials.len(),
        "images": images,
        "directory": dir,
        "manifest": dir.join("manifest.json"),
    });
    Report::new(name, Some(set.master_seed), config, result).emit(None)
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    responses: &PathBuf,
    seed: u64,
    numeric: &[String],
    categorical: &[String],
    group_by: Option<Vec<String>>,
    max_iter: usize,
    tol: f64,
    resamples: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let table = ResponseTable::load(responses)?;
    let numeric: Vec<&str> = numeric.iter().map(String::as_str).collect();
    let categorical: Vec<&str> = categorical.iter().map(String::as_str).collect();
    let design = build_design(&table, &numeric, &categorical)?;
    let fit = logit_fit(&design.rows, table.correct(), max_iter, tol)?;

    let names: Vec<String> = std::iter::once("intercept".to_owned())
        .chain(design.names.iter().cloned())
        .collect();
    let coefficients: Vec<Value> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            json!({
                "name": name,
                "estimate": measure(Some(fit.coefficients[i])),
                "std_error": measure(Some(fit.std_errors[i])),
                "z": measure(Some(fit.z_stats[i])),
                "p": measure(Some(fit.p_values[i])),
            })
        })
        .collect();
    let wald: Vec<Value> = if fit.converged {
        design
            .groups
            .iter()
            .map(|(name, idx)| {
                let w = wald_categorical(&fit, idx)?;
                Ok(json!({ "predictor": name, "chi2": w.chi2, "df": w.df, "p": w.p_value }))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let group_cols: Vec<String> =
        group_by.unwrap_or_else(|| numeric.iter().chain(&categorical).map(|s| (*s).to_owned()).collect());
    let group_refs: Vec<&str> = group_cols.iter().map(String::as_str).collect();
    let accuracy = accuracy_summary(&table, &group_refs, resamples, seed)?;

    for c in &coefficients {
        eprintln!("{:<24} {:>10} p {}", c["name"].as_str().unwrap_or(""), c["estimate"], c["p"]);
    }
    let config = json!({
        "responses": responses,
        "numeric": numeric,
        "categorical": categorical,
        "group_by": group_cols,
        "max_iter": max_iter,
        "tol": tol,
        "resamples": resamples,
    });
    let result = json!({
        "n": table.len(),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "log_likelihood": fit.log_likelihood,
        "diagnostic": fit.diagnostic,
        "coefficients": coefficients,
        "wald": wald,
        "accuracy": accuracy,
    });
    Report::new("analyze", Some(seed), config, result).emit(out.as_deref())?;
    if !fit.converged {
        return Err(Error::NotConverged(
            fit.diagnostic.unwrap_or_else(|| "logistic fit did not converge".into()),
        ));
    }
    Ok(())
}
