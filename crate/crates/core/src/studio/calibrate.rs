use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::substream_seed;
use crate::entropy::{pae, Convention, EntropyParams};
use crate::error::{invalid, Result};
use crate::noise::{add_noise_step, NoiseSpec};
use crate::raster::{rasterize, ChartDims};
use crate::series::{generate_base, BaseFunctionKind, TimeSeries};
use crate::stats::pearson;

/// How the training charts for the sweep are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Noise-step counts.
    pub levels: Vec<usize>,
    pub replicates: usize,
    /// Resolution at which noise is injected before re-rendering.
    pub noise_dims: ChartDims,
    pub convention: Convention,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            levels: super::DEFAULT_EXP1_LEVELS.to_vec(),
            replicates: 5,
            noise_dims: ChartDims::default(),
            convention: Convention::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub m: usize,
    pub r: f64,
    /// Noise-level/PAE Pearson correlation averaged over base functions and
    /// resolutions.
    pub mean_correlation: f64,
    pub undefined_fraction: f64,
    /// Set when PAE was undefined on more than half the charts; such cells
    /// are unranked.
    pub excluded: bool,
    /// 1-based rank by descending correlation.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub dims: Vec<ChartDims>,
    pub config: CalibrationConfig,
    pub seed: u64,
    /// Ranked cells first, then excluded ones.
    pub rows: Vec<CalibrationRow>,
}

impl CalibrationReport {
    pub fn rank_of(&self, m: usize, r: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|row| row.m == m && row.r == r)
            .and_then(|row| row.rank)
    }
}

struct TrainingChart {
    base: usize,
    level: f64,
    series: TimeSeries,
}

fn training_set(config: &CalibrationConfig, seed: u64) -> Result<Vec<TrainingChart>> {
    let dims = config.noise_dims;
    let mut jobs = Vec::new();
    for (fi, &base) in BaseFunctionKind::GENERAL.iter().enumerate() {
        let series = generate_base(base, dims.width, seed)?;
        let clean = rasterize(&series, dims)?;
        for (li, &level) in config.levels.iter().enumerate() {
            for rep in 0..config.replicates {
                jobs.push((fi, li, level, rep, series.clone(), clean.clone()));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(fi, li, level, rep, series, clean)| {
            let spec = NoiseSpec::for_series(&series, substream_seed(seed, &[fi as u64, li as u64, rep as u64]))?;
            let mut rng = spec.rng();
            let mut ps = clean;
            for _ in 0..level {
                ps = add_noise_step(&ps, &spec, &mut rng);
            }
            Ok(TrainingChart {
                base: fi,
                level: level as f64,
                series: ps.to_time_series(),
            })
        })
        .collect()
}

/// Sweeps `(m, r)` over noisy training charts rendered at every entry of
/// `dims_list` and ranks cells by mean noise/PAE correlation.
pub fn calibrate_params(
    m_grid: &[usize],
    r_grid: &[f64],
    dims_list: &[ChartDims],
    config: &CalibrationConfig,
    seed: u64,
) -> Result<CalibrationReport> {
    if m_grid.is_empty() || r_grid.is_empty() || dims_list.is_empty() {
        return Err(invalid("calibration grids must be non-empty"));
    }
    if config.levels.len() < 2 || config.replicates == 0 {
        return Err(invalid("calibration needs at least 2 levels and 1 replicate"));
    }
    for d in dims_list {
        ChartDims::new(d.width, d.height)?;
    }
    let charts = training_set(config, seed)?;
    let cells: Vec<EntropyParams> = m_grid
        .iter()
        .flat_map(|&m| r_grid.iter().map(move |&r| (m, r)))
        .map(|(m, r)| EntropyParams::with_convention(m, r, config.convention))
        .collect::<Result<_>>()?;

    let mut rows = cells
        .par_iter()
        .map(|params| {
            let mut correlations = Vec::new();
            let mut undefined = 0usize;
            let mut total = 0usize;
            for &dims in dims_list {
                for fi in 0..BaseFunctionKind::GENERAL.len() {
                    let (mut x, mut y) = (Vec::new(), Vec::new());
                    for c in charts.iter().filter(|c| c.base == fi) {
                        total += 1;
                        match pae(&c.series, dims, params)?.value {
                            Some(v) => {
                                x.push(c.level);
                                y.push(v);
                            }
                            None => undefined += 1,
                        }
                    }
                    correlations.push(pearson(&x, &y).unwrap_or(0.0));
                }
            }
            let undefined_fraction = undefined as f64 / total as f64;
            Ok(CalibrationRow {
                m: params.m,
                r: params.r,
                mean_correlation: correlations.iter().sum::<f64>() / correlations.len() as f64,
                undefined_fraction,
                excluded: undefined_fraction > 0.5,
                rank: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    rows.sort_by(|a, b| {
        a.excluded
            .cmp(&b.excluded)
            .then(b.mean_correlation.total_cmp(&a.mean_correlation))
            .then(a.m.cmp(&b.m))
            .then(a.r.total_cmp(&b.r))
    });
    for (i, row) in rows.iter_mut().filter(|r| !r.excluded).enumerate() {
        row.rank = Some(i + 1);
    }
    Ok(CalibrationReport {
        dims: dims_list.to_vec(),
        config: config.clone(),
        seed,
        rows,
    })
}
