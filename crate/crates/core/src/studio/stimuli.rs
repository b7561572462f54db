//! Stimulus sets for the perception experiments: line-ups, find-the-
//! difference pairs, shape identification and the glance-time sweep.
//!
//! Every trial draws from its own substream of the set's master seed, so a
//! set regenerates byte for byte and trials can be built in parallel.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::substream_seed;
use crate::entropy::{pae_pixels, EntropyParams};
use crate::error::{invalid, Error, Result};
use crate::noise::{perturb_pixels, NoiseSpec, PerturbOptions, DEFAULT_MAX_STEPS, DEFAULT_RETRY_BUDGET, DEFAULT_TOLERANCE};
use crate::raster::{mask_series, rasterize, render_chart, ChartDims, ChartStyle, PixelSeries};
use crate::series::{generate_base, BaseFunctionKind, TimeSeries};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub const LINEUP_LEVELS: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
pub const DIFF_INITIAL_PAES: [f64; 3] = [0.045, 0.09, 0.18];
/// Magnitudes; each is used with both signs.
pub const DIFF_DELTAS: [f64; 5] = [0.015, 0.03, 0.06, 0.09, 0.12];
pub const SHAPE_LEVELS: [f64; 4] = [0.2, 0.4, 0.8, 1.2];
pub const SHAPE_PER_CELL: usize = 5;
pub const GLANCE_MS: [u32; 4] = [50, 100, 200, 2000];
/// Magnitudes; each is used with both signs.
pub const GLANCE_DELTAS: [f64; 3] = [0.015, 0.06, 0.24];

const DIFF_GLANCE_MS: u32 = 200;
const DIFF_PAUSE_MS: u32 = 200;
const SHAPE_GLANCE_MS: u32 = 500;
const REAL_WINDOW_SLACK: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LineUp,
    FindDifference,
    ShapeId,
}

/// How a find-the-difference pair was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Initial chart first, then more noise for the alternative.
    Forward,
    /// Negative delta: the lower-PAE alternative first, then more noise for
    /// the initial chart.
    LowerFirst,
    /// Negative delta whose lower target is below the clean chart: the pair
    /// is built at `initial_pae` and `initial_pae + |delta|` and the higher
    /// chart is shown as the initial one.
    Anchored,
}

/// Settings shared by all generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub dims: ChartDims,
    pub params: EntropyParams,
    pub tolerance: f64,
    pub max_steps: usize,
    pub style: ChartStyle,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            dims: ChartDims::default(),
            params: EntropyParams::default(),
            tolerance: DEFAULT_TOLERANCE,
            max_steps: DEFAULT_MAX_STEPS,
            style: ChartStyle::default(),
        }
    }
}

impl GenConfig {
    fn perturb_options(&self, tolerance: f64) -> PerturbOptions {
        PerturbOptions {
            tolerance,
            max_steps: self.max_steps,
            retry_budget: DEFAULT_RETRY_BUDGET,
            params: self.params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub role: String,
    /// Paths relative to the directory the set is written into.
    pub svg: String,
    pub pgm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_pae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_pae: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseFunctionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_pae: Option<f64>,
    /// Signed PAE difference of the alternative relative to the initial chart.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pae_levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pae_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<BaseFunctionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
    pub glance_ms: u32,
    pub pause_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnswerKey {
    /// Roles of the charts with the highest and lowest achieved PAE.
    LineUp { most_complex: String, least_complex: String },
    /// Which option shows the initial chart.
    Match { initial_option: String },
    Shape { shape: BaseFunctionKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialManifest {
    pub schema_version: u32,
    pub set_id: String,
    pub trial_id: String,
    pub trial_index: usize,
    /// Position of this trial in the shuffled session order.
    pub presentation_index: usize,
    pub experiment: Experiment,
    pub seed: u64,
    pub condition: Condition,
    pub answer_key: AnswerKey,
    /// Roles in the order they are shown within the trial.
    pub presentation_order: Vec<String>,
    pub images: Vec<ImageRef>,
}

/// A chart in memory, kept alongside the manifest so tests and callers can
/// re-score exactly what was rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusChart {
    pub role: String,
    pub series: PixelSeries,
    pub target_pae: Option<f64>,
    pub achieved_pae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub manifest: TrialManifest,
    pub charts: Vec<StimulusChart>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSet {
    pub set_id: String,
    pub experiment: Experiment,
    pub master_seed: u64,
    pub config: GenConfig,
    pub trials: Vec<Trial>,
}

impl StimulusSet {
    pub fn manifests(&self) -> Vec<&TrialManifest> {
        self.trials.iter().map(|t| &t.manifest).collect()
    }

    /// The manifest as a pretty-printed JSON array, newline-terminated.
    pub fn manifest_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.manifests())?;
        s.push('\n');
        Ok(s)
    }

    /// Writes images and `manifest.json` under `outdir/{set_id}/` and returns
    /// that directory.
    pub fn write_to(&self, outdir: impl AsRef<Path>) -> Result<PathBuf> {
        let outdir = outdir.as_ref();
        let set_dir = outdir.join(&self.set_id);
        fs::create_dir_all(&set_dir)?;
        for trial in &self.trials {
            for (chart, image) in trial.charts.iter().zip(&trial.manifest.images) {
                let rendered = render_chart(&chart.series, &self.config.style);
                write_atomic(&outdir.join(&image.svg), rendered.svg.as_bytes())?;
                write_atomic(&outdir.join(&image.pgm), &rendered.pgm)?;
            }
        }
        write_atomic(&set_dir.join("manifest.json"), self.manifest_json()?.as_bytes())?;
        Ok(set_dir)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn chart(role: impl Into<String>, series: PixelSeries, target: Option<f64>, achieved: Option<f64>) -> StimulusChart {
    StimulusChart {
        role: role.into(),
        series,
        target_pae: target,
        achieved_pae: achieved,
    }
}

fn image_refs(set_id: &str, trial_id: &str, charts: &[StimulusChart]) -> Vec<ImageRef> {
    charts
        .iter()
        .map(|c| ImageRef {
            role: c.role.clone(),
            svg: format!("{set_id}/{trial_id}_{}.svg", c.role),
            pgm: format!("{set_id}/{trial_id}_{}.pgm", c.role),
            target_pae: c.target_pae,
            achieved_pae: c.achieved_pae,
        })
        .collect()
}

/// A shuffled session order: `result[trial_index]` is its position.
fn presentation_positions(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(substream_seed(seed, &[u64::MAX])));
    let mut pos = vec![0; n];
    for (p, &t) in order.iter().enumerate() {
        pos[t] = p;
    }
    pos
}

fn clean_chart(base: BaseFunctionKind, cfg: &GenConfig) -> Result<(TimeSeries, PixelSeries)> {
    let series = generate_base(base, cfg.dims.width, 0)?;
    let ps = rasterize(&series, cfg.dims)?;
    Ok((series, ps))
}

/// Perturbs `start` to `target`, failing unless the result is within
/// `tolerance`.
fn reach<R: Rng>(
    start: &PixelSeries,
    target: f64,
    tolerance: f64,
    cfg: &GenConfig,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(PixelSeries, f64)> {
    let r = perturb_pixels(start, target, &cfg.perturb_options(tolerance), spec, rng)?;
    if !r.converged {
        return Err(Error::NotConverged(format!(
            "PAE target {target} not reached within {} steps (closest {:.4})",
            cfg.max_steps, r.achieved_pae
        )));
    }
    Ok((r.series, r.achieved_pae))
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(invalid("no PAE levels given"));
    }
    if let Some(l) = levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(invalid(format!("PAE level must be a non-negative number, got {l}")));
    }
    Ok(())
}

/// Where line-up charts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum LineupSource {
    /// Noise added to a clean base function.
    Synthetic(BaseFunctionKind),
    /// Windows of `window` consecutive samples cut from a recorded series.
    Real {
        name: String,
        series: TimeSeries,
        window: usize,
    },
}

/// One line-up trial with a chart per PAE level in shuffled positions
/// (`chart0`, `chart1`, ...).
pub fn generate_lineup_set(source: &LineupSource, pae_levels: &[f64], cfg: &GenConfig, seed: u64) -> Result<StimulusSet> {
    check_levels(pae_levels)?;
    let (set_id, condition_source, base, charts) = match source {
        LineupSource::Synthetic(base) => {
            let (series, clean) = clean_chart(*base, cfg)?;
            let charts = pae_levels
                .par_iter()
                .enumerate()
                .map(|(i, &level)| {
                    let spec = NoiseSpec::for_series(&series, substream_seed(seed, &[i as u64]))?;
                    let (ps, v) = reach(&clean, level, cfg.tolerance, cfg, &spec, &mut spec.rng())?;
                    Ok((ps, level, v))
                })
                .collect::<Result<Vec<_>>>()?;
            (format!("lineup-{}", base.name()), None, Some(*base), charts)
        }
        LineupSource::Real { name, series, window } => {
            let charts = real_windows(series, *window, pae_levels, cfg)?;
            (format!("lineup-{name}"), Some(name.clone()), None, charts)
        }
    };

    let mut positions: Vec<usize> = (0..charts.len()).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(substream_seed(seed, &[u64::MAX - 1])));
    // positions[k] = which level is shown at slot k.
    let stim: Vec<StimulusChart> = positions
        .iter()
        .enumerate()
        .map(|(slot, &li)| {
            let (ps, target, achieved) = &charts[li];
            chart(format!("chart{slot}"), ps.clone(), Some(*target), Some(*achieved))
        })
        .collect();
    let by_pae = |max: bool| {
        let it = stim.iter().map(|c| (c.role.clone(), c.achieved_pae.unwrap()));
        if max {
            it.max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0
        } else {
            it.min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0
        }
    };
    let trial_id = "t000".to_owned();
    let manifest = TrialManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        set_id: set_id.clone(),
        trial_id: trial_id.clone(),
        trial_index: 0,
        presentation_index: 0,
        experiment: Experiment::LineUp,
        seed,
        condition: Condition {
            base,
            source: condition_source,
            pae_levels: Some(pae_levels.to_vec()),
            ..Condition::default()
        },
        answer_key: AnswerKey::LineUp {
            most_complex: by_pae(true),
            least_complex: by_pae(false),
        },
        presentation_order: stim.iter().map(|c| c.role.clone()).collect(),
        images: image_refs(&set_id, &trial_id, &stim),
    };
    Ok(StimulusSet {
        set_id,
        experiment: Experiment::LineUp,
        master_seed: seed,
        config: *cfg,
        trials: vec![Trial {
            manifest,
            charts: stim,
        }],
    })
}

/// Picks, for each level, the unused window whose PAE is nearest to it.
fn real_windows(series: &TimeSeries, window: usize, levels: &[f64], cfg: &GenConfig) -> Result<Vec<(PixelSeries, f64, f64)>> {
    let n = series.len();
    if window < 4 || window > n {
        return Err(invalid(format!(
            "window of {window} samples does not fit a series of {n}"
        )));
    }
    let starts = n - window + 1;
    let stride = (starts / 2000).max(1);
    let scored: Vec<(usize, PixelSeries, f64)> = (0..starts)
        .step_by(stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| {
            let w = TimeSeries::new(
                series.xs()[s..s + window].to_vec(),
                series.ys()[s..s + window].to_vec(),
            )?;
            let ps = rasterize(&w, cfg.dims)?;
            let v = pae_pixels(&ps, &cfg.params)?.value;
            Ok(v.map(|v| (s, ps, v)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut used = vec![false; scored.len()];
    levels
        .iter()
        .map(|&level| {
            let best = scored
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|a, b| (a.1 .2 - level).abs().total_cmp(&(b.1 .2 - level).abs()));
            match best {
                Some((i, (_, ps, v))) if (v - level).abs() <= REAL_WINDOW_SLACK => {
                    used[i] = true;
                    Ok((ps.clone(), level, *v))
                }
                Some((_, (_, _, v))) => Err(Error::UnreachableTarget {
                    target: level,
                    current: *v,
                }),
                None => Err(invalid(format!("no window left for PAE level {level}"))),
            }
        })
        .collect()
}

struct PairSpec {
    base: BaseFunctionKind,
    initial_pae: f64,
    delta: f64,
    glance_ms: u32,
    pause_ms: u32,
}

fn diff_trial(set_id: &str, index: usize, pair: &PairSpec, cfg: &GenConfig, seed: u64) -> Result<Trial> {
    if pair.delta == 0.0 || !pair.delta.is_finite() {
        return Err(invalid("delta must be non-zero; the two options would be identical"));
    }
    let (series, clean) = clean_chart(pair.base, cfg)?;
    let clean_pae = pae_pixels(&clean, &cfg.params)?
        .value
        .ok_or_else(|| Error::Degenerate("clean chart has undefined PAE".into()))?;
    let tol = cfg.tolerance.min(pair.delta.abs() / 3.0);
    let spec = NoiseSpec::for_series(&series, seed)?;
    let mut rng = spec.rng();
    let lower = pair.initial_pae + pair.delta;

    let (construction, initial, alternative) = if pair.delta > 0.0 {
        let init = reach(&clean, pair.initial_pae, tol, cfg, &spec, &mut rng)?;
        let alt = reach(&init.0, lower, tol, cfg, &spec, &mut rng)?;
        (Construction::Forward, (init, pair.initial_pae), (alt, lower))
    } else if lower >= clean_pae - tol {
        let alt = reach(&clean, lower, tol, cfg, &spec, &mut rng)?;
        let init = reach(&alt.0, pair.initial_pae, tol, cfg, &spec, &mut rng)?;
        (Construction::LowerFirst, (init, pair.initial_pae), (alt, lower))
    } else {
        let higher = pair.initial_pae - pair.delta;
        let alt = reach(&clean, pair.initial_pae, tol, cfg, &spec, &mut rng)?;
        let init = reach(&alt.0, higher, tol, cfg, &spec, &mut rng)?;
        (Construction::Anchored, (init, higher), (alt, pair.initial_pae))
    };
    let (((init_ps, init_v), init_t), ((alt_ps, alt_v), alt_t)) = (initial, alternative);

    let initial_first: bool = rng.gen();
    let (opt_a, opt_b) = if initial_first {
        ((&init_ps, init_t, init_v), (&alt_ps, alt_t, alt_v))
    } else {
        ((&alt_ps, alt_t, alt_v), (&init_ps, init_t, init_v))
    };
    let mask = mask_series(cfg.dims, substream_seed(seed, &[1]))?;
    let charts = vec![
        chart("initial", init_ps.clone(), Some(init_t), Some(init_v)),
        chart("mask", mask, None, None),
        chart("optA", opt_a.0.clone(), Some(opt_a.1), Some(opt_a.2)),
        chart("optB", opt_b.0.clone(), Some(opt_b.1), Some(opt_b.2)),
    ];
    let trial_id = format!("t{index:03}");
    Ok(Trial {
        manifest: TrialManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            set_id: set_id.to_owned(),
            trial_id: trial_id.clone(),
            trial_index: index,
            presentation_index: 0,
            experiment: Experiment::FindDifference,
            seed,
            condition: Condition {
                base: Some(pair.base),
                initial_pae: Some(pair.initial_pae),
                delta: Some(pair.delta),
                sign: Some(if pair.delta > 0.0 { 1 } else { -1 }),
                construction: Some(construction),
                glance_ms: pair.glance_ms,
                pause_ms: pair.pause_ms,
                ..Condition::default()
            },
            answer_key: AnswerKey::Match {
                initial_option: if initial_first { "optA" } else { "optB" }.to_owned(),
            },
            presentation_order: charts.iter().map(|c| c.role.clone()).collect(),
            images: image_refs(set_id, &trial_id, &charts),
        },
        charts,
    })
}

fn diff_set(set_id: &str, pairs: Vec<PairSpec>, cfg: &GenConfig, seed: u64) -> Result<StimulusSet> {
    let mut trials = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| diff_trial(set_id, i, p, cfg, substream_seed(seed, &[i as u64])))
        .collect::<Result<Vec<_>>>()?;
    for (t, pos) in trials.iter_mut().zip(presentation_positions(pairs.len(), seed)) {
        t.manifest.presentation_index = pos;
    }
    Ok(StimulusSet {
        set_id: set_id.to_owned(),
        experiment: Experiment::FindDifference,
        master_seed: seed,
        config: *cfg,
        trials,
    })
}

/// A single find-the-difference trial: initial chart, mask, and the initial
/// and alternative charts as `optA`/`optB` in random order.
pub fn generate_diff_pair(base: BaseFunctionKind, initial_pae: f64, delta: f64, cfg: &GenConfig, seed: u64) -> Result<StimulusSet> {
    let pair = PairSpec {
        base,
        initial_pae,
        delta,
        glance_ms: DIFF_GLANCE_MS,
        pause_ms: DIFF_PAUSE_MS,
    };
    diff_set("diff", vec![pair], cfg, seed)
}

/// Find-the-difference trials over initial PAE x signed delta, `per_cell`
/// each.
pub fn generate_diff_grid(
    base: BaseFunctionKind,
    initial_paes: &[f64],
    deltas: &[f64],
    per_cell: usize,
    cfg: &GenConfig,
    seed: u64,
) -> Result<StimulusSet> {
    check_levels(initial_paes)?;
    check_levels(deltas)?;
    let mut pairs = Vec::new();
    for &initial_pae in initial_paes {
        for &d in deltas {
            for delta in [d, -d] {
                for _ in 0..per_cell {
                    pairs.push(PairSpec {
                        base,
                        initial_pae,
                        delta,
                        glance_ms: DIFF_GLANCE_MS,
                        pause_ms: DIFF_PAUSE_MS,
                    });
                }
            }
        }
    }
    diff_set("diff", pairs, cfg, seed)
}

/// Find-the-difference trials on the linear base over initial PAE x delta
/// magnitude x sign x glance time, with no pause.
pub fn generate_glance_sweep(
    glance_ms_list: &[u32],
    initial_paes: &[f64],
    deltas: &[f64],
    per_cell: usize,
    cfg: &GenConfig,
    seed: u64,
) -> Result<StimulusSet> {
    check_levels(initial_paes)?;
    check_levels(deltas)?;
    if glance_ms_list.is_empty() {
        return Err(invalid("no glance times given"));
    }
    let mut pairs = Vec::new();
    for &initial_pae in initial_paes {
        for &d in deltas {
            for delta in [d, -d] {
                for &glance_ms in glance_ms_list {
                    for _ in 0..per_cell {
                        pairs.push(PairSpec {
                            base: BaseFunctionKind::Linear,
                            initial_pae,
                            delta,
                            glance_ms,
                            pause_ms: 0,
                        });
                    }
                }
            }
        }
    }
    diff_set("glance", pairs, cfg, seed)
}

/// `per_cell` noisy charts for every (shape, level); the answer is the shape.
pub fn generate_shape_trials(
    shapes: &[BaseFunctionKind],
    pae_levels: &[f64],
    per_cell: usize,
    cfg: &GenConfig,
    seed: u64,
) -> Result<StimulusSet> {
    check_levels(pae_levels)?;
    if shapes.is_empty() || per_cell == 0 {
        return Err(invalid("need at least one shape and one chart per cell"));
    }
    if let Some(s) = shapes.iter().find(|s| !s.is_shape()) {
        return Err(invalid(format!("{s} is not a shape (use increasing, decreasing, peak or trough)")));
    }
    let set_id = "shape-id";
    let mut cells = Vec::new();
    for &shape in shapes {
        for &level in pae_levels {
            for _ in 0..per_cell {
                cells.push((shape, level));
            }
        }
    }
    let mut trials = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(shape, level))| {
            let trial_seed = substream_seed(seed, &[i as u64]);
            let (series, clean) = clean_chart(shape, cfg)?;
            let spec = NoiseSpec::for_series(&series, trial_seed)?;
            let (ps, v) = reach(&clean, level, cfg.tolerance, cfg, &spec, &mut spec.rng())?;
            let charts = vec![chart("chart", ps, Some(level), Some(v))];
            let trial_id = format!("t{i:03}");
            Ok(Trial {
                manifest: TrialManifest {
                    schema_version: MANIFEST_SCHEMA_VERSION,
                    set_id: set_id.to_owned(),
                    trial_id: trial_id.clone(),
                    trial_index: i,
                    presentation_index: 0,
                    experiment: Experiment::ShapeId,
                    seed: trial_seed,
                    condition: Condition {
                        shape: Some(shape),
                        pae_level: Some(level),
                        glance_ms: SHAPE_GLANCE_MS,
                        pause_ms: 0,
                        ..Condition::default()
                    },
                    answer_key: AnswerKey::Shape { shape },
                    presentation_order: vec!["chart".to_owned()],
                    images: image_refs(set_id, &trial_id, &charts),
                },
                charts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (t, pos) in trials.iter_mut().zip(presentation_positions(cells.len(), seed)) {
        t.manifest.presentation_index = pos;
    }
    Ok(StimulusSet {
        set_id: set_id.to_owned(),
        experiment: Experiment::ShapeId,
        master_seed: seed,
        config: *cfg,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GenConfig {
        GenConfig::default()
    }

    fn rescore(c: &StimulusChart) -> f64 {
        pae_pixels(&c.series, &EntropyParams::default()).unwrap().value.unwrap()
    }

    #[test]
    fn lineup_keys_and_tolerance() {
        let set = generate_lineup_set(&LineupSource::Synthetic(BaseFunctionKind::Cosine), &LINEUP_LEVELS, &cfg(), 11)
            .unwrap();
        let trial = &set.trials[0];
        assert_eq!(trial.charts.len(), 8);
        assert_eq!(trial.manifest.images.len(), 8);
        for c in &trial.charts {
            let v = rescore(c);
            assert_eq!(Some(v), c.achieved_pae);
            assert!((v - c.target_pae.unwrap()).abs() <= 0.015);
        }
        let AnswerKey::LineUp { most_complex, least_complex } = &trial.manifest.answer_key else {
            panic!("wrong key kind");
        };
        let find = |role: &str| trial.charts.iter().find(|c| c.role == role).unwrap();
        assert_eq!(find(most_complex).target_pae, Some(0.8));
        assert_eq!(find(least_complex).target_pae, Some(0.1));
        // Presentation is shuffled, not in level order.
        let targets: Vec<f64> = trial.charts.iter().map(|c| c.target_pae.unwrap()).collect();
        assert_ne!(targets, LINEUP_LEVELS);
    }

    #[test]
    fn lineup_unreachable_level_is_named() {
        let err = generate_lineup_set(&LineupSource::Synthetic(BaseFunctionKind::Cosine), &[0.3, -0.0001], &cfg(), 1);
        assert!(err.is_err());
        let s = generate_base(BaseFunctionKind::Linear, 300, 0).unwrap();
        let spec_err = generate_lineup_set(
            &LineupSource::Real {
                name: "lin".into(),
                series: s,
                window: 100,
            },
            &[0.5],
            &cfg(),
            1,
        );
        assert!(matches!(spec_err, Err(Error::UnreachableTarget { target, .. }) if target == 0.5));
    }

    #[test]
    fn lineup_from_real_windows() {
        // A random walk whose later half is much rougher than its start.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut y = 0.0;
        let ys: Vec<f64> = (0..3000)
            .map(|i| {
                let scale = 0.01 + (i as f64 / 3000.0).powi(2);
                y += rng.gen_range(-1.0..1.0) * scale + 0.002;
                y + rng.gen_range(-1.0..1.0) * scale * 3.0
            })
            .collect();
        let series = TimeSeries::from_values(ys).unwrap();
        let set = generate_lineup_set(
            &LineupSource::Real {
                name: "walk".into(),
                series,
                window: 300,
            },
            &[0.2, 0.4, 0.6],
            &cfg(),
            2,
        )
        .unwrap();
        for c in &set.trials[0].charts {
            assert!((rescore(c) - c.target_pae.unwrap()).abs() <= 0.03);
        }
        assert_eq!(set.set_id, "lineup-walk");
    }

    #[test]
    fn diff_pair_recomputed_alternative() {
        let set = generate_diff_pair(BaseFunctionKind::Linear, 0.09, 0.06, &cfg(), 4).unwrap();
        let t = &set.trials[0];
        let roles: Vec<&str> = t.charts.iter().map(|c| c.role.as_str()).collect();
        assert_eq!(roles, ["initial", "mask", "optA", "optB"]);
        assert_eq!(t.manifest.condition.glance_ms, 200);
        assert_eq!(t.manifest.condition.pause_ms, 200);
        let AnswerKey::Match { initial_option } = &t.manifest.answer_key else {
            panic!("wrong key kind");
        };
        let other = if initial_option == "optA" { "optB" } else { "optA" };
        let find = |role: &str| t.charts.iter().find(|c| c.role == role).unwrap();
        assert_eq!(find(initial_option).series, find("initial").series);
        let alt = rescore(find(other));
        assert!((0.135..=0.165).contains(&alt), "{alt}");
    }

    #[test]
    fn diff_pair_zero_delta_rejected() {
        assert!(matches!(
            generate_diff_pair(BaseFunctionKind::Linear, 0.09, 0.0, &cfg(), 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn negative_delta_constructions() {
        let set = generate_diff_pair(BaseFunctionKind::Linear, 0.18, -0.06, &cfg(), 5).unwrap();
        let t = &set.trials[0];
        assert_eq!(t.manifest.condition.construction, Some(Construction::LowerFirst));
        let init = rescore(&t.charts[0]);
        assert!((init - 0.18).abs() <= 0.015);

        let set = generate_diff_pair(BaseFunctionKind::Linear, 0.045, -0.24, &cfg(), 5).unwrap();
        let t = &set.trials[0];
        assert_eq!(t.manifest.condition.construction, Some(Construction::Anchored));
        assert_eq!(t.charts[0].target_pae, Some(0.285));
        let opts: Vec<f64> = t.charts[2..].iter().map(rescore).collect();
        assert!(opts.iter().any(|v| (v - 0.045).abs() <= 0.015), "{opts:?}");
    }

    #[test]
    fn diff_set_is_deterministic() {
        let a = generate_diff_pair(BaseFunctionKind::Cosine, 0.09, -0.03, &cfg(), 6).unwrap();
        let b = generate_diff_pair(BaseFunctionKind::Cosine, 0.09, -0.03, &cfg(), 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.manifest_json().unwrap(), b.manifest_json().unwrap());
    }

    #[test]
    fn glance_defaults_have_72_cells() {
        let set = generate_glance_sweep(&GLANCE_MS, &DIFF_INITIAL_PAES, &GLANCE_DELTAS, 1, &cfg(), 8).unwrap();
        assert_eq!(set.trials.len(), 72);
        assert!(set.trials.iter().all(|t| t.manifest.condition.pause_ms == 0));
        let mut cells: Vec<String> = set
            .trials
            .iter()
            .map(|t| {
                let c = &t.manifest.condition;
                format!("{:?}/{:?}/{}", c.initial_pae, c.delta, c.glance_ms)
            })
            .collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 72);
        let mut pos: Vec<usize> = set.trials.iter().map(|t| t.manifest.presentation_index).collect();
        pos.sort_unstable();
        assert_eq!(pos, (0..72).collect::<Vec<_>>());
    }

    #[test]
    fn diff_grid_size() {
        let set = generate_diff_grid(BaseFunctionKind::Linear, &[0.09], &[0.03, 0.06], 2, &cfg(), 1).unwrap();
        assert_eq!(set.trials.len(), 8);
    }

    #[test]
    fn shape_trials_small_grid() {
        let set = generate_shape_trials(&BaseFunctionKind::SHAPES, &[0.2], 2, &cfg(), 9).unwrap();
        assert_eq!(set.trials.len(), 8);
        for t in &set.trials {
            let c = &t.charts[0];
            assert!((rescore(c) - 0.2).abs() <= 0.015);
            assert_eq!(t.manifest.condition.glance_ms, 500);
            let AnswerKey::Shape { shape } = t.manifest.answer_key else {
                panic!("wrong key kind");
            };
            assert_eq!(Some(shape), t.manifest.condition.shape);
        }
        for s in BaseFunctionKind::SHAPES {
            let n = set
                .trials
                .iter()
                .filter(|t| t.manifest.answer_key == AnswerKey::Shape { shape: s })
                .count();
            assert_eq!(n, 2);
        }
        assert!(generate_shape_trials(&[BaseFunctionKind::Cosine], &[0.2], 1, &cfg(), 0).is_err());
    }

    #[test]
    fn write_layout_and_bytes() {
        let set = generate_diff_pair(BaseFunctionKind::Linear, 0.09, 0.03, &cfg(), 2).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let da = set.write_to(a.path()).unwrap();
        set.write_to(b.path()).unwrap();
        assert!(da.ends_with("diff"));
        for role in ["initial", "mask", "optA", "optB"] {
            for ext in ["svg", "pgm"] {
                let rel = format!("diff/t000_{role}.{ext}");
                let x = fs::read(a.path().join(&rel)).unwrap();
                assert_eq!(x, fs::read(b.path().join(&rel)).unwrap(), "{rel}");
            }
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(da.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest[0]["schema_version"], 1);
        assert_eq!(manifest[0]["images"][2]["svg"], "diff/t000_optA.svg");
        assert!(!da.join("manifest.tmp").exists());
    }
}
