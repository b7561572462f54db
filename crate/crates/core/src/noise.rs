//! Triangle-noise injection and the target-seeking loop that raises a chart's
//! PAE to a requested value.
//!
//! Noise is applied in pixel space, after rasterization, so that the PAE
//! measured after each insertion is exactly the PAE of the chart that will be
//! drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{pae_pixels, EntropyParams};
use crate::error::{invalid, Error, Result};
use crate::raster::{rasterize, ChartDims, PixelSeries};
use crate::series::TimeSeries;

/// Half-width of a triangle in pixel columns at the default 300px width.
pub const DEFAULT_HALF_WIDTH: usize = 2;
/// Fresh draws tried per step before giving up on staying under the target.
pub const DEFAULT_RETRY_BUDGET: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 0.015;
pub const DEFAULT_MAX_STEPS: usize = 5000;

/// Parameters of triangle noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Spread of the uniform amplitude draw, in data units.
    pub sigma: f64,
    /// Triangle half-width in pixel columns.
    pub half_width: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, half_width: usize, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("noise sigma must be positive, got {sigma}")));
        }
        if half_width < 1 {
            return Err(invalid("triangle half-width must be at least 1 column"));
        }
        Ok(Self {
            sigma,
            half_width,
            seed,
        })
    }

    /// Uses the standard deviation of the clean series as sigma. It is taken
    /// once and stays fixed however much noise accumulates afterwards.
    pub fn for_series(series: &TimeSeries, seed: u64) -> Result<Self> {
        let sigma = series.std_dev();
        if sigma <= 0.0 {
            return Err(Error::Degenerate(
                "a constant series has no spread to scale noise by".into(),
            ));
        }
        Self::new(sigma, DEFAULT_HALF_WIDTH, seed)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Sigma converted to pixels for a chart rasterized with `ps`'s scale.
    pub fn sigma_px(&self, ps: &PixelSeries) -> f64 {
        self.sigma * ps.y_scale()
    }
}

/// Adds `delta` at column `center`, tapering linearly to zero at
/// `center +- half_width`. Results are clamped into `[0, height]`; columns
/// outside the triangle are untouched.
pub fn apply_triangle(ps: &PixelSeries, center: usize, delta: f64, half_width: usize) -> PixelSeries {
    let mut ys = ps.ys().to_vec();
    let hw = half_width.max(1) as i64;
    let n = ys.len() as i64;
    for k in (1 - hw)..hw {
        let col = center as i64 + k;
        if (0..n).contains(&col) {
            let weight = 1.0 - k.abs() as f64 / hw as f64;
            ys[col as usize] += delta * weight;
        }
    }
    ps.with_values(ys)
}

/// One noise insertion at a uniformly drawn column with amplitude drawn from
/// `U(-sigma_px, sigma_px)`.
pub fn add_noise_step<R: Rng + ?Sized>(ps: &PixelSeries, spec: &NoiseSpec, rng: &mut R) -> PixelSeries {
    let center = rng.gen_range(0..ps.len());
    let s = spec.sigma_px(ps);
    let delta = if s > 0.0 { rng.gen_range(-s..s) } else { 0.0 };
    apply_triangle(ps, center, delta, spec.half_width)
}

/// Stopping rules for [`perturb_pixels`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbOptions {
    pub tolerance: f64,
    pub max_steps: usize,
    pub retry_budget: usize,
    pub params: EntropyParams,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_steps: DEFAULT_MAX_STEPS,
            retry_budget: DEFAULT_RETRY_BUDGET,
            params: EntropyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbResult {
    pub series: PixelSeries,
    pub achieved_pae: f64,
    /// Noise insertions kept.
    pub steps: usize,
    pub converged: bool,
}

fn score(ps: &PixelSeries, params: &EntropyParams) -> Result<Option<f64>> {
    Ok(pae_pixels(ps, params)?.value)
}

/// Adds triangle noise to `start` until its PAE is within `tolerance` of
/// `target`.
///
/// A draw that overshoots `target + tolerance` is discarded and redrawn, up
/// to `retry_budget` times; if every draw overshoots, the one closest to the
/// target is kept and the loop continues.
pub fn perturb_pixels<R: Rng + ?Sized>(
    start: &PixelSeries,
    target: f64,
    opts: &PerturbOptions,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<PerturbResult> {
    if !(opts.tolerance > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", opts.tolerance)));
    }
    let params = &opts.params;
    let mut current = start.clone();
    let mut value = score(&current, params)?.ok_or_else(|| {
        Error::Degenerate("the starting chart has undefined PAE under these parameters".into())
    })?;
    if target < value - opts.tolerance {
        return Err(Error::UnreachableTarget {
            target,
            current: value,
        });
    }

    let mut steps = 0;
    while (value - target).abs() > opts.tolerance && steps < opts.max_steps {
        let mut closest: Option<(PixelSeries, f64)> = None;
        let mut accepted = None;
        for _ in 0..opts.retry_budget.max(1) {
            let candidate = add_noise_step(&current, spec, rng);
            let Some(v) = score(&candidate, params)? else {
                continue;
            };
            if v <= target + opts.tolerance {
                accepted = Some((candidate, v));
                break;
            }
            if closest
                .as_ref()
                .is_none_or(|(_, c)| (v - target).abs() < (c - target).abs())
            {
                closest = Some((candidate, v));
            }
        }
        if let Some((ps, v)) = accepted.or(closest) {
            current = ps;
            value = v;
        }
        steps += 1;
    }

    Ok(PerturbResult {
        converged: (value - target).abs() <= opts.tolerance,
        series: current,
        achieved_pae: value,
        steps,
    })
}

/// Rasterizes `series` and perturbs it to `target` with the default entropy
/// parameters, drawing from `spec.seed`.
pub fn perturb_to_target_pae(
    series: &TimeSeries,
    dims: ChartDims,
    target: f64,
    tolerance: f64,
    max_steps: usize,
    spec: &NoiseSpec,
) -> Result<PerturbResult> {
    let ps = rasterize(series, dims)?;
    let opts = PerturbOptions {
        tolerance,
        max_steps,
        ..PerturbOptions::default()
    };
    perturb_pixels(&ps, target, &opts, spec, &mut spec.rng())
}
