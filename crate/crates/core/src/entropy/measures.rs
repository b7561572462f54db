//! Baseline complexity measures: sample entropy, multiscale entropy,
//! flattened length, lag-1 autocorrelation and high-frequency spectral power.

use rustfft::{num_complex::Complex, FftPlanner};

use super::{approx_entropy, EntropyParams, EntropyScore};
use crate::error::{invalid, Result};
use crate::raster::PixelSeries;
use crate::stats::pearson;

pub const DEFAULT_HIGHFREQ_CUTOFF: f64 = 0.25;

/// Sample entropy `-ln(A / B)`.
///
/// `B` counts template pairs (no self-pairs) within `r` at the window length
/// given by the params' convention, `A` the same pairs still within `r` after
/// growing by one sample. Both use the same `N - len` templates. Undefined
/// when either count is zero.
pub fn sample_entropy(ys: &[f64], params: &EntropyParams) -> Result<EntropyScore> {
    let params = EntropyParams::with_convention(params.m, params.r, params.convention)?;
    let len = params.convention.span.samples(params.m);
    let n = ys.len();
    if n < len + 2 {
        return Err(invalid(format!(
            "sample entropy at {len}-sample windows needs at least {} samples, got {n}",
            len + 2
        )));
    }
    let templates = n - len;
    let r = params.r;
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..templates {
        for j in i + 1..templates {
            let d = (0..len).fold(0.0f64, |d, k| d.max((ys[i + k] - ys[j + k]).abs()));
            if d < r {
                b += 1;
                if (ys[i + len] - ys[j + len]).abs() < r {
                    a += 1;
                }
            }
        }
    }
    let value = (a > 0 && b > 0).then(|| -(a as f64 / b as f64).ln());
    Ok(EntropyScore { value, params, n })
}

/// Means of consecutive non-overlapping blocks of `scale` samples; a trailing
/// partial block is dropped.
pub fn coarse_grain(ys: &[f64], scale: usize) -> Vec<f64> {
    ys.chunks_exact(scale)
        .map(|c| c.iter().sum::<f64>() / scale as f64)
        .collect()
}

/// Approximate entropy of the coarse-grained series at each scale.
pub fn multiscale_entropy(
    ys: &[f64],
    params: &EntropyParams,
    scales: &[usize],
) -> Result<Vec<(usize, EntropyScore)>> {
    scales
        .iter()
        .map(|&s| {
            if s == 0 {
                return Err(invalid("scale 0 is not a valid coarse-graining factor"));
            }
            let coarse = coarse_grain(ys, s);
            if coarse.len() < params.min_len() {
                return Err(invalid(format!(
                    "scale {s} leaves {} samples, fewer than the {} needed at m = {}",
                    coarse.len(),
                    params.min_len(),
                    params.m
                )));
            }
            Ok((s, approx_entropy(&coarse, params)?))
        })
        .collect()
}

/// Arc length of the column polyline in pixel units.
pub fn flattened_length(ps: &PixelSeries) -> f64 {
    ps.ys()
        .windows(2)
        .map(|w| (1.0 + (w[1] - w[0]) * (w[1] - w[0])).sqrt())
        .sum()
}

/// Pearson correlation of the series with itself shifted by one column.
/// `None` when either half has zero variance.
pub fn autocorr_lag1(ps: &PixelSeries) -> Option<f64> {
    let ys = ps.ys();
    let (a, b) = (&ys[..ys.len() - 1], &ys[1..]);
    pearson(a, b)
}

/// Fraction of the mean-removed spectral power above `cutoff_fraction` of the
/// Nyquist frequency. `None` for a flat series.
pub fn fourier_highfreq_ratio(ps: &PixelSeries, cutoff_fraction: f64) -> Result<Option<f64>> {
    let n = ps.len();
    if n < 8 {
        return Err(invalid(format!("spectral ratio needs at least 8 columns, got {n}")));
    }
    if !(cutoff_fraction > 0.0 && cutoff_fraction < 1.0) {
        return Err(invalid(format!(
            "cutoff fraction must lie in (0, 1), got {cutoff_fraction}"
        )));
    }
    let mean = ps.ys().iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = ps.ys().iter().map(|y| Complex::new(y - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let half = n as f64 / 2.0;
    let (mut total, mut high) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().skip(1) {
        let power = c.norm_sqr();
        total += power;
        // Two-sided spectrum: bin k and n - k share a frequency.
        let freq = k.min(n - k) as f64 / half;
        if freq > cutoff_fraction {
            high += power;
        }
    }
    // Round-off leaves ~1e-25 of "power" in a constant series.
    let scale: f64 = ps.ys().iter().map(|y| y * y).sum::<f64>().max(1.0);
    if total <= 1e-18 * scale * n as f64 {
        return Ok(None);
    }
    Ok(Some((high / total).clamp(0.0, 1.0)))
}
