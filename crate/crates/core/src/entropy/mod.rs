//! Approximate entropy on per-column chart values, and the other complexity
//! measures it is compared against.
//!
//! For a series `y` of length `N`, windows of a fixed length are compared with
//! the Chebyshev distance (largest aligned difference). For each window the
//! fraction of windows within tolerance `r` is taken, and `phi` averages the
//! log of those fractions. Approximate entropy is `phi(m) - phi(m + 1)`: how
//! much log-probability of staying similar is lost when windows grow by one
//! sample. Computed on a rasterized chart it is the chart's *pixel
//! approximate entropy* (PAE).
//!
//! Two details vary between formulations and are selected by [`Convention`]:
//! whether "window length `m`" means `m` or `m + 1` samples, and whether a
//! window counts itself as a match. The default ([`Convention::CLASSICAL`])
//! uses `m` samples and counts the self-match, which keeps every window's
//! fraction positive; [`Convention::LITERAL`] spans `m + 1` samples and
//! excludes the self-match, in which case a window without neighbours makes
//! `phi` undefined. Distances are always compared with strict `d < r`, and
//! logs are natural.

mod measures;

pub use measures::{
    autocorr_lag1, coarse_grain, flattened_length, fourier_highfreq_ratio, multiscale_entropy,
    sample_entropy, DEFAULT_HIGHFREQ_CUTOFF,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::raster::{rasterize, ChartDims, PixelSeries};
use crate::series::TimeSeries;

/// How many samples a window of nominal length `m` spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSpan {
    /// `m` samples.
    M,
    /// `m + 1` samples: indices `i..=i+m`.
    MPlusOne,
}

impl WindowSpan {
    pub fn samples(self, m: usize) -> usize {
        match self {
            WindowSpan::M => m,
            WindowSpan::MPlusOne => m + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Convention {
    pub span: WindowSpan,
    pub self_match: bool,
}

impl Convention {
    pub const CLASSICAL: Convention = Convention {
        span: WindowSpan::M,
        self_match: true,
    };
    pub const LITERAL: Convention = Convention {
        span: WindowSpan::MPlusOne,
        self_match: false,
    };
}

impl Default for Convention {
    fn default() -> Self {
        Convention::CLASSICAL
    }
}

/// Window length `m` and tolerance `r` (in the units of the series; pixels
/// for PAE).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyParams {
    pub m: usize,
    pub r: f64,
    #[serde(default)]
    pub convention: Convention,
}

impl EntropyParams {
    pub const DEFAULT_M: usize = 2;
    pub const DEFAULT_R: f64 = 20.0;

    pub fn new(m: usize, r: f64) -> Result<Self> {
        Self::with_convention(m, r, Convention::default())
    }

    pub fn with_convention(m: usize, r: f64, convention: Convention) -> Result<Self> {
        if m < 1 {
            return Err(invalid("window length m must be at least 1"));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("tolerance r must be positive, got {r}")));
        }
        Ok(Self { m, r, convention })
    }

    /// Shortest series for which both `phi(m)` and `phi(m + 1)` see at least
    /// two windows.
    pub fn min_len(&self) -> usize {
        self.convention.span.samples(self.m + 1) + 1
    }
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            m: Self::DEFAULT_M,
            r: Self::DEFAULT_R,
            convention: Convention::default(),
        }
    }
}

/// An entropy estimate; `value` is `None` when some window had no match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyScore {
    pub value: Option<f64>,
    pub params: EntropyParams,
    pub n: usize,
}

impl EntropyScore {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    /// The value, or NaN when undefined. Handy for sorting and statistics.
    pub fn value_or_nan(&self) -> f64 {
        self.value.unwrap_or(f64::NAN)
    }
}

/// Chebyshev distance between the windows starting at `i` and `j`, each
/// spanning `m + 1` samples (`i..=i+m`).
pub fn window_distance(ys: &[f64], i: usize, j: usize, m: usize) -> Result<f64> {
    let n = ys.len();
    if i + m >= n || j + m >= n {
        return Err(invalid(format!(
            "window of length {} at {i} or {j} runs past the end of a series of length {n}",
            m + 1
        )));
    }
    Ok(chebyshev(ys, i, j, m + 1))
}

#[inline]
fn chebyshev(ys: &[f64], i: usize, j: usize, len: usize) -> f64 {
    (0..len).fold(0.0, |d: f64, k| d.max((ys[i + k] - ys[j + k]).abs()))
}

/// Per-window match counts at window lengths `len` and `len + 1`.
///
/// `short[i]` counts windows `k != i` of length `len` within `r` of window
/// `i`; `long` does the same for length `len + 1` (one fewer window). Pairs
/// are visited by lag so each absolute difference is computed once per lag.
fn match_counts(ys: &[f64], len: usize, r: f64) -> (Vec<u32>, Vec<u32>) {
    let n = ys.len();
    let w_short = n + 1 - len;
    let w_long = n - len;
    let mut short = vec![0u32; w_short];
    let mut long = vec![0u32; w_long];
    let mut diffs = vec![0.0f64; n];

    for lag in 1..w_short {
        let span = n - lag;
        for k in 0..span {
            diffs[k] = (ys[k] - ys[k + lag]).abs();
        }
        for i in 0..w_short - lag {
            let d = diffs[i..i + len].iter().fold(0.0f64, |a, &b| a.max(b));
            if d < r {
                let j = i + lag;
                short[i] += 1;
                short[j] += 1;
                if j < w_long && diffs[i + len] < r {
                    long[i] += 1;
                    long[j] += 1;
                }
            }
        }
    }
    (short, long)
}

fn phi_from_counts(counts: &[u32], self_match: bool) -> Option<f64> {
    let w = counts.len();
    let extra = u32::from(self_match);
    // Summing over a histogram of counts makes the result independent of
    // window order, so reversed series give bit-identical values.
    let mut freq = vec![0u32; w + 2];
    for &c in counts {
        let c = c + extra;
        if c == 0 {
            return None;
        }
        freq[c as usize] += 1;
    }
    let wf = w as f64;
    let total: f64 = freq
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(c, &f)| f as f64 * (c as f64 / wf).ln())
        .sum();
    Some(total / wf)
}

/// `phi` for nominal window length `m`: the mean log fraction of windows
/// within `r` of each window. `None` when some window matches nothing.
pub fn phi(ys: &[f64], m: usize, r: f64, convention: Convention) -> Result<Option<f64>> {
    let len = convention.span.samples(m);
    if m < 1 || !(r > 0.0) {
        return Err(invalid(format!("need m >= 1 and r > 0, got m = {m}, r = {r}")));
    }
    if ys.len() < len + 1 {
        return Err(invalid(format!(
            "series of length {} has fewer than 2 windows of {len} samples",
            ys.len()
        )));
    }
    // The long counts are a by-product; reuse the pair loop for simplicity.
    let (short, _) = match_counts(ys, len, r);
    Ok(phi_from_counts(&short, convention.self_match))
}

/// Approximate entropy `phi(m) - phi(m + 1)`.
pub fn approx_entropy(ys: &[f64], params: &EntropyParams) -> Result<EntropyScore> {
    let params = EntropyParams::with_convention(params.m, params.r, params.convention)?;
    let n = ys.len();
    if n < params.min_len() {
        return Err(invalid(format!(
            "approximate entropy with m = {} needs at least {} samples, got {n}",
            params.m,
            params.min_len()
        )));
    }
    let len = params.convention.span.samples(params.m);
    let (short, long) = match_counts(ys, len, params.r);
    let self_match = params.convention.self_match;
    let value = match (
        phi_from_counts(&short, self_match),
        phi_from_counts(&long, self_match),
    ) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    Ok(EntropyScore { value, params, n })
}

/// PAE of an already rasterized chart.
pub fn pae_pixels(ps: &PixelSeries, params: &EntropyParams) -> Result<EntropyScore> {
    approx_entropy(ps.ys(), params)
}

/// Pixel approximate entropy: rasterize, then take approximate entropy of the
/// column values.
pub fn pae(series: &TimeSeries, dims: ChartDims, params: &EntropyParams) -> Result<EntropyScore> {
    pae_pixels(&rasterize(series, dims)?, params)
}
