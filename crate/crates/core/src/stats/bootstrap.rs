use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_RESAMPLES: usize = 2000;

/// Statistic evaluated on each bootstrap resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Mean,
}

impl Statistic {
    fn eval(self, values: &[f64]) -> f64 {
        match self {
            Statistic::Mean => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

/// Percentile bootstrap interval at confidence `level` (e.g. 0.95).
///
/// Resample `i` draws from its own ChaCha stream, so the interval depends
/// only on `seed`, not on how resamples are scheduled across threads.
pub fn bootstrap_ci(
    values: &[f64],
    statistic: Statistic,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(invalid(format!(
            "bootstrap needs at least 2 values, got {}",
            values.len()
        )));
    }
    if n_resamples == 0 {
        return Err(invalid("n_resamples must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must be in (0, 1), got {level}")));
    }
    let n = values.len();
    let mut stats: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample: Vec<f64> = (0..n).map(|_| values[rng.gen_range(0..n)]).collect();
            statistic.eval(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile(&stats, alpha), quantile(&stats, 1.0 - alpha)))
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
