use serde::{Deserialize, Serialize};

use crate::entropy::{pae, EntropyParams};
use crate::error::{invalid, Result};
use crate::raster::ChartDims;
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothResult {
    pub series: TimeSeries,
    pub achieved_pae: f64,
    /// Moving-average width; 1 means the input was returned unchanged.
    pub window: usize,
    pub reached: bool,
}

/// Centered moving average; the window shrinks symmetrically near the ends.
fn moving_average(ys: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = ys.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, y) in ys.iter().enumerate() {
        prefix[i + 1] = prefix[i] + y;
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

fn score(series: &TimeSeries, dims: ChartDims, params: &EntropyParams) -> Result<f64> {
    pae(series, dims, params)?
        .value
        .ok_or_else(|| invalid("PAE is undefined for this chart under the given parameters"))
}

/// Widens a centered moving average (3, 5, 7, ...) until the chart's PAE is
/// at most `target`. If `max_window` is reached first, the lowest-PAE
/// smoothing tried is returned with `reached == false`.
pub fn smooth_to_pae(
    series: &TimeSeries,
    dims: ChartDims,
    target: f64,
    max_window: usize,
    params: &EntropyParams,
) -> Result<SmoothResult> {
    let current = score(series, dims, params)?;
    if current <= target {
        return Ok(SmoothResult {
            series: series.clone(),
            achieved_pae: current,
            window: 1,
            reached: true,
        });
    }
    if max_window < 3 {
        return Err(invalid(format!("max_window must be at least 3, got {max_window}")));
    }
    let mut best: Option<SmoothResult> = None;
    for window in (3..=max_window).step_by(2) {
        let smoothed = TimeSeries::new(series.xs().to_vec(), moving_average(series.ys(), window))?;
        let value = score(&smoothed, dims, params)?;
        let result = SmoothResult {
            series: smoothed,
            achieved_pae: value,
            window,
            reached: value <= target,
        };
        if result.reached {
            return Ok(result);
        }
        if best.as_ref().is_none_or(|b| value < b.achieved_pae) {
            best = Some(result);
        }
    }
    Ok(best.expect("max_window >= 3 tries at least one window"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectRow {
    pub dims: ChartDims,
    pub pae: Option<f64>,
}

/// PAE of `series` at each size, sorted ascending; undefined entries last.
pub fn aspect_sweep(series: &TimeSeries, dims_list: &[ChartDims], params: &EntropyParams) -> Result<Vec<AspectRow>> {
    let mut rows = dims_list
        .iter()
        .map(|&d| {
            let dims = ChartDims::new(d.width, d.height)?;
            Ok(AspectRow {
                dims,
                pae: pae(series, dims, params)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| match (a.pae, b.pae) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}
