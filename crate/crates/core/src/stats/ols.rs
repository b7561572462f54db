use serde::{Deserialize, Serialize};

use super::dist::t_two_sided;
use crate::error::{invalid, Error, Result};

/// Simple linear regression `y = intercept + slope * x` with a t-test on the
/// slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub t_stat: f64,
    /// Two-sided, `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(invalid(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(invalid(format!("regression needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return Err(Error::Degenerate("x has zero variance".into()));
    }
    if syy <= 0.0 {
        return Err(Error::Degenerate("y has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    let df = nf - 2.0;
    let slope_se = (ss_res / df / sxx).sqrt();
    let t_stat = if slope_se > 0.0 {
        slope / slope_se
    } else {
        f64::INFINITY.copysign(slope)
    };
    Ok(OlsFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        t_stat,
        p_value: t_two_sided(t_stat, df),
        n,
    })
}
