use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::{chi2_sf, normal_two_sided};
use crate::error::{invalid, Error, Result};

/// Coefficients beyond this magnitude mean fitted probabilities of 0 or 1:
/// the data are (quasi-)separated and the MLE does not exist.
const DIVERGENCE_LIMIT: f64 = 30.0;
const MAX_HALVINGS: usize = 40;

/// Binomial logistic regression fit. Index 0 is the intercept; index `k`
/// belongs to design column `k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Inverse observed information at the optimum.
    pub covariance: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted iteration, starting at beta = 0.
    pub ll_trace: Vec<f64>,
    /// Set when the fit did not converge, saying why.
    pub diagnostic: Option<String>,
}

fn log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| yi * e - softplus(e))
        .sum()
}

/// Bound on the rounding error of [`log_likelihood`]; differences smaller
/// than this carry no information about ascent.
fn ll_noise(ll: f64, n: usize) -> f64 {
    4.0 * f64::EPSILON * n as f64 * (1.0 + ll.abs() / n as f64)
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fits `P(outcome) = sigmoid(b0 + b . row)` by Newton-Raphson (iteratively
/// reweighted least squares), halving steps whenever the likelihood would
/// drop by more than the rounding error of its sum. Converged when the
/// largest coefficient change is below `tol`.
pub fn logit_fit(design: &[Vec<f64>], outcomes: &[bool], max_iter: usize, tol: f64) -> Result<LogitFit> {
    let n = outcomes.len();
    if design.len() != n {
        return Err(invalid(format!(
            "design has {} rows but there are {n} outcomes",
            design.len()
        )));
    }
    let k = design.first().map_or(0, Vec::len);
    if design.iter().any(|r| r.len() != k) {
        return Err(invalid("design rows have different lengths"));
    }
    let p = k + 1;
    if n <= p {
        return Err(invalid(format!(
            "{n} observations cannot identify {p} coefficients"
        )));
    }

    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { design[i][j - 1] });
    let y = DVector::from_iterator(n, outcomes.iter().map(|&o| f64::from(u8::from(o))));

    let successes = outcomes.iter().filter(|&&o| o).count();
    if successes == 0 || successes == n {
        let mut coefficients = vec![0.0; p];
        coefficients[0] = if successes == n {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return Ok(LogitFit {
            coefficients,
            std_errors: vec![f64::NAN; p],
            z_stats: vec![f64::NAN; p],
            p_values: vec![f64::NAN; p],
            covariance: vec![vec![f64::NAN; p]; p],
            converged: false,
            iterations: 0,
            log_likelihood: 0.0,
            ll_trace: vec![0.0],
            diagnostic: Some(format!(
                "every outcome is {}; the intercept diverges",
                successes == n
            )),
        });
    }

    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(&x, &y, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let (grad, info) = score_and_information(&x, &y, &beta);
        let Some(chol) = info.clone().cholesky() else {
            return Err(Error::Singular(
                "information matrix is not positive definite; check for collinear predictors"
                    .into(),
            ));
        };
        let delta = chol.solve(&grad);

        let mut scale = 1.0;
        let mut next = None;
        let noise = ll_noise(ll, n);
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &delta * scale;
            let cand_ll = log_likelihood(&x, &y, &cand);
            if cand_ll >= ll - noise {
                next = Some((cand, cand_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cand_ll)) = next else {
            // No ascent left at machine precision.
            converged = true;
            break;
        };
        let change = (&delta * scale).amax();
        beta = cand;
        ll = cand_ll;
        trace.push(ll);

        if let Some(idx) = beta.iter().position(|b| b.abs() > DIVERGENCE_LIMIT) {
            diagnostic = Some(format!(
                "complete separation: coefficient {idx} diverging ({:.1})",
                beta[idx]
            ));
            break;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("no convergence within {max_iter} iterations"));
    }

    let (_, info) = score_and_information(&x, &y, &beta);
    let cov = info
        .try_inverse()
        .ok_or_else(|| Error::Singular("information matrix is singular at the optimum".into()))?;
    let std_errors: Vec<f64> = (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let z_stats: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values = z_stats.iter().map(|&z| normal_two_sided(z)).collect();

    Ok(LogitFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        z_stats,
        p_values,
        covariance: (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect()).collect(),
        converged,
        iterations,
        log_likelihood: ll,
        ll_trace: trace,
        diagnostic,
    })
}

fn score_and_information(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let eta = x * beta;
    let mu = eta.map(sigmoid);
    let resid = y - &mu;
    let grad = x.transpose() * resid;
    let w = mu.map(|m| m * (1.0 - m));
    let mut xw = x.clone();
    for (i, mut row) in xw.row_iter_mut().enumerate() {
        row *= w[i];
    }
    (grad, x.transpose() * xw)
}

/// Joint Wald test that a group of coefficients (e.g. the dummies of one
/// categorical predictor) are all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn wald_categorical(fit: &LogitFit, group_indices: &[usize]) -> Result<WaldTest> {
    let p = fit.coefficients.len();
    if group_indices.is_empty() {
        return Err(invalid("Wald group is empty"));
    }
    if let Some(&bad) = group_indices.iter().find(|&&i| i >= p) {
        return Err(invalid(format!(
            "coefficient index {bad} out of range for {p} coefficients"
        )));
    }
    let g = group_indices.len();
    let b = DVector::from_iterator(g, group_indices.iter().map(|&i| fit.coefficients[i]));
    let v = DMatrix::from_fn(g, g, |a, c| fit.covariance[group_indices[a]][group_indices[c]]);
    let v_inv = v
        .try_inverse()
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::Singular("covariance submatrix of the Wald group is singular".into()))?;
    let chi2 = (b.transpose() * v_inv * &b)[(0, 0)];
    Ok(WaldTest {
        chi2,
        df: g,
        p_value: chi2_sf(chi2, g as f64),
    })
}
