//! Tail probabilities for the t, chi-squared and normal distributions, built
//! on the regularized incomplete beta and gamma functions.

const EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 500;

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms), for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fastest below the mean.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn inc_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn inc_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    inc_gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    inc_gamma_q(0.5, z * z / 2.0).clamp(0.0, 1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    let half_tail = 0.5 * inc_gamma_q(0.5, z * z / 2.0);
    if z >= 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.stats / scipy.special.
    fn close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol * want.abs().max(1e-300) || (got - want).abs() < 1e-12,
            "got {got:e}, want {want:e}"
        );
    }

    #[test]
    fn ln_gamma_values() {
        close(ln_gamma(0.5), 0.5723649429247, 1e-12);
        close(ln_gamma(10.3), 13.482036786138359, 1e-12);
        close(ln_gamma(150.0), 600.0094705553274, 1e-12);
        close(ln_gamma(1.0), 0.0, 1e-12);
    }

    #[test]
    fn incomplete_functions() {
        close(inc_beta(2.5, 0.5, 0.3), 0.018927124071945658, 1e-9);
        close(inc_beta(10.0, 3.0, 0.8), 0.5583457484800002, 1e-9);
        close(inc_beta(0.5, 0.5, 0.1), 0.20483276469913345, 1e-9);
        close(inc_gamma_p(0.5, 0.2), 0.47291074313446196, 1e-9);
        close(inc_gamma_p(3.0, 2.5), 0.45618688411667035, 1e-9);
        close(inc_gamma_p(10.0, 15.0), 0.9301463393005901, 1e-9);
    }

    #[test]
    fn t_tail() {
        close(t_two_sided(2.0, 5.0), 0.10193947882985828, 1e-8);
        close(t_two_sided(0.5, 1.0), 0.7048327646991336, 1e-8);
        close(t_two_sided(1.96, 1000.0), 0.05027318495574871, 1e-8);
        close(t_two_sided(3.5, 10.0), 0.0057265054298852106, 1e-8);
        close(t_two_sided(-3.5, 10.0), 0.0057265054298852106, 1e-8);
        close(t_two_sided(37.8, 298.0), 1.030293328704297e-115, 1e-6);
        assert_eq!(t_two_sided(0.0, 7.0), 1.0);
    }

    #[test]
    fn chi2_tail() {
        close(chi2_sf(10.6, 4.0), 0.031447041613534364, 1e-8);
        close(chi2_sf(9.32, 3.0), 0.025325408410481, 1e-8);
        close(chi2_sf(3.84, 1.0), 0.05004352124870519, 1e-8);
        close(chi2_sf(0.5, 2.0), 0.7788007830714049, 1e-8);
        close(chi2_sf(25.0, 10.0), 0.005345505487134069, 1e-8);
    }

    #[test]
    fn normal_tail() {
        close(normal_two_sided(1.96), 0.04999579029644087, 1e-8);
        close(normal_two_sided(4.78), 1.7529519458584038e-06, 1e-8);
        close(normal_two_sided(0.3), 0.7641771556220948, 1e-8);
        close(normal_two_sided(-2.42), 0.015520507101107285, 1e-8);
        close(normal_cdf(0.0), 0.5, 1e-12);
        close(normal_cdf(-1.96), 0.04999579029644087 / 2.0, 1e-8);
    }
}
