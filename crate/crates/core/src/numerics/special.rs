//! Real-argument special functions: Gamma, symmetric Beta, the generalized
//! exponential integral, and the normal distribution helpers used by the
//! pricers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
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

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX_TERMS: usize = 1000;

fn lanczos(x: f64) -> f64 {
    // valid for x >= 0.5
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Gamma function for real, non-pole arguments.
///
/// Uses the g = 7 Lanczos approximation on `[0.5, ∞)` and the reflection
/// formula below that.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.round() {
        return Err(Error::Pole(x));
    }
    if x == x.round() && x <= 21.0 {
        // exact factorials
        let n = x as u32;
        return Ok((1..n).map(f64::from).product());
    }
    if x < 0.5 {
        let s = (PI * x).sin();
        Ok(PI / (s * lanczos(1.0 - x)))
    } else {
        Ok(lanczos(x))
    }
}

/// `B(x, x) = Γ(x)² / Γ(2x)`.
pub fn beta_sym(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("beta_sym requires x > 0, got {x}")));
    }
    let g = gamma_fn(x)?;
    Ok(g * g / gamma_fn(2.0 * x)?)
}

fn digamma_int(n: u32) -> f64 {
    -EULER_GAMMA + (1..n).map(|k| 1.0 / f64::from(k)).sum::<f64>()
}

/// Principal-branch `z^p` for real `z ≠ 0`.
fn real_pow_principal(z: f64, p: f64) -> Complex64 {
    if z > 0.0 {
        Complex64::new(z.powf(p), 0.0)
    } else if p == p.round() {
        let sign = if (p as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * (-z).powf(p), 0.0)
    } else {
        Complex64::from_polar((-z).powf(p), PI * p)
    }
}

fn principal_ln(z: f64) -> Complex64 {
    if z > 0.0 {
        Complex64::new(z.ln(), 0.0)
    } else {
        Complex64::new((-z).ln(), PI)
    }
}

/// Generalized exponential integral `E(ν, z) = z^{ν-1} Γ(1-ν, z)` for real
/// order and real argument.
///
/// For `z < 0` the principal-branch value is returned, which is complex in
/// general. Positive arguments above one use the Legendre continued fraction;
/// everything else uses the power series around the origin.
pub fn exp_integral_e(order: f64, z: f64) -> Result<Complex64> {
    if !order.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("exponential integral of non-finite input ({order}, {z})")));
    }
    if z == 0.0 {
        return Err(Error::Singular("E(order, z) at z = 0".into()));
    }
    if order == 0.0 {
        return Ok(Complex64::new((-z).exp() / z, 0.0));
    }
    if z > 1.0 {
        return continued_fraction(order, z).map(|v| Complex64::new(v, 0.0));
    }
    let is_positive_int = order >= 1.0 && order == order.round();
    if is_positive_int {
        Ok(series_integer_order(order as u32, z))
    } else {
        series_general_order(order, z)
    }
}

fn continued_fraction(order: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + order;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=SERIES_MAX_TERMS {
        let fi = i as f64;
        let a = -fi * (order - 1.0 + fi);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h * (-x).exp());
        }
    }
    Err(Error::Method(format!("continued fraction for E({order}, {x}) did not converge")))
}

fn series_integer_order(n: u32, z: f64) -> Complex64 {
    // E_n(z) = (-z)^{n-1}/(n-1)! [ψ(n) - ln z] - Σ_{k≠n-1} (-z)^k / ((k-n+1) k!)
    let nm1 = n - 1;
    let mut sum = 0.0;
    let mut term = 1.0; // (-z)^k / k!
    let mut lead = 0.0;
    for k in 0..SERIES_MAX_TERMS as u32 {
        if k > 0 {
            term *= -z / f64::from(k);
        }
        if k == nm1 {
            lead = term;
        } else {
            let del = term / (f64::from(k) - f64::from(nm1));
            sum -= del;
            if k > nm1 && del.abs() <= 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
    }
    let log_part = Complex64::new(digamma_int(n), 0.0) - principal_ln(z);
    log_part * lead + sum
}

fn series_general_order(order: f64, z: f64) -> Result<Complex64> {
    // E_ν(z) = Γ(1-ν) z^{ν-1} - Σ_k (-z)^k / (k! (1-ν+k))
    let a = 1.0 - order;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        if k > 0 {
            term *= -z / k as f64;
        }
        let del = term / (a + k as f64);
        sum += del;
        if k > 2 && del.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    let lead = real_pow_principal(z, order - 1.0) * gamma_fn(a)?;
    Ok(lead - sum)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-15);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        // mpmath, 30 digits
        assert!(rel(gamma_fn(2.2).unwrap(), 1.101_802_490_879_712_839_3) < 1e-13);
        assert!(rel(gamma_fn(-0.5).unwrap(), -3.544_907_701_811_032_054_6) < 1e-13);
        assert!(rel(gamma_fn(-1.7).unwrap(), 2.513_923_519_065_202_042_8) < 1e-12);
        assert!(rel(gamma_fn(0.3).unwrap(), 2.991_568_987_687_590_744_6) < 1e-13);
        assert!(rel(gamma_fn(3.7).unwrap(), 4.170_651_783_796_604_030_1) < 1e-13);
    }

    #[test]
    fn gamma_poles() {
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert!(matches!(gamma_fn(x), Err(Error::Pole(_))));
        }
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.1;
        while x <= 5.0 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "x={x}");
            x += 0.037;
        }
    }

    #[test]
    fn beta_sym_values() {
        assert!(rel(beta_sym(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(beta_sym(0.5).unwrap(), PI) < 1e-14);
        assert!(rel(beta_sym(1.2).unwrap(), 0.678_678_670_706_026_300_7) < 1e-13);
        assert!(beta_sym(0.0).is_err());
        assert!(beta_sym(-1.0).is_err());
    }

    #[test]
    fn exp_integral_values() {
        let e1 = exp_integral_e(1.0, 1.0).unwrap();
        assert!(rel(e1.re, 0.219_383_934_395_520_273_7) < 1e-14);
        assert_eq!(e1.im, 0.0);
        let e0 = exp_integral_e(0.0, 1.0).unwrap();
        assert!(rel(e0.re, (-1.0f64).exp()) < 1e-15);
        // mpmath.expint(0.5, -0.3)
        let e = exp_integral_e(0.5, -0.3).unwrap();
        assert!(rel(e.re, -2.219_364_557_856_148_736) < 1e-12);
        assert!(rel(e.im, -3.236_043_187_592_832_150) < 1e-12);
        // mpmath.expint(0.6, -0.2357)
        let e = exp_integral_e(0.6, -0.2357).unwrap();
        assert!(rel(e.re, -1.458_715_503_463_713_461) < 1e-12);
        assert!(rel(e.im, -3.760_583_815_378_708_929) < 1e-12);
        // E_1 on the negative axis: -Ei(0.5) - iπ
        let e = exp_integral_e(1.0, -0.5).unwrap();
        assert!(rel(e.re, -0.454_219_904_863_173_579_9) < 1e-12);
        assert!(rel(e.im, -PI) < 1e-14);
        assert!(matches!(exp_integral_e(0.5, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn exp_integral_matches_power_series_on_unit_interval() {
        // E_1(z) = -γ - ln z - Σ_{k≥1} (-z)^k / (k k!)
        for i in 1..=20 {
            let z = i as f64 / 20.0;
            let mut sum = 0.0;
            let mut term = 1.0;
            for k in 1..60 {
                term *= -z / k as f64;
                sum += term / k as f64;
            }
            let expected = -EULER_GAMMA - z.ln() - sum;
            let got = exp_integral_e(1.0, z).unwrap().re;
            assert!((got - expected).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn exp_integral_continuity_across_branch_switch() {
        for order in [0.3, 0.6, 1.0, 2.0, 2.5] {
            let below = exp_integral_e(order, 1.0).unwrap().re;
            let above = exp_integral_e(order, 1.0 + 1e-12).unwrap().re;
            assert!((below - above).abs() < 1e-11 * below.abs(), "order={order}");
        }
    }

    #[test]
    fn normal_cdf_symmetry() {
        for x in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
    }
}
