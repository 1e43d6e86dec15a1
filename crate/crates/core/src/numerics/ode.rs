//! Dormand–Prince 5(4) integrator for complex vector ODEs with adaptive
//! step control. Integration may run backward (`t1 < t0`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in years.
    pub max_step: f64,
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-13, max_step: 0.05 }
    }
}

impl OdeSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_step: f64) -> Result<Self> {
        let spec = Self { rel_tol, abs_tol, max_step };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step", "must be > 0"));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn check_finite(v: &[Complex64], t: f64) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("ODE right-hand side at t = {t}")))
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..y.len() {
        let mut acc = Complex64::default();
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` starting at `y0`.
pub fn integrate_ode<F>(mut rhs: F, t0: f64, t1: f64, y0: &[Complex64], spec: &OdeSpec) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64]) -> Vec<Complex64>,
{
    spec.validate()?;
    if !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Domain(format!("ODE interval [{t0}, {t1}] not finite")));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    if t0 == t1 || n == 0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut h = (span / 100.0).min(spec.max_step).max(span * 1e-10);

    let mut k1 = rhs(t, &y);
    check_finite(&k1, t)?;
    let mut tmp = vec![Complex64::default(); n];
    let mut y_new = vec![Complex64::default(); n];

    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= span * 1e-14 {
            break;
        }
        if h > remaining {
            h = remaining;
        }
        let min_step = 1e-14 * t.abs().max(span);
        if h < min_step {
            return Err(Error::StepUnderflow { t });
        }
        let hs = h * dir;

        axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * hs, &tmp);
        check_finite(&k2, t)?;
        axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * hs, &tmp);
        check_finite(&k3, t)?;
        axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * hs, &tmp);
        check_finite(&k4, t)?;
        axpy(&mut tmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * hs, &tmp);
        check_finite(&k5, t)?;
        axpy(&mut tmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + hs, &tmp);
        check_finite(&k6, t)?;
        axpy(&mut y_new, &y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if h == remaining { t1 } else { t + hs };
        let k7 = rhs(t_new, &y_new);
        check_finite(&k7, t_new)?;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let scale = spec.abs_tol + spec.rel_tol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k1 = k7;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(spec.max_step);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exponential_growth() {
        let y = integrate_ode(|_, y| vec![y[0]], 0.0, 1.0, &[c(1.0)], &OdeSpec::default()).unwrap();
        assert!((y[0].re - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn exponential_decay() {
        let kappa = 2.0;
        let y = integrate_ode(|_, y| vec![y[0] * (-2.0 * kappa)], 0.0, 0.5, &[c(1.0)], &OdeSpec::default()).unwrap();
        assert!((y[0].re - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let spec = OdeSpec::default();
        let f = |t: f64, y: &[Complex64]| vec![y[0] * Complex64::new(-0.3, t)];
        let fwd = integrate_ode(f, 0.0, 1.3, &[c(1.0)], &spec).unwrap();
        let back = integrate_ode(f, 1.3, 0.0, &fwd, &spec).unwrap();
        assert!((back[0] - c(1.0)).norm() < 1e-9);
    }

    #[test]
    fn coupled_rotation() {
        // y1' = -w y2, y2' = w y1  =>  (cos wt, sin wt)
        let w = 3.0;
        let y =
            integrate_ode(|_, y| vec![-y[1] * w, y[0] * w], 0.0, 2.0, &[c(1.0), c(0.0)], &OdeSpec::default()).unwrap();
        assert!((y[0].re - (w * 2.0).cos()).abs() < 1e-9);
        assert!((y[1].re - (w * 2.0).sin()).abs() < 1e-9);
    }

    #[test]
    fn coupled_triangular_system() {
        // y1' = -y1, y2' = y1 - 2 y2, y(0) = (1, 0):  y2 = e^{-t} - e^{-2t}
        let y = integrate_ode(|_, y| vec![-y[0], y[0] - y[1] * 2.0], 0.0, 1.5, &[c(1.0), c(0.0)], &OdeSpec::default())
            .unwrap();
        let expected = (-1.5f64).exp() - (-3.0f64).exp();
        assert!((y[1].re - expected).abs() < 1e-11);
    }

    #[test]
    fn non_finite_rhs_reported() {
        let r = integrate_ode(|t, _| vec![c(1.0 / (t - 0.5))], 0.0, 1.0, &[c(0.0)], &OdeSpec::default());
        assert!(matches!(r, Err(Error::NonFinite(_)) | Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(OdeSpec::new(0.0, 1e-10, 0.1).is_err());
        assert!(OdeSpec::new(1e-8, 1e-10, -1.0).is_err());
    }
}
