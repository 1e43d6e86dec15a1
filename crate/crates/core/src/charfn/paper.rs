//! Closed-form zero-order coefficients as stated for the separable
//! construction, including the power-law integral inside β̄.

use crate::do_process::DoConstants;
use crate::error::{Error, Result};
use crate::model::AdolModel;
use crate::numerics::Complex;

fn i() -> Complex {
    Complex::new(0.0, 1.0)
}

/// `(1 - e^{-x}) / x` continued to 1 at `x = 0`.
pub(crate) fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Antiderivative of `(κ + ϱ s^π) / ν(s)`.
pub fn drift_over_nu_antiderivative(s: f64, model: &AdolModel, c: &DoConstants) -> f64 {
    let a = 1.5 - model.h;
    let b = a + model.m_pi;
    (model.kappa * s.powf(a) / a + model.m_rho * s.powf(b) / b) / c.b_h
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PaperCoefficients {
    pub u: Complex,
    pub model: AdolModel,
    pub c: DoConstants,
}

impl PaperCoefficients {
    pub fn new(u: Complex, model: &AdolModel) -> Result<Self> {
        model.validate()?;
        if model.h >= 0.5 {
            return Err(Error::Domain(format!("closed-form β̄ needs H < 1/2, got H = {}", model.h)));
        }
        if model.theta != 0.0 {
            return Err(Error::Domain("characteristic-function engine requires theta = 0".into()));
        }
        if model.kappa == 0.0 {
            return Err(Error::Domain("closed-form γ requires kappa > 0".into()));
        }
        Ok(Self { u, model: *model, c: model.constants()? })
    }

    pub fn alpha(&self, t: f64) -> Complex {
        -i() * self.u * (self.model.r - self.model.q) * (t - self.model.t_mat)
    }

    pub fn gamma(&self, t: f64) -> Complex {
        gamma_paper(self.u, t, &self.model)
    }

    fn inv_nu(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            1.0 / (self.c.b_h * t.powf(self.model.h - 0.5))
        }
    }

    pub fn beta_bar(&self, t: f64) -> Complex {
        let m = &self.model;
        let tt = m.t_mat;
        let integral = drift_over_nu_antiderivative(t, m, &self.c) - drift_over_nu_antiderivative(tt, m, &self.c);
        let bracket = (m.kappa * (t - tt)).exp() * self.inv_nu(tt) - self.inv_nu(t) - integral;
        i() * m.rho * self.u * bracket
    }

    pub fn gamma_bar(&self, t: f64) -> Complex {
        gamma_bar(self.u, t, &self.model)
    }
}

/// The σ² coefficient as printed, with its `1 + u(1-ρ)²` factor.
pub fn gamma_paper(u: Complex, t: f64, model: &AdolModel) -> Complex {
    let k = model.kappa;
    let one_rho = 1.0 - model.rho;
    let lead = -u * (u * one_rho * one_rho + 1.0) / 4.0;
    // (1 - e^{2κ(t-T)}) / κ with the κ -> 0 limit 2(T - t)
    let x = 2.0 * k * (model.t_mat - t);
    lead * (2.0 * (model.t_mat - t) * one_minus_exp_over(x))
}

/// Coefficient of σ added when the mean-reversion level θ is nonzero.
pub fn gamma_bar(u: Complex, t: f64, model: &AdolModel) -> Complex {
    if model.theta == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    let k = model.kappa;
    // θ u (u+1)/κ (e^{κ(t-T)} - 1), continued to κ = 0
    let x = k * (model.t_mat - t);
    -u * (u + 1.0) * model.theta * (model.t_mat - t) * one_minus_exp_over(x)
}
