//! Risk-neutral ADOL parameter set, the power-law mean-reversion profile and
//! the drift coefficients under both measures.

use serde::{Deserialize, Serialize};

use crate::do_process::{do_constants, DoConstants};
use crate::error::{invalid, Result};
use crate::numerics::Complex;

fn default_eps() -> f64 {
    1e-4
}

/// Full parameter set of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdolModel {
    pub s0: f64,
    pub sigma0: f64,
    pub v0: f64,
    pub r: f64,
    pub q: f64,
    pub kappa: f64,
    #[serde(default)]
    pub theta: f64,
    pub xi: f64,
    pub rho: f64,
    /// Market price of volatility risk; must be zero.
    #[serde(default)]
    pub lambda: f64,
    pub h: f64,
    pub m_rho: f64,
    pub m_pi: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub t_mat: f64,
    /// Physical drift of the spot. Accepted for completeness, unused by every
    /// pricing path.
    #[serde(default)]
    pub mu: f64,
}

impl AdolModel {
    /// Baseline parameter set: κ = 2, H = 0.3, T = 0.5, σ = 0.3,
    /// 𝒱 = 5, ρ = -0.5, ϱ = 1, π = 0.5, with unit spot, zero rates and
    /// ξ = 0.05.
    pub fn baseline() -> Self {
        Self {
            s0: 1.0,
            sigma0: 0.3,
            v0: 5.0,
            r: 0.0,
            q: 0.0,
            kappa: 2.0,
            theta: 0.0,
            xi: 0.05,
            rho: -0.5,
            lambda: 0.0,
            h: 0.3,
            m_rho: 1.0,
            m_pi: 0.5,
            eps: default_eps(),
            t_mat: 0.5,
            mu: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.s0,
            self.sigma0,
            self.v0,
            self.r,
            self.q,
            self.kappa,
            self.theta,
            self.xi,
            self.rho,
            self.lambda,
            self.h,
            self.m_rho,
            self.m_pi,
            self.eps,
            self.t_mat,
            self.mu,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("model", "all parameters must be finite"));
        }
        if !(self.s0 > 0.0) {
            return Err(invalid("s0", "spot must be > 0"));
        }
        if !(self.sigma0 > 0.0) {
            return Err(invalid("sigma0", "initial volatility must be > 0"));
        }
        if self.kappa < 0.0 {
            return Err(invalid("kappa", "mean-reversion rate must be >= 0"));
        }
        if self.theta < 0.0 {
            return Err(invalid("theta", "mean-reversion level must be >= 0"));
        }
        if self.xi < 0.0 {
            return Err(invalid("xi", "vol-of-vol must be >= 0"));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(invalid("rho", "correlation must lie in [-1, 1]"));
        }
        if self.lambda != 0.0 {
            return Err(invalid("lambda", "market price of volatility risk is fixed at 0"));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(invalid("h", "Hurst exponent must lie in (0, 1)"));
        }
        if self.m_pi < 0.0 {
            return Err(invalid("m_pi", "exponent must be >= 0"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps", "drift cutoff must be > 0"));
        }
        if !(self.t_mat > 0.0) {
            return Err(invalid("t_mat", "maturity must be > 0"));
        }
        if self.eps >= self.t_mat {
            return Err(invalid("eps", "drift cutoff must be below maturity"));
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<DoConstants> {
        do_constants(self.h)
    }

    /// Copy with a different maturity.
    pub fn with_maturity(&self, t_mat: f64) -> Self {
        Self { t_mat, ..*self }
    }

    /// Copy with a different vol-of-vol.
    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..*self }
    }
}

/// Mean-reversion profile `ϱ t^π` of the auxiliary state.
pub fn m_t(t: f64, model: &AdolModel) -> f64 {
    if model.m_pi == 0.0 {
        return model.m_rho;
    }
    model.m_rho * t.max(0.0).powf(model.m_pi)
}

/// `∫_a^b m(s) ds` in closed form.
pub fn m_integral(a: f64, b: f64, model: &AdolModel) -> f64 {
    let p = 1.0 + model.m_pi;
    model.m_rho * (b.max(0.0).powf(p) - a.max(0.0).powf(p)) / p
}

/// Risk-neutral drifts `(d log S, dσ, d𝒱)` per unit time. The spot entry is
/// the relative drift `r - q`; the σ entry includes the `κθ` shift, which is
/// zero under the default θ = 0.
pub fn q_drifts(t: f64, sigma: f64, v: f64, model: &AdolModel) -> (f64, f64, f64) {
    let m = m_t(t, model);
    let drift_s = model.r - model.q;
    let drift_sigma = model.kappa * model.theta - (model.kappa + model.xi * m * v) * sigma;
    let drift_v = -m * v;
    (drift_s, drift_sigma, drift_v)
}

/// Physical-measure drift of the adjusted auxiliary state, switched off on
/// `[0, ε]`.
pub fn p_drift_v(t: f64, v: f64, model: &AdolModel) -> Result<Complex> {
    if t <= model.eps {
        return Ok(Complex::new(0.0, 0.0));
    }
    let c = model.constants()?;
    let h = model.h;
    Ok(Complex::new((2.0 * h - 1.0) / t * v, h * c.d_h() * t.powf(h - 1.0)))
}

/// Outcome of the small vol-of-vol admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallParamReport {
    pub f_ht: f64,
    pub xi: f64,
    pub admissible: bool,
    pub margin: f64,
}

pub const DEFAULT_SMALL_PARAM_MARGIN: f64 = 0.25;

/// `2 / (B_H T^H)`, the scale against which ξ counts as small.
pub fn small_param_scale(h: f64, t: f64) -> Result<f64> {
    let c = do_constants(h)?;
    if !(t > 0.0) {
        return Err(invalid("t", "maturity must be > 0"));
    }
    Ok(2.0 / (c.b_h * t.powf(h)))
}

pub fn small_param_check(model: &AdolModel) -> Result<SmallParamReport> {
    small_param_check_with_margin(model, DEFAULT_SMALL_PARAM_MARGIN)
}

pub fn small_param_check_with_margin(model: &AdolModel, margin: f64) -> Result<SmallParamReport> {
    let f_ht = small_param_scale(model.h, model.t_mat)?;
    Ok(SmallParamReport { f_ht, xi: model.xi, admissible: model.xi <= margin * f_ht, margin })
}
