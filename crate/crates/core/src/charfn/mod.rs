//! Characteristic function of `log(S_T / S_0)` under the risk-neutral
//! measure.
//!
//! Two zero-order engines are available. [`CfMode::PaperClosedForm`] uses
//! the closed-form coefficients of the separable construction together with
//! Green's-function corrections. [`CfMode::AffineOde`] solves the ξ = 0
//! reduction of the pricing PDE with an exponential-affine ansatz and builds
//! the corrections as polynomial prefactors.

pub mod affine;
pub mod correction;
pub mod green;
pub mod paper;
pub mod residual;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::AdolModel;
use crate::numerics::{Complex, OdeSpec, QuadratureSpec};

pub use affine::{solve_affine, AffineSolution, Poly};
pub use correction::{correction, PaperCorrection};
pub use green::{heat_kernel, j_integral, GreenPieces, JIntegrand, JMethod};
pub use paper::{gamma_bar, gamma_paper};
pub use residual::{pde_residual, ResidualStats};

/// Which zero-order construction is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CfMode {
    PaperClosedForm,
    #[default]
    AffineOde,
}

impl CfMode {
    pub fn tag(&self) -> &'static str {
        match self {
            CfMode::PaperClosedForm => "paper-closed-form",
            CfMode::AffineOde => "affine-ode",
        }
    }
}

fn default_step() -> f64 {
    1e-3
}

fn default_outer_factor() -> f64 {
    10.0
}

fn default_j_method() -> JMethod {
    JMethod::QuadraticAtVarsigma
}

/// Settings of the ξ-expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionConfig {
    #[serde(default)]
    pub mode: CfMode,
    #[serde(default)]
    pub order: usize,
    /// Relative σ step of the finite-difference stencils.
    #[serde(default = "default_step")]
    pub sigma_step: f64,
    /// Relative 𝒱 step of the finite-difference stencils.
    #[serde(default = "default_step")]
    pub v_step: f64,
    /// Step multiplier of the outer stencil in the nested second-order term.
    #[serde(default = "default_outer_factor")]
    pub outer_step_factor: f64,
    #[serde(default = "default_j_method")]
    pub j_method: JMethod,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub ode: OdeSpec,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            mode: CfMode::default(),
            order: 0,
            sigma_step: default_step(),
            v_step: default_step(),
            outer_step_factor: default_outer_factor(),
            j_method: default_j_method(),
            quad: QuadratureSpec::default(),
            ode: OdeSpec::default(),
        }
    }
}

impl CorrectionConfig {
    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    pub fn with_mode(self, mode: CfMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > affine::MAX_ORDER {
            return Err(invalid("order", "must be 0, 1 or 2"));
        }
        for (name, v) in
            [("sigma_step", self.sigma_step), ("v_step", self.v_step), ("outer_step_factor", self.outer_step_factor)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        self.quad.validate()?;
        self.ode.validate()
    }
}

/// Exponent coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub alpha: Complex,
    pub gamma: Complex,
    pub beta_bar: Complex,
    pub gamma_bar: Complex,
}

impl CoefficientValues {
    /// `exp(α + γσ² + β̄σ𝒱 + γ̄σ)`.
    pub fn z0(&self, sigma: f64, v: f64) -> Complex {
        (self.alpha + self.gamma * sigma * sigma + self.beta_bar * sigma * v + self.gamma_bar * sigma).exp()
    }
}

/// Zero-order exponent coefficients as functions of time.
#[derive(Debug, Clone, Copy)]
pub struct CfCoefficients {
    u: Complex,
    model: AdolModel,
    mode: CfMode,
    ode: OdeSpec,
}

impl CfCoefficients {
    pub fn mode(&self) -> CfMode {
        self.mode
    }

    pub fn at(&self, t: f64) -> Result<CoefficientValues> {
        match self.mode {
            CfMode::PaperClosedForm => {
                let pc = paper::PaperCoefficients::new(self.u, &self.model)?;
                Ok(CoefficientValues {
                    alpha: pc.alpha(t),
                    gamma: pc.gamma(t),
                    beta_bar: pc.beta_bar(t),
                    gamma_bar: pc.gamma_bar(t),
                })
            }
            CfMode::AffineOde => {
                let sol = solve_affine(self.u, &self.model, t, 0, &self.ode)?;
                Ok(CoefficientValues { alpha: sol.a, gamma: sol.gamma, beta_bar: sol.b, gamma_bar: Complex::default() })
            }
        }
    }

    pub fn alpha(&self, t: f64) -> Result<Complex> {
        Ok(self.at(t)?.alpha)
    }

    pub fn gamma(&self, t: f64) -> Result<Complex> {
        Ok(self.at(t)?.gamma)
    }

    pub fn beta_bar(&self, t: f64) -> Result<Complex> {
        Ok(self.at(t)?.beta_bar)
    }

    pub fn gamma_bar(&self, t: f64) -> Result<Complex> {
        Ok(self.at(t)?.gamma_bar)
    }
}

pub fn coeffs_paper(u: Complex, model: &AdolModel) -> Result<CfCoefficients> {
    paper::PaperCoefficients::new(u, model)?;
    Ok(CfCoefficients { u, model: *model, mode: CfMode::PaperClosedForm, ode: OdeSpec::default() })
}

pub fn coeffs_affine_ode(u: Complex, model: &AdolModel, ode: &OdeSpec) -> Result<CfCoefficients> {
    model.validate()?;
    if model.theta != 0.0 {
        return Err(crate::error::Error::Domain("characteristic-function engine requires theta = 0".into()));
    }
    ode.validate()?;
    Ok(CfCoefficients { u, model: *model, mode: CfMode::AffineOde, ode: *ode })
}

pub fn coefficients(u: Complex, model: &AdolModel, mode: CfMode, ode: &OdeSpec) -> Result<CfCoefficients> {
    match mode {
        CfMode::PaperClosedForm => coeffs_paper(u, model),
        CfMode::AffineOde => coeffs_affine_ode(u, model, ode),
    }
}

/// Zero-order CF at inception, evaluated at `(σ0, 𝒱0)`.
pub fn cf_zero(u: Complex, model: &AdolModel, mode: CfMode) -> Result<Complex> {
    cf_zero_with(u, model, mode, &OdeSpec::default())
}

pub fn cf_zero_with(u: Complex, model: &AdolModel, mode: CfMode, ode: &OdeSpec) -> Result<Complex> {
    if u == Complex::default() {
        model.validate()?;
        return Ok(Complex::new(1.0, 0.0));
    }
    let c = coefficients(u, model, mode, ode)?.at(0.0)?;
    Ok(c.z0(model.sigma0, model.v0))
}

pub fn green_pieces(model: &AdolModel, u: Complex, quad: QuadratureSpec) -> Result<GreenPieces> {
    GreenPieces::new(model, u, quad)
}

/// `z₀ + ξz₁ + ξ²z₂` truncated at `cfg.order`.
pub fn cf_total(u: Complex, model: &AdolModel, cfg: &CorrectionConfig) -> Result<Complex> {
    cfg.validate()?;
    model.validate()?;
    if u == Complex::default() {
        return Ok(Complex::new(1.0, 0.0));
    }
    let order = if model.xi == 0.0 { 0 } else { cfg.order };
    match cfg.mode {
        CfMode::AffineOde => {
            let sol = solve_affine(u, model, 0.0, order, &cfg.ode)?;
            Ok(sol.value(model.sigma0, model.v0, model.xi, order))
        }
        CfMode::PaperClosedForm => {
            let mut z = cf_zero_with(u, model, cfg.mode, &cfg.ode)?;
            if order >= 1 {
                let pc = PaperCorrection::new(u, model, cfg)?;
                let (z1, z2) = pc.first_two(order)?;
                z += z1 * model.xi + z2 * (model.xi * model.xi);
            }
            Ok(z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> AdolModel {
        AdolModel::baseline()
    }

    #[test]
    fn zero_frequency_every_mode_and_order() {
        for mode in [CfMode::AffineOde, CfMode::PaperClosedForm] {
            for order in 0..=2 {
                let cfg = CorrectionConfig::default().with_mode(mode).with_order(order);
                let v = cf_total(Complex::default(), &baseline(), &cfg).unwrap();
                assert_eq!(v, Complex::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn no_vol_of_vol_ignores_order() {
        let m = baseline().with_xi(0.0);
        let u = Complex::new(1.7, 0.0);
        for mode in [CfMode::AffineOde, CfMode::PaperClosedForm] {
            let zero = cf_zero(u, &m, mode).unwrap();
            for order in 0..=2 {
                let cfg = CorrectionConfig::default().with_mode(mode).with_order(order);
                assert!((cf_total(u, &m, &cfg).unwrap() - zero).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn affine_conjugate_symmetry() {
        let m = AdolModel { r: 0.02, q: 0.01, ..baseline() };
        let cfg = CorrectionConfig::default();
        for u in [0.3, 1.0, 4.5, 12.0] {
            let a = cf_total(Complex::new(u, 0.0), &m, &cfg).unwrap();
            let b = cf_total(Complex::new(-u, 0.0), &m, &cfg).unwrap();
            assert!((a - b.conj()).norm() < 1e-10, "u={u}");
        }
    }

    #[test]
    fn terminal_coefficients_vanish() {
        let m = baseline();
        let u = Complex::new(0.8, 0.2);
        for c in [coeffs_paper(u, &m).unwrap(), coeffs_affine_ode(u, &m, &OdeSpec::default()).unwrap()] {
            let v = c.at(m.t_mat).unwrap();
            for x in [v.alpha, v.gamma, v.beta_bar, v.gamma_bar] {
                assert!(x.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn paper_zero_order_golden_value() {
        let m = baseline();
        let u = Complex::new(1.0, 0.0);
        let paper = cf_zero(u, &m, CfMode::PaperClosedForm).unwrap();
        let pc = paper::PaperCoefficients::new(u, &m).unwrap();
        let expected = (pc.alpha(0.0) + pc.gamma(0.0) * 0.09 + pc.beta_bar(0.0) * 1.5).exp();
        assert!((paper - expected).norm() < 1e-15);
        // both modes are proper CFs at u = 1, but the ρ-structure differs
        let affine = cf_zero(u, &m, CfMode::AffineOde).unwrap();
        assert!(paper.norm() <= 1.0 && affine.norm() <= 1.0);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(CorrectionConfig::default().with_order(3).validate().is_err());
        let bad = CorrectionConfig { sigma_step: 0.0, ..CorrectionConfig::default() };
        assert!(bad.validate().is_err());
        let json = r#"{"mode":"paper-closed-form","order":1,"j_method":"quadrature"}"#;
        let cfg: CorrectionConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.mode, CfMode::PaperClosedForm);
        assert_eq!(cfg.j_method, JMethod::Quadrature);
        assert!(serde_json::from_str::<CorrectionConfig>(r#"{"ordr":1}"#).is_err());
    }
}
