//! First and second ξ-corrections.
//!
//! In paper mode the source integral
//!
//! ```text
//! 𝓘(t; σ, 𝒱) = ∫_t^T bracket · e^{α(χ) - χ + f₁(χ)ω} J(t, ς, ω; χ) / (2√(π(χ-t))) dχ
//! ```
//!
//! is assembled on a fixed χ-rule and differentiated by central differences.
//! `z₁ = Φ₁𝓘` and `z₂ = Φ₂𝓘 + Φ₁Φ₁𝓘⁽²⁾`, where `𝓘⁽²⁾` carries the extra
//! weight `χ - t` produced by composing two source integrals. The
//! coefficients of Φ₁ are singular at `t = 0` for H < 1/2, so the stencil is
//! applied at `t = ε`.

use std::f64::consts::PI;

use crate::charfn::green::{j_integral, GreenPieces, JIntegrand, JMethod};
use crate::charfn::paper::PaperCoefficients;
use crate::charfn::{solve_affine, CfMode, CorrectionConfig};
use crate::error::{invalid, Error, Result};
use crate::model::{m_t, AdolModel};
use crate::numerics::{adaptive_partition, integrate_adaptive, panel_nodes, Complex};

/// Factor `1 - Θ(t - χ) + Θ(0)` of the transport Green's function on the
/// integration range `χ > t`, taken as 1.
fn heaviside_bracket(_t: f64, _chi: f64) -> f64 {
    1.0
}

/// State-independent data of one χ node.
#[derive(Debug, Clone, Copy)]
struct Node {
    chi: f64,
    /// Quadrature weight times kernel, bracket and `(χ-t)^power`.
    weight: f64,
    /// `α(χ) - χ`.
    base: Complex,
    /// `f₁(χ) e^{κχ}`, the coefficient of σ𝒱.
    drift: Complex,
    gamma_a1sq: Complex,
    alpha1: f64,
    two_tau: f64,
}

/// 𝓘 or 𝓘⁽²⁾ at fixed `t` on a frozen χ-rule.
struct Convolution {
    t: f64,
    nodes: Vec<Node>,
    j_method: JMethod,
    quad: crate::numerics::QuadratureSpec,
}

impl Convolution {
    fn value(&self, sigma: f64, v: f64) -> Result<Complex> {
        let mut acc = Complex::default();
        for n in &self.nodes {
            let j = JIntegrand {
                k: n.gamma_a1sq * (sigma * sigma * v * v),
                varsigma: n.alpha1 * v + n.two_tau,
                chi: n.chi,
                t: self.t,
            };
            let jv = j_integral(&j, self.j_method, &self.quad)?;
            acc += (n.base + n.drift * (sigma * v)).exp() * jv * n.weight;
        }
        if !(acc.re.is_finite() && acc.im.is_finite()) {
            return Err(Error::NonFinite(format!("source integral at sigma = {sigma}, v = {v}")));
        }
        Ok(acc)
    }
}

/// Paper-mode correction engine for one frequency.
pub struct PaperCorrection {
    g: GreenPieces,
    pc: PaperCoefficients,
    cfg: CorrectionConfig,
    t: f64,
}

impl PaperCorrection {
    pub fn new(u: Complex, model: &AdolModel, cfg: &CorrectionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            g: GreenPieces::new(model, u, cfg.quad)?,
            pc: PaperCoefficients::new(u, model)?,
            cfg: *cfg,
            t: model.eps,
        })
    }

    /// Time at which the stencil is applied.
    pub fn eval_time(&self) -> f64 {
        self.t
    }

    fn u(&self) -> Complex {
        self.g.u()
    }

    fn model(&self) -> &AdolModel {
        self.g.model()
    }

    fn node_core(&self, chi: f64) -> Result<Node> {
        let m = self.model();
        let t = self.t;
        let a1_int = if self.u() == Complex::default() {
            Complex::default()
        } else {
            integrate_adaptive(|k| self.g.a1(k), 0.0, chi - t, &self.cfg.quad)?
        };
        let f1 = self.pc.beta_bar(chi) * (-m.kappa * chi).exp() + a1_int;
        let alpha1 = self.g.alpha1(chi);
        Ok(Node {
            chi,
            weight: heaviside_bracket(t, chi) / (2.0 * (PI * (chi - t)).sqrt()),
            base: self.pc.alpha(chi) - chi,
            drift: f1 * (m.kappa * chi).exp(),
            gamma_a1sq: self.g.gamma(chi) * (alpha1 * alpha1),
            alpha1,
            two_tau: 2.0 * self.g.tau(chi)?,
        })
    }

    /// Build the χ-rule from an adaptive run at the model's initial state.
    fn convolution(&self, power: i32) -> Result<Convolution> {
        let m = self.model();
        let (t, tt) = (self.t, m.t_mat);
        let (s0, v0) = (m.sigma0, m.v0);
        let mut failure: Option<Error> = None;
        let mut probe = |chi: f64| -> Complex {
            if failure.is_some() {
                return Complex::default();
            }
            let eval = || -> Result<Complex> {
                let n = self.node_core(chi)?;
                let conv = Convolution {
                    t,
                    nodes: vec![Node { weight: n.weight * (chi - t).powi(power), ..n }],
                    j_method: self.cfg.j_method,
                    quad: self.cfg.quad,
                };
                conv.value(s0, v0)
            };
            match eval() {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    Complex::default()
                }
            }
        };
        let panels = adaptive_partition(&mut probe, t, tt, &self.cfg.quad)?;
        if let Some(e) = failure {
            return Err(e);
        }
        let mut nodes = Vec::new();
        for (chi, w) in panel_nodes(&panels) {
            let n = self.node_core(chi)?;
            nodes.push(Node { weight: n.weight * w * (chi - t).powi(power), ..n });
        }
        Ok(Convolution { t, nodes, j_method: self.cfg.j_method, quad: self.cfg.quad })
    }

    fn steps(&self, sigma: f64, v: f64, factor: f64) -> Result<(f64, f64)> {
        let hs = factor * self.cfg.sigma_step * sigma.abs().max(1.0);
        let hv = factor * self.cfg.v_step * v.abs().max(1.0);
        if hs >= sigma {
            return Err(invalid("sigma_step", "stencil reaches sigma <= 0"));
        }
        if hs <= 1e-9 * sigma.abs().max(1.0) || hv <= 1e-9 * v.abs().max(1.0) {
            return Err(invalid("sigma_step", "stencil step underflows the state"));
        }
        Ok((hs, hv))
    }

    /// `Φ₁F` at `(σ, 𝒱)` and time `self.t` by central differences.
    fn phi1<F>(&self, f: &F, sigma: f64, v: f64, factor: f64) -> Result<Complex>
    where
        F: Fn(f64, f64) -> Result<Complex>,
    {
        let (hs, hv) = self.steps(sigma, v, factor)?;
        let m = self.model();
        let c = self.g.constants();
        let t = self.t;
        let nu = c.b_h * t.powf(m.h - 0.5);
        let (fp, fm) = (f(sigma + hs, v)?, f(sigma - hs, v)?);
        let d_sigma = (fp - fm) / (2.0 * hs);
        let mixed = (f(sigma + hs, v + hv)? - f(sigma + hs, v - hv)? - f(sigma - hs, v + hv)? + f(sigma - hs, v - hv)?)
            / (4.0 * hs * hv);
        let iurho = Complex::new(0.0, 1.0) * self.u() * m.rho;
        let coef = iurho * (nu * sigma) + m_t(t, m) * v;
        Ok(mixed * (nu * nu * sigma) + coef * sigma * d_sigma)
    }

    /// `Φ₂F = ½ν²σ² ∂²_σ F`.
    fn phi2<F>(&self, f: &F, sigma: f64, v: f64, factor: f64) -> Result<Complex>
    where
        F: Fn(f64, f64) -> Result<Complex>,
    {
        let (hs, _) = self.steps(sigma, v, factor)?;
        let m = self.model();
        let nu = self.g.constants().b_h * self.t.powf(m.h - 0.5);
        let second = (f(sigma + hs, v)? - f(sigma, v)? * 2.0 + f(sigma - hs, v)?) / (hs * hs);
        Ok(second * (0.5 * nu * nu * sigma * sigma))
    }

    /// `z₁` at `(σ0, 𝒱0)`.
    pub fn first(&self) -> Result<Complex> {
        let m = self.model();
        let conv = self.convolution(0)?;
        let f = |s: f64, v: f64| conv.value(s, v);
        self.phi1(&f, m.sigma0, m.v0, 1.0)
    }

    /// `z₂` at `(σ0, 𝒱0)`.
    pub fn second(&self) -> Result<Complex> {
        let m = self.model();
        let conv0 = self.convolution(0)?;
        let conv1 = self.convolution(1)?;
        self.second_from(&conv0, &conv1, m.sigma0, m.v0)
    }

    fn second_from(&self, conv0: &Convolution, conv1: &Convolution, s: f64, v: f64) -> Result<Complex> {
        let f0 = |s: f64, v: f64| conv0.value(s, v);
        let f1 = |s: f64, v: f64| conv1.value(s, v);
        let inner = |s: f64, v: f64| self.phi1(&f1, s, v, 1.0);
        let outer = self.phi1(&inner, s, v, self.cfg.outer_step_factor)?;
        Ok(self.phi2(&f0, s, v, 1.0)? + outer)
    }

    /// `(z₁, z₂)` with `z₂ = 0` when `order < 2`.
    pub fn first_two(&self, order: usize) -> Result<(Complex, Complex)> {
        let m = self.model();
        let conv0 = self.convolution(0)?;
        let f = |s: f64, v: f64| conv0.value(s, v);
        let z1 = self.phi1(&f, m.sigma0, m.v0, 1.0)?;
        if order < 2 {
            return Ok((z1, Complex::default()));
        }
        let conv1 = self.convolution(1)?;
        let z2 = self.second_from(&conv0, &conv1, m.sigma0, m.v0)?;
        Ok((z1, z2))
    }
}

/// Correction `z_order` at inception in the configured mode, without the
/// `ξ^order` factor.
pub fn correction(order: usize, u: Complex, model: &AdolModel, cfg: &CorrectionConfig) -> Result<Complex> {
    if !(1..=2).contains(&order) {
        return Err(invalid("order", "correction order must be 1 or 2"));
    }
    cfg.validate()?;
    match cfg.mode {
        CfMode::AffineOde => {
            let sol = solve_affine(u, model, 0.0, order, &cfg.ode)?;
            Ok(sol.z0(model.sigma0, model.v0) * sol.corrections[order - 1].eval(model.sigma0, model.v0))
        }
        CfMode::PaperClosedForm => {
            let pc = PaperCorrection::new(u, model, cfg)?;
            if order == 1 {
                pc.first()
            } else {
                pc.second()
            }
        }
    }
}
