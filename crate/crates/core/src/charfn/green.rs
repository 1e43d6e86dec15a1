//! Green's-function building blocks for the paper-mode corrections: the
//! heat-equation time change, the transport coefficient of the ω-equation,
//! the heat kernel and the J-integral with its Laplace-type approximations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::charfn::paper::gamma_paper;
use crate::do_process::DoConstants;
use crate::error::{Error, Result};
use crate::model::{m_integral, m_t, AdolModel};
use crate::numerics::{
    exp_integral_e, gamma_fn, integrate_adaptive, integrate_real, solve_quartic, Complex, QuadratureSpec,
};

/// Time change and transport coefficients of the separable zero-order
/// problem for one model and frequency.
#[derive(Debug, Clone, Copy)]
pub struct GreenPieces {
    model: AdolModel,
    c: DoConstants,
    u: Complex,
    quad: QuadratureSpec,
}

impl GreenPieces {
    pub fn new(model: &AdolModel, u: Complex, quad: QuadratureSpec) -> Result<Self> {
        model.validate()?;
        if model.h >= 0.5 {
            return Err(Error::Domain(format!("Green pipeline needs H < 1/2, got H = {}", model.h)));
        }
        Ok(Self { model: *model, c: model.constants()?, u, quad })
    }

    pub fn model(&self) -> &AdolModel {
        &self.model
    }

    pub fn constants(&self) -> &DoConstants {
        &self.c
    }

    pub fn u(&self) -> Complex {
        self.u
    }

    fn nu(&self, t: f64) -> f64 {
        self.c.b_h * t.powf(self.model.h - 0.5)
    }

    /// `exp(∫_T^t m)`.
    pub fn alpha1(&self, t: f64) -> f64 {
        m_integral(self.model.t_mat, t, &self.model).exp()
    }

    /// `½ ∫_t^T ν² α₁² ds`, by adaptive quadrature.
    pub fn tau(&self, t: f64) -> Result<f64> {
        let tt = self.model.t_mat;
        if t >= tt {
            return Ok(0.0);
        }
        let b2 = self.c.b_h * self.c.b_h;
        let e = 2.0 * self.model.h - 1.0;
        let v = integrate_real(
            |s| {
                let a = self.alpha1(s);
                b2 * s.powf(e) * a * a
            },
            t.max(0.0),
            tt,
            &self.quad,
        )?;
        Ok(0.5 * v)
    }

    /// Closed form of `tau` through the generalized exponential integral on
    /// the principal branch. The imaginary parts of the two `E` terms cancel
    /// analytically; what is left is returned for inspection.
    pub fn tau_closed(&self, t: f64) -> Result<Complex> {
        self.tau_exp_integral(t, 2.0)
    }

    /// The same expression with the mean-reversion rate entering once rather
    /// than twice in the exponent, i.e. integrating α₁ in place of α₁².
    pub fn tau_closed_single_rate(&self, t: f64) -> Result<Complex> {
        self.tau_exp_integral(t, 1.0)
    }

    fn tau_exp_integral(&self, t: f64, rate_factor: f64) -> Result<Complex> {
        let m = &self.model;
        let (h, tt) = (m.h, m.t_mat);
        let p = 1.0 + m.m_pi;
        let b2 = self.c.b_h * self.c.b_h;
        if t >= tt {
            return Ok(Complex::new(0.0, 0.0));
        }
        if m.m_rho == 0.0 {
            return Ok(Complex::new(b2 / (4.0 * h) * (tt.powf(2.0 * h) - t.powf(2.0 * h)), 0.0));
        }
        let c = rate_factor * m.m_rho / p;
        let order = 1.0 - 2.0 * h / p;
        let term = |s: f64| -> Result<Complex> {
            if s == 0.0 {
                // s^{2H} E(ν, -c s^p) -> Γ(1-ν) (-c)^{ν-1}, on the branch of E
                let z = Complex::new(-c, 0.0);
                return Ok((z.ln() * (order - 1.0)).exp() * gamma_fn(1.0 - order)?);
            }
            Ok(exp_integral_e(order, -c * s.powf(p))? * s.powf(2.0 * h))
        };
        let pref = b2 / (2.0 * p) * (-c * tt.powf(p)).exp();
        Ok((term(t)? - term(tt)?) * pref)
    }

    /// Inverse of the decreasing map `t -> tau(t)` on `[0, T]`, by bisection.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        let tt = self.model.t_mat;
        let top = self.tau(0.0)?;
        if !(0.0..=top * (1.0 + 1e-14)).contains(&tau) {
            return Err(Error::Inversion(format!("tau = {tau} outside [0, {top}]")));
        }
        let (mut lo, mut hi) = (0.0, tt);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tau(mid)? > tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * tt {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Transport coefficient of the ω-equation.
    pub fn a1(&self, t: f64) -> Complex {
        let m = &self.model;
        let nu = self.nu(t);
        let dnu = (m.h - 0.5) * self.c.b_h * t.powf(m.h - 1.5);
        let damp = (-m.kappa * t - 2.0 * m_integral(m.t_mat, t, m)).exp();
        let real = (nu * (m.kappa + m_t(t, m)) + dnu) / nu.powi(4) * damp * 2.0 * m.rho;
        Complex::new(0.0, 1.0) * self.u * real
    }

    /// `1 / (dτ/dt)`.
    pub fn g_jac(&self, t: f64) -> f64 {
        let nu = self.nu(t);
        let a = self.alpha1(t);
        -2.0 / (nu * nu * a * a)
    }

    /// Paper-form σ² coefficient at this frequency.
    pub fn gamma(&self, t: f64) -> Complex {
        gamma_paper(self.u, t, &self.model)
    }
}

/// Fundamental solution of `w_τ = w_ςς`.
pub fn heat_kernel(x: f64, y: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs tau > 0, got {tau}")));
    }
    Ok((-(x - y).powi(2) / (4.0 * tau)).exp() / (2.0 * (PI * tau).sqrt()))
}

/// How the J-integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JMethod {
    Quadrature,
    QuadraticAtVarsigma,
    QuadraticAtStationaryPoint,
}

/// Data of one J-integrand `exp[k/(ς'-2χ)² + ς' - (ς'-ς)²/(4(χ-t))]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JIntegrand {
    pub k: Complex,
    pub varsigma: f64,
    pub chi: f64,
    pub t: f64,
}

impl JIntegrand {
    /// Build from the state `(σ, 𝒱)` at time `t` for node `χ`: ς = α₁(χ)𝒱 +
    /// 2τ(χ), ω = e^{κχ}σ𝒱 and `k = ω² e^{-2κχ} γ(χ) α₁(χ)²`.
    pub fn from_state(g: &GreenPieces, sigma: f64, v: f64, t: f64, chi: f64) -> Result<Self> {
        let a1 = g.alpha1(chi);
        let varsigma = a1 * v + 2.0 * g.tau(chi)?;
        let omega = (g.model.kappa * chi).exp() * sigma * v;
        Ok(Self::from_parts(g, varsigma, omega, t, chi))
    }

    pub fn from_parts(g: &GreenPieces, varsigma: f64, omega: f64, t: f64, chi: f64) -> Self {
        let a1 = g.alpha1(chi);
        let k = g.gamma(chi) * (omega * omega * (-2.0 * g.model.kappa * chi).exp() * a1 * a1);
        Self { k, varsigma, chi, t }
    }

    fn width(&self) -> f64 {
        self.chi - self.t
    }

    /// Exponent at `ς'`.
    pub fn exponent(&self, sp: f64) -> Complex {
        let c = self.width();
        let gauss = sp - (sp - self.varsigma).powi(2) / (4.0 * c);
        if self.k == Complex::new(0.0, 0.0) {
            return Complex::new(gauss, 0.0);
        }
        let y = sp - 2.0 * self.chi;
        self.k / (y * y) + gauss
    }

    pub fn integrand(&self, sp: f64) -> Complex {
        if sp == 2.0 * self.chi && self.k.re < 0.0 {
            // exp(k/y²) -> 0 at the pole when Re k < 0
            return Complex::new(0.0, 0.0);
        }
        self.exponent(sp).exp()
    }

    /// Taylor coefficients `(a₀, a₁, a₂)` of the exponent about `ς' = x`.
    pub fn quadratic_at(&self, x: f64) -> (Complex, Complex, Complex) {
        let c = self.width();
        let d = x - 2.0 * self.chi;
        let dx = x - self.varsigma;
        let k = self.k;
        let a0 = k / (d * d) + x - dx * dx / (4.0 * c);
        let a1 = -k * 2.0 / d.powi(3) + 1.0 - dx / (2.0 * c);
        let a2 = k * 3.0 / d.powi(4) - 1.0 / (4.0 * c);
        (a0, a1, a2)
    }

    /// Real stationary points of the exponent (requires real `k`).
    pub fn stationary_points(&self) -> Result<Vec<f64>> {
        if self.k.im != 0.0 {
            return Err(Error::Method("stationary point needs a real k; use quadrature".into()));
        }
        let c = self.width();
        let shift = 2.0 * c + self.varsigma - 2.0 * self.chi;
        let roots = solve_quartic(1.0, -shift, 0.0, 0.0, 4.0 * c * self.k.re);
        Ok(roots.into_iter().filter(|y| *y != 0.0).map(|y| y + 2.0 * self.chi).collect())
    }
}

fn laplace(a0: Complex, a1: Complex, a2: Complex) -> Result<Complex> {
    if !(a2.re < 0.0) {
        return Err(Error::Method(format!("quadratic coefficient a2 = {a2} is not negative; fall back to quadrature")));
    }
    Ok((Complex::new(PI, 0.0) / -a2).sqrt() * (a0 - a1 * a1 / (a2 * 4.0)).exp())
}

const WINDOW_STDS: f64 = 14.0;

fn j_quadrature(j: &JIntegrand, quad: &QuadratureSpec) -> Result<Complex> {
    let c = j.width();
    if !(c > 0.0) {
        return Err(Error::Domain(format!("J-integral needs chi > t, got chi - t = {c}")));
    }
    let center = j.varsigma + 2.0 * c;
    let half = WINDOW_STDS * (2.0 * c).sqrt();
    let (lo, hi) = (center - half, center + half);
    let pole = 2.0 * j.chi;
    let f = |x: f64| j.integrand(x);
    if j.k == Complex::new(0.0, 0.0) || pole <= lo || pole >= hi {
        return integrate_adaptive(f, lo, hi, quad);
    }
    // the pole is excluded by a symmetric window that shrinks until the
    // result settles
    let mut delta = 1e-2 * half;
    let mut prev: Option<Complex> = None;
    for _ in 0..10 {
        let left = integrate_adaptive(f, lo, pole - delta, quad)?;
        let right = integrate_adaptive(f, pole + delta, hi, quad)?;
        let total = left + right;
        if let Some(p) = prev {
            if (total - p).norm() <= quad.rel_tol.max(1e-12) * total.norm().max(quad.abs_tol) {
                return Ok(total);
            }
        }
        prev = Some(total);
        delta *= 0.1;
    }
    Err(Error::Method("pole exclusion around 2χ did not converge".into()))
}

/// Evaluate the J-integral.
pub fn j_integral(j: &JIntegrand, method: JMethod, quad: &QuadratureSpec) -> Result<Complex> {
    match method {
        JMethod::Quadrature => j_quadrature(j, quad),
        JMethod::QuadraticAtVarsigma => {
            let (a0, a1, a2) = j.quadratic_at(j.varsigma);
            laplace(a0, a1, a2)
        }
        JMethod::QuadraticAtStationaryPoint => {
            let points = j.stationary_points()?;
            let mut best: Option<(f64, Complex)> = None;
            for x in points {
                let (a0, a1, a2) = j.quadratic_at(x);
                if a2.re < 0.0 {
                    let dist = (x - j.varsigma).abs();
                    if best.is_none_or(|(d, _)| dist < d) {
                        best = Some((dist, laplace(a0, a1, a2)?));
                    }
                }
            }
            best.map(|(_, v)| v)
                .ok_or_else(|| Error::Method("no admissible stationary point; fall back to quadrature".into()))
        }
    }
}
