//! Finite-difference residual of the pricing PDE for `z(t, σ, 𝒱)`.

use serde::Serialize;

use crate::error::Result;
use crate::model::{m_t, AdolModel};
use crate::numerics::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub points: usize,
}

/// Relative residual of
///
/// ```text
/// z_t + ½ξ²ν²σ² z_σσ + ½ν² z_𝒱𝒱 + ξν²σ z_σ𝒱 + [κθ + (-(κ + ξm𝒱) + iuρξνσ)σ] z_σ
///     + (iuρνσ - m𝒱) z_𝒱 + (-½u(i+u)σ² + iu(r-q)) z = 0
/// ```
///
/// at each `(t, σ, 𝒱)`, normalised by the largest single term there.
/// Points where every term vanishes contribute zero.
pub fn pde_residual<F>(f: F, u: Complex, model: &AdolModel, points: &[(f64, f64, f64)]) -> Result<ResidualStats>
where
    F: Fn(f64, f64, f64) -> Result<Complex>,
{
    let c = model.constants()?;
    let i = Complex::new(0.0, 1.0);
    let xi = model.xi;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for &(t, s, v) in points {
        let ht = 1e-4 * t.min(model.t_mat - t);
        let hs = 1e-3 * s.abs().max(1e-3);
        let hv = 1e-3 * v.abs().max(1.0);
        let z = f(t, s, v)?;
        let z_t = (f(t + ht, s, v)? - f(t - ht, s, v)?) / (2.0 * ht);
        let (zsp, zsm) = (f(t, s + hs, v)?, f(t, s - hs, v)?);
        let (zvp, zvm) = (f(t, s, v + hv)?, f(t, s, v - hv)?);
        let z_s = (zsp - zsm) / (2.0 * hs);
        let z_ss = (zsp - z * 2.0 + zsm) / (hs * hs);
        let z_v = (zvp - zvm) / (2.0 * hv);
        let z_vv = (zvp - z * 2.0 + zvm) / (hv * hv);
        let z_sv = (f(t, s + hs, v + hv)? - f(t, s + hs, v - hv)? - f(t, s - hs, v + hv)? + f(t, s - hs, v - hv)?)
            / (4.0 * hs * hv);

        let nu = c.b_h * t.powf(model.h - 0.5);
        let m = m_t(t, model);
        let iurho = i * u * model.rho;
        let terms = [
            z_t,
            z_ss * (0.5 * xi * xi * nu * nu * s * s),
            z_vv * (0.5 * nu * nu),
            z_sv * (xi * nu * nu * s),
            z_s * ((iurho * (xi * nu * s) - (model.kappa + xi * m * v)) * s + model.kappa * model.theta),
            z_v * (iurho * (nu * s) - m * v),
            z * (-u * (u + i) * (0.5 * s * s) + i * u * (model.r - model.q)),
        ];
        let scale = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let total: Complex = terms.iter().sum();
        let rel = if scale == 0.0 { 0.0 } else { total.norm() / scale };
        max = max.max(rel);
        sum += rel;
    }
    Ok(ResidualStats {
        max,
        mean: if points.is_empty() { 0.0 } else { sum / points.len() as f64 },
        points: points.len(),
    })
}
