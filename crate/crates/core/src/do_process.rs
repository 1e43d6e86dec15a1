//! Hurst-derived constants of the DO/ADO construction and exact-law
//! simulators for the martingale part, the DO process and fractional
//! Brownian motion.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numerics::{beta_sym, gamma_fn};

/// Scalars that depend on the Hurst exponent only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoConstants {
    pub h: f64,
    pub alpha_h: f64,
    pub c_h: f64,
    pub b_h: f64,
    pub d_h_sq: f64,
    /// Coefficient of `t^{2H-1}` in ψ_H.
    pub psi_scale: f64,
}

pub fn do_constants(h: f64) -> Result<DoConstants> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h", format!("Hurst exponent must lie in (0, 1), got {h}")));
    }
    let s = (PI * h).sin();
    let g32 = gamma_fn(1.5 - h)?;
    let g3 = gamma_fn(3.0 - 2.0 * h)?;
    let gh12 = gamma_fn(h + 0.5)?;

    let alpha_h = (gamma_fn(2.0 * h + 1.0)? * g3).sqrt() * s * s;
    let c_h = alpha_h / (2.0 * h * g32 * gh12);
    let b_h = 2f64.powf(3.0 - 4.0 * h) * gamma_fn(2.0 - h)? / (s.powi(4) * g32 * g32 * gamma_fn(h)?);
    let d_h_sq = 1.0 - 2.0 * h * g3 * gh12 / g32;
    let psi_scale = g3 / (c_h * g32 * g32);
    Ok(DoConstants { h, alpha_h, c_h, b_h, d_h_sq, psi_scale })
}

impl DoConstants {
    /// Relative L² distance between the DO process and fBm.
    pub fn d_h(&self) -> f64 {
        self.d_h_sq.max(0.0).sqrt()
    }

    /// Diffusion scale of `ψ_H·M_H` read off its Itô differential, i.e. the
    /// constant `b` with `d⟨V⟩/dt = b² t^{2H-1}`. Differs from `b_h` for
    /// `H ≠ 1/2`; exposed for the discrepancy ledger.
    pub fn implied_diffusion_scale(&self) -> f64 {
        ((2.0 - 2.0 * self.h) * (1.0 - self.d_h_sq)).sqrt()
    }
}

fn require_positive_time(t: f64, h: f64, what: &str) -> Result<()> {
    if t > 0.0 || (t == 0.0 && h == 0.5) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires t > 0 for H != 1/2, got t = {t}")))
    }
}

pub fn psi_h(t: f64, c: &DoConstants) -> Result<f64> {
    require_positive_time(t, c.h, "psi_h")?;
    if c.h == 0.5 {
        return Ok(c.psi_scale);
    }
    Ok(c.psi_scale * t.powf(2.0 * c.h - 1.0))
}

/// Covariance of the Gaussian martingale `M_H`.
pub fn cov_m(s: f64, t: f64, c: &DoConstants) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!("cov_m requires s, t >= 0, got ({s}, {t})")));
    }
    let m = s.min(t);
    Ok(c.c_h * c.alpha_h * beta_sym(1.5 - c.h)? * m.powf(2.0 - 2.0 * c.h))
}

/// Fractional Brownian motion covariance.
pub fn cov_fbm(s: f64, t: f64, h: f64) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!("cov_fbm requires s, t >= 0, got ({s}, {t})")));
    }
    let e = 2.0 * h;
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Vol-of-vol time profile `B_H t^{H-1/2}`.
pub fn nu_t(t: f64, c: &DoConstants) -> Result<f64> {
    require_positive_time(t, c.h, "nu_t")?;
    if c.h == 0.5 {
        return Ok(c.b_h);
    }
    Ok(c.b_h * t.powf(c.h - 0.5))
}

/// Strictly increasing positive observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("times", "grid must be non-empty"));
        }
        if !(times[0] > 0.0) || times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times", "grid must start at t > 0 with finite entries"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("times", "grid must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `n` equal steps ending at `t_end`; the first point is `t_end / n`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one point"));
        }
        Self::new((1..=n).map(|i| t_end * i as f64 / n as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Simulated paths, one row per path, one column per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Paths {
    /// Values of every path at grid column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|p| p[j]).collect()
    }
}

/// Deterministic per-path generator: the seed fixes the key, the path index
/// selects the stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn simulate_independent_increments(
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    variance_at: impl Fn(f64) -> f64 + Sync,
    scale_at: impl Fn(f64) -> f64 + Sync,
) -> Paths {
    let times = grid.times().to_vec();
    let mut sd = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in &times {
        let v = variance_at(t);
        sd.push((v - prev).max(0.0).sqrt());
        prev = v;
    }
    let scales: Vec<f64> = times.iter().map(|&t| scale_at(t)).collect();
    let values = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut level = 0.0;
            sd.iter()
                .zip(&scales)
                .map(|(s, k)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    level += s * z;
                    level * k
                })
                .collect()
        })
        .collect();
    Paths { times, values }
}

/// Exact-law paths of the martingale `M_H` on `grid`.
pub fn simulate_mh(grid: &TimeGrid, n_paths: usize, seed: u64, c: &DoConstants) -> Result<Paths> {
    let scale = cov_m(1.0, 1.0, c)?;
    let e = 2.0 - 2.0 * c.h;
    Ok(simulate_independent_increments(grid, n_paths, seed, |t| scale * t.powf(e), |_| 1.0))
}

/// Exact-law paths of the DO process `ψ_H(t)·M_H(t)`.
pub fn simulate_vh(grid: &TimeGrid, n_paths: usize, seed: u64, c: &DoConstants) -> Result<Paths> {
    let scale = cov_m(1.0, 1.0, c)?;
    let e = 2.0 - 2.0 * c.h;
    let cc = *c;
    Ok(simulate_independent_increments(
        grid,
        n_paths,
        seed,
        |t| scale * t.powf(e),
        move |t| cc.psi_scale * t.powf(2.0 * cc.h - 1.0),
    ))
}

/// fBm paths together with the diagonal jitter that was needed to factor the
/// covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPaths {
    pub paths: Paths,
    pub jitter: f64,
}

const MAX_JITTER: f64 = 1e-12;

/// Exact-law fBm paths from a Cholesky factor of the dense covariance.
pub fn simulate_fbm_exact(grid: &TimeGrid, n_paths: usize, seed: u64, h: f64) -> Result<FbmPaths> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h", format!("Hurst exponent must lie in (0, 1), got {h}")));
    }
    let times = grid.times().to_vec();
    let n = times.len();
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = cov_fbm(times[i], times[j], h)?;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let mut jitter = 0.0;
    let chol = loop {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            break ch;
        }
        if jitter >= MAX_JITTER {
            let min_eigenvalue = cov.clone().symmetric_eigenvalues().min();
            return Err(Error::Factorization { min_eigenvalue });
        }
        jitter = if jitter == 0.0 { 1e-16 } else { (jitter * 10.0).min(MAX_JITTER) };
    };
    let l = chol.l();

    let values = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            (0..n).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect()
        })
        .collect();
    Ok(FbmPaths { paths: Paths { times, values }, jitter })
}
