//! Machine-readable discrepancy ledger: where the closed forms and the
//! independent references disagree, and by how much.

use adol_core::charfn::{
    cf_zero_with, coefficients, pde_residual, solve_affine, CfMode, CorrectionConfig, GreenPieces, PaperCorrection,
    ResidualStats,
};
use adol_core::do_process::do_constants;
use adol_core::{AdolModel, Complex};
use serde::{Deserialize, Serialize};

use crate::commands::{j_gap_table, D_H_BOUND, J_GAP_BPS};
use crate::config::{RunConfig, FORMAT_VERSION};
use crate::output::Writer;
use crate::{Check, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeGap {
    pub u: f64,
    pub paper_re: Option<f64>,
    pub paper_im: Option<f64>,
    pub affine_re: Option<f64>,
    pub affine_im: Option<f64>,
    pub abs_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residual {
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub points: usize,
    pub error: Option<String>,
}

impl Residual {
    fn from(r: adol_core::Result<ResidualStats>, points: usize) -> Self {
        match r {
            Ok(s) => Self { max: Some(s.max), mean: Some(s.mean), points: s.points, error: None },
            Err(e) => Self { max: None, mean: None, points, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residuals {
    /// Frequency at which the residual is taken.
    pub u: f64,
    pub affine: Residual,
    pub paper: Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGap {
    pub points: usize,
    /// Closed form with the doubled rate against quadrature.
    pub max_rel_gap: Option<f64>,
    /// Closed form with the single rate as printed, against quadrature.
    pub single_rate_max_rel_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JGap {
    pub max_bps: Option<f64>,
    pub median_bps: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoBound {
    pub bound: f64,
    pub max_d_h: f64,
    pub at_h: f64,
    /// Smallest and largest H of the 0.01 grid on `[0.40, 0.99]` above the
    /// bound.
    pub exceeded_on: Option<(f64, f64)>,
    pub d_h_sq_at_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionScale {
    pub h: f64,
    pub b_h: f64,
    pub implied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperCorrections {
    pub u: f64,
    pub eval_time: Option<f64>,
    pub z1: Option<(f64, f64)>,
    pub z2: Option<(f64, f64)>,
    pub affine_z1: Option<(f64, f64)>,
    pub affine_z2: Option<(f64, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ledger {
    pub format_version: u32,
    pub config: RunConfig,
    pub mode_gaps: Vec<ModeGap>,
    pub residuals: Residuals,
    pub tau: TauGap,
    pub j_approximation: JGap,
    pub do_bound: DoBound,
    pub diffusion_scale: DiffusionScale,
    pub paper_corrections: PaperCorrections,
}

/// Radical inverse of `i` in `base`.
fn halton(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Interior `(t, σ, 𝒱)` points from a Halton sequence.
pub fn residual_points(model: &AdolModel, n: usize) -> Vec<(f64, f64, f64)> {
    let tt = model.t_mat;
    (1..=n)
        .map(|i| {
            let t = tt * (0.04 + 0.92 * halton(i, 2));
            let s = model.sigma0 * (1.0 / 3.0 + (5.0 / 3.0) * halton(i, 3));
            let v = model.v0 - 5.0 + 10.0 * halton(i, 5);
            (t, s, v)
        })
        .collect()
}

fn pair(z: Complex) -> (f64, f64) {
    (z.re, z.im)
}

fn mode_gaps(cfg: &RunConfig) -> Vec<ModeGap> {
    let m = cfg.model;
    cfg.grids
        .u
        .iter()
        .map(|&u| {
            let uc = Complex::new(u, 0.0);
            let affine = cf_zero_with(uc, &m, CfMode::AffineOde, &cfg.cf.ode);
            let paper = cf_zero_with(uc, &m, CfMode::PaperClosedForm, &cfg.cf.ode);
            match (affine, paper) {
                (Ok(a), Ok(p)) => ModeGap {
                    u,
                    paper_re: Some(p.re),
                    paper_im: Some(p.im),
                    affine_re: Some(a.re),
                    affine_im: Some(a.im),
                    abs_gap: Some((p - a).norm()),
                    error: None,
                },
                (Ok(a), Err(e)) => ModeGap {
                    u,
                    paper_re: None,
                    paper_im: None,
                    affine_re: Some(a.re),
                    affine_im: Some(a.im),
                    abs_gap: None,
                    error: Some(e.to_string()),
                },
                (Err(e), _) => ModeGap {
                    u,
                    paper_re: None,
                    paper_im: None,
                    affine_re: None,
                    affine_im: None,
                    abs_gap: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn residuals(cfg: &RunConfig) -> Residuals {
    let m = cfg.model.with_xi(0.0);
    let u = Complex::new(1.0, 0.0);
    let pts = residual_points(&m, cfg.grids.residual_points);
    let affine = pde_residual(|t, s, v| Ok(solve_affine(u, &m, t, 0, &cfg.cf.ode)?.z0(s, v)), u, &m, &pts);
    let paper = coefficients(u, &m, CfMode::PaperClosedForm, &cfg.cf.ode)
        .and_then(|c| pde_residual(|t, s, v| Ok(c.at(t)?.z0(s, v)), u, &m, &pts));
    Residuals { u: 1.0, affine: Residual::from(affine, pts.len()), paper: Residual::from(paper, pts.len()) }
}

fn tau_gap(cfg: &RunConfig) -> TauGap {
    let m = cfg.model;
    let n = 50;
    let run = || -> adol_core::Result<(f64, f64)> {
        let quad = adol_core::numerics::QuadratureSpec::new(1e-15, 1e-13, 5000)?;
        let g = GreenPieces::new(&m, Complex::new(1.0, 0.0), quad)?;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for j in 0..n {
            let t = m.t_mat * j as f64 / n as f64;
            let q = g.tau(t)?;
            a = a.max((g.tau_closed(t)? - q).norm() / q);
            b = b.max((g.tau_closed_single_rate(t)? - q).norm() / q);
        }
        Ok((a, b))
    };
    match run() {
        Ok((a, b)) => TauGap { points: n, max_rel_gap: Some(a), single_rate_max_rel_gap: Some(b), error: None },
        Err(e) => TauGap { points: n, max_rel_gap: None, single_rate_max_rel_gap: None, error: Some(e.to_string()) },
    }
}

fn j_gap(cfg: &RunConfig) -> JGap {
    match j_gap_table(&cfg.model) {
        Ok(t) => {
            let mut gaps = t.column("diff_bps");
            gaps.sort_by(f64::total_cmp);
            JGap { max_bps: gaps.last().copied(), median_bps: gaps.get(gaps.len() / 2).copied(), error: None }
        }
        Err(e) => JGap { max_bps: None, median_bps: None, error: Some(e.to_string()) },
    }
}

fn do_bound() -> Result<DoBound, CliError> {
    let mut worst = (0.0, 0.0);
    let mut exceeded: Option<(f64, f64)> = None;
    for j in 40..=99 {
        let h = j as f64 / 100.0;
        let d = do_constants(h)?.d_h();
        if d > worst.1 {
            worst = (h, d);
        }
        if d > D_H_BOUND {
            exceeded = Some(exceeded.map_or((h, h), |(lo, _)| (lo, h)));
        }
    }
    Ok(DoBound {
        bound: D_H_BOUND,
        max_d_h: worst.1,
        at_h: worst.0,
        exceeded_on: exceeded,
        d_h_sq_at_half: do_constants(0.5)?.d_h_sq,
    })
}

fn paper_corrections(cfg: &RunConfig) -> PaperCorrections {
    let m = cfg.model;
    let u = Complex::new(1.0, 0.0);
    let affine = |order| adol_core::charfn::correction(order, u, &m, &CorrectionConfig::default()).ok().map(pair);
    let paper_cfg = cfg.cf.with_mode(CfMode::PaperClosedForm);
    let run = || -> adol_core::Result<(f64, Complex, Complex)> {
        let pc = PaperCorrection::new(u, &m, &paper_cfg)?;
        let (z1, z2) = pc.first_two(2)?;
        Ok((pc.eval_time(), z1, z2))
    };
    let (eval_time, z1, z2, error) = match run() {
        Ok((t, z1, z2)) => (Some(t), Some(pair(z1)), Some(pair(z2)), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    PaperCorrections { u: 1.0, eval_time, z1, z2, affine_z1: affine(1), affine_z2: affine(2), error }
}

pub fn build(cfg: &RunConfig) -> Result<Ledger, CliError> {
    let c = cfg.model.constants()?;
    Ok(Ledger {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        mode_gaps: mode_gaps(cfg),
        residuals: residuals(cfg),
        tau: tau_gap(cfg),
        j_approximation: j_gap(cfg),
        do_bound: do_bound()?,
        diffusion_scale: DiffusionScale { h: c.h, b_h: c.b_h, implied: c.implied_diffusion_scale() },
        paper_corrections: paper_corrections(cfg),
    })
}

pub fn ledger(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let l = build(cfg)?;
    w.json("ledger.json", &l)?;
    let mut checks = Vec::new();
    if let Some(g) = l.mode_gaps.iter().find(|g| g.u == 0.0) {
        let gap = g.abs_gap.unwrap_or(0.0);
        checks.push(Check::new("ledger", "zero_frequency_gap", gap <= 1e-12, format!("{gap:.1e}")));
    }
    let a = &l.residuals.affine;
    checks.push(Check::new(
        "ledger",
        "affine_residual",
        a.max.is_some_and(|x| x <= 1e-6),
        match (a.max, &a.error) {
            (Some(x), _) => format!("max {x:.2e} over {} points", a.points),
            (None, e) => format!("{e:?}"),
        },
    ));
    if let Some(x) = l.j_approximation.max_bps {
        checks.push(Check::new("ledger", "j_gap", x <= J_GAP_BPS, format!("max {x:.2} bps")));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_are_interior() {
        let m = AdolModel::baseline();
        let pts = residual_points(&m, 100);
        assert_eq!(pts.len(), 100);
        for (t, s, _) in pts {
            assert!(t > 0.0 && t < m.t_mat && s > 0.0);
        }
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
    }
}
