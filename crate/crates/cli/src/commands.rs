//! Subcommand bodies. Each writes its tables and returns the tolerance
//! checks it evaluated.

use adol_core::charfn::{cf_total, j_integral, CfMode, GreenPieces, JIntegrand, JMethod};
use adol_core::do_process::do_constants;
use adol_core::model::{m_integral, small_param_check, small_param_scale};
use adol_core::montecarlo::{mc_quadratic_variation, path_stats, simulate_q};
use adol_core::numerics::QuadratureSpec;
use adol_core::pricing::{
    bs_cf, bs_price, deterministic_total_variance, fft_ladder, fourier_price, freeze_states, implied_vol,
    varswap_strike_affine_analytic, varswap_with_states,
};
use adol_core::{AdolModel, Complex};

use crate::config::{LadderMethod, RunConfig};
use crate::ledger;
use crate::output::{num, opt, FigureTable, Table, Writer};
use crate::{Check, CliError, Command};

/// Upper bound on the DO distance to fBm over `[0.4, 1)`.
pub const D_H_BOUND: f64 = 0.12;
/// Largest J-approximation gap in basis points.
pub const J_GAP_BPS: f64 = 10.0;

pub fn dispatch(command: Command, cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    match command {
        Command::Constants => constants(cfg, w),
        Command::Figures => figures(cfg, w),
        Command::Cf => cf(cfg, w),
        Command::Price => price(cfg, w),
        Command::Varswap => varswap(cfg, w),
        Command::Mc => mc(cfg, w),
        Command::Ledger => ledger::ledger(cfg, w),
        Command::Check => check_all(cfg, w),
    }
}

fn check_all(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for run in [constants, figures, cf, price, varswap, mc, ledger::ledger] {
        checks.extend(run(cfg, w)?);
    }
    let mut t = Table::new("check", &["command", "check", "status", "detail"]);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        t.push(vec![c.command.into(), c.name.clone(), status.into(), c.detail.clone()]);
    }
    w.csv(&t)?;
    Ok(checks)
}

fn flag(b: bool) -> String {
    b.to_string()
}

pub fn constants(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let t_mat = cfg.model.t_mat;
    let mut t = Table::new(
        "constants",
        &[
            "h",
            "alpha_h",
            "c_h",
            "b_h",
            "d_h_sq",
            "d_h",
            "psi_scale",
            "implied_diffusion_scale",
            "f_ht",
            "d_h_within_bound",
        ],
    );
    let mut checks = Vec::new();
    let mut worst: Option<(f64, f64)> = None;
    for &h in &cfg.grids.h {
        let c = do_constants(h)?;
        let within = c.d_h() <= D_H_BOUND;
        if h >= 0.4 && worst.is_none_or(|(_, d)| c.d_h() > d) {
            worst = Some((h, c.d_h()));
        }
        t.push(vec![
            num(h),
            num(c.alpha_h),
            num(c.c_h),
            num(c.b_h),
            num(c.d_h_sq),
            num(c.d_h()),
            num(c.psi_scale),
            num(c.implied_diffusion_scale()),
            num(small_param_scale(h, t_mat)?),
            flag(within),
        ]);
        if h == 0.5 {
            let dev = [c.alpha_h - 1.0, c.c_h - 1.0, c.b_h - 1.0, c.psi_scale - 1.0, c.d_h_sq]
                .iter()
                .fold(0.0f64, |a, x| a.max(x.abs()));
            checks.push(Check::new(
                "constants",
                "h_half_collapse",
                dev <= 1e-12,
                format!("largest deviation from the Brownian values {dev:.1e}"),
            ));
        }
    }
    if let Some((h, d)) = worst {
        checks.push(Check::new(
            "constants",
            "d_h_bound",
            d <= D_H_BOUND,
            format!("max d_H on [0.4, 1) is {d:.4} at H = {h} against {D_H_BOUND}"),
        ));
    }
    w.csv(&t)?;
    Ok(checks)
}

fn tight_quad() -> QuadratureSpec {
    QuadratureSpec::new(1e-14, 1e-12, 5000).expect("valid tolerances")
}

/// `n` points spread evenly over `[a, b]`.
fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
}

fn integrand_surface(name: &str, g: &GreenPieces, chis: &[f64]) -> Result<FigureTable, CliError> {
    let m = *g.model();
    let mut t =
        FigureTable::new(name, &["chi", "varsigma", "varsigma_prime", "integrand_re", "integrand_im", "integrand_abs"]);
    for &chi in chis {
        let j = JIntegrand::from_state(g, m.sigma0, m.v0, 0.0, chi)?;
        let width = 6.0 * (2.0 * chi).sqrt();
        for sp in linspace(j.varsigma - width, j.varsigma + width, 61) {
            let f = j.integrand(sp);
            t.push(vec![chi, j.varsigma, sp, f.re, f.im, f.norm()])?;
        }
    }
    Ok(t)
}

fn chi_grid(t_mat: f64) -> Vec<f64> {
    linspace(0.05 * t_mat, t_mat, 100)
}

/// Quadrature against the quadratic approximation of J on the χ grid.
pub fn j_gap_table(model: &AdolModel) -> Result<FigureTable, CliError> {
    let quad = tight_quad();
    let g = GreenPieces::new(model, Complex::new(1.0, 0.0), quad)?;
    let mut t = FigureTable::new(
        "j_approx_gap",
        &["chi", "j_quadrature_re", "j_quadrature_im", "j_approx_re", "j_approx_im", "diff_bps"],
    );
    for chi in chi_grid(model.t_mat) {
        let j = JIntegrand::from_state(&g, model.sigma0, model.v0, 0.0, chi)?;
        let q = j_integral(&j, JMethod::Quadrature, &quad)?;
        let a = j_integral(&j, JMethod::QuadraticAtVarsigma, &quad)?;
        t.push(vec![chi, q.re, q.im, a.re, a.im, (a - q).norm() / q.norm() * 1e4])?;
    }
    Ok(t)
}

fn small_param_surface(name: &str, hs: &[f64], ts: &[f64]) -> Result<FigureTable, CliError> {
    let mut t = FigureTable::new(name, &["h", "t", "f"]);
    for &h in hs {
        for &tt in ts {
            t.push(vec![h, tt, small_param_scale(h, tt)?])?;
        }
    }
    Ok(t)
}

fn decreasing_in_t(t: &FigureTable) -> bool {
    t.rows.windows(2).all(|w| w[0][0] != w[1][0] || w[1][2] < w[0][2])
}

pub fn figures(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let m = cfg.model;
    let tt = m.t_mat;
    let g = GreenPieces::new(&m, Complex::new(1.0, 0.0), tight_quad())?;
    let integrand = integrand_surface("j_integrand", &g, &linspace(tt / 40.0, tt, 40))?;
    let integrand_late = integrand_surface("j_integrand_late", &g, &linspace(0.6 * tt, tt, 40))?;
    let j_gap = j_gap_table(&m)?;
    let mut a2_curve = FigureTable::new("a2_curve", &["chi", "a2_re", "a2_im"]);
    for chi in chi_grid(tt) {
        let j = JIntegrand::from_state(&g, m.sigma0, m.v0, 0.0, chi)?;
        let a2 = j.quadratic_at(j.varsigma).2;
        a2_curve.push(vec![chi, a2.re, a2.im])?;
    }
    let ts = linspace(0.05, 1.0, 20);
    let scale = small_param_surface("small_param_scale", &linspace(0.05, 0.95, 19), &ts)?;
    let scale_rough = small_param_surface("small_param_scale_rough", &linspace(0.01, 0.3, 30), &ts)?;

    let gaps = j_gap.column("diff_bps");
    let max = gaps.iter().cloned().fold(0.0, f64::max);
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let a2_max = a2_curve.column("a2_re").into_iter().fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        Check::new(
            "figures",
            "j_approx_gap",
            (1.0..=J_GAP_BPS).contains(&max),
            format!("max {max:.2} bps, median {median:.2} bps"),
        ),
        Check::new("figures", "a2_negative", a2_max < 0.0, format!("largest a2 {a2_max:.4e}")),
        Check::new("figures", "small_param_scale_decreasing_in_t", decreasing_in_t(&scale), "f(H, T) row-wise".into()),
        Check::new(
            "figures",
            "small_param_scale_rough_decreasing_in_t",
            decreasing_in_t(&scale_rough),
            "f(H, T) row-wise".into(),
        ),
    ];
    for f in [integrand, integrand_late, j_gap, a2_curve, scale, scale_rough] {
        w.csv(&f.to_table())?;
    }
    Ok(checks)
}

fn method_tag(order: usize) -> String {
    format!("cf-order-{order}")
}

pub fn cf(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let m = cfg.model;
    let mut t = Table::new("cf", &["u", "method", "mode", "re", "im", "abs", "gap_to_bs"]);
    let var = deterministic_total_variance(&m);
    let mut norm_gap: f64 = 0.0;
    let mut bs_gap: f64 = 0.0;
    for &u in &cfg.grids.u {
        let uc = Complex::new(u, 0.0);
        let bs = bs_cf(uc, m.r, m.q, m.t_mat, var);
        for order in 0..=cfg.cf.order {
            let z = cf_total(uc, &m, &cfg.cf.with_order(order))?;
            let gap = (m.xi == 0.0).then(|| (z - bs).norm());
            if u == 0.0 {
                norm_gap = norm_gap.max((z - 1.0).norm());
            }
            if cfg.cf.mode == CfMode::AffineOde {
                bs_gap = bs_gap.max(gap.unwrap_or(0.0));
            }
            t.push(vec![
                num(u),
                method_tag(order),
                cfg.cf.mode.tag().into(),
                num(z.re),
                num(z.im),
                num(z.norm()),
                opt(gap),
            ]);
        }
        if m.xi == 0.0 {
            t.push(vec![num(u), "bs".into(), String::new(), num(bs.re), num(bs.im), num(bs.norm()), num(0.0)]);
        }
    }
    w.csv(&t)?;
    let mut checks = Vec::new();
    if cfg.grids.u.contains(&0.0) {
        checks.push(Check::new("cf", "normalisation", norm_gap <= 1e-12, format!("|cf(0) - 1| = {norm_gap:.1e}")));
    }
    if m.xi == 0.0 && cfg.cf.mode == CfMode::AffineOde {
        checks.push(Check::new("cf", "bs_limit", bs_gap <= 1e-8, format!("max gap to the lognormal CF {bs_gap:.1e}")));
    }
    Ok(checks)
}

struct PriceRow {
    strike: f64,
    method: String,
    value: f64,
    std_error: Option<f64>,
}

pub fn price(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let m = cfg.model;
    let p = &cfg.pricing;
    let spot = m.s0;
    let mut rows = Vec::new();
    for &order in &p.orders {
        let cc = cfg.cf.with_order(order);
        let cf = |u: Complex| cf_total(u, &m, &cc);
        let values: Vec<f64> = match p.ladder {
            LadderMethod::Quadrature => p
                .strikes
                .iter()
                .map(|&k| fourier_price(cf, spot, k, m.r, m.q, m.t_mat, &p.fourier, p.is_call))
                .collect::<Result<_, _>>()?,
            LadderMethod::Fft => fft_ladder(cf, spot, &p.strikes, m.r, m.q, m.t_mat, &p.fourier)?
                .into_iter()
                .map(|l| if p.is_call { l.call } else { l.put })
                .collect(),
        };
        for (&k, v) in p.strikes.iter().zip(values) {
            rows.push(PriceRow { strike: k, method: method_tag(order), value: v, std_error: None });
        }
    }
    let mc: Option<Vec<_>> = if p.include_mc {
        Some(adol_core::montecarlo::mc_price_ladder(&m, &cfg.mc.spec(), &p.strikes, p.is_call)?)
    } else {
        None
    };
    if let Some(stats) = &mc {
        for (&k, s) in p.strikes.iter().zip(stats) {
            rows.push(PriceRow { strike: k, method: "mc".into(), value: s.estimate, std_error: Some(s.std_error) });
        }
    }
    let bs: Option<Vec<f64>> = if m.xi == 0.0 {
        let var = deterministic_total_variance(&m);
        Some(
            p.strikes
                .iter()
                .map(|&k| bs_price(spot, k, m.r, m.q, m.t_mat, var, p.is_call))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };
    if let Some(b) = &bs {
        for (&k, &v) in p.strikes.iter().zip(b) {
            rows.push(PriceRow { strike: k, method: "bs".into(), value: v, std_error: None });
        }
    }

    let idx = |k: f64| p.strikes.iter().position(|&s| s == k).expect("ladder strike");
    let mut t = Table::new(
        "price",
        &[
            "strike",
            "moneyness",
            "method",
            "value",
            "std_error",
            "implied_vol",
            "gap_to_mc",
            "gap_to_mc_se",
            "gap_to_bs",
        ],
    );
    let mut bs_gap: f64 = 0.0;
    for r in &rows {
        let j = idx(r.strike);
        let iv = implied_vol(r.value, spot, r.strike, m.r, m.q, m.t_mat, p.is_call).ok();
        let (gap_mc, gap_se) = match (&mc, r.method.as_str()) {
            (Some(s), method) if method != "mc" => {
                let g = r.value - s[j].estimate;
                (Some(g), Some(g.abs() / s[j].std_error))
            }
            _ => (None, None),
        };
        let gap_bs = bs.as_ref().filter(|_| r.method != "bs").map(|b| r.value - b[j]);
        if r.method.starts_with("cf-") {
            bs_gap = bs_gap.max(gap_bs.unwrap_or(0.0).abs());
        }
        t.push(vec![
            num(r.strike),
            num(r.strike / spot),
            r.method.clone(),
            num(r.value),
            opt(r.std_error),
            opt(iv),
            opt(gap_mc),
            opt(gap_se),
            opt(gap_bs),
        ]);
    }
    w.csv(&t)?;

    let mut checks = Vec::new();
    if bs.is_some() && !p.orders.is_empty() {
        checks.push(Check::new(
            "price",
            "bs_limit",
            bs_gap <= 1e-6 * spot,
            format!("max |cf - bs| = {bs_gap:.1e} (spot {spot})"),
        ));
    }
    let admissible = small_param_check(&m)?.admissible;
    if let (Some(stats), true, true) = (&mc, m.xi > 0.0 && admissible, p.orders.contains(&1)) {
        let atm = (0..p.strikes.len())
            .min_by(|&a, &b| (p.strikes[a] - spot).abs().total_cmp(&(p.strikes[b] - spot).abs()))
            .expect("non-empty ladder");
        let cf1 =
            rows.iter().find(|r| r.method == method_tag(1) && r.strike == p.strikes[atm]).expect("order-1 row").value;
        let z = (cf1 - stats[atm].estimate).abs() / stats[atm].std_error;
        checks.push(Check::new(
            "price",
            "mc_cross_check",
            z <= 3.0,
            format!(
                "strike {}: cf-order-1 {cf1:.6} vs mc {:.6} ± {:.6} ({z:.2} SE)",
                p.strikes[atm], stats[atm].estimate, stats[atm].std_error
            ),
        ));
    }
    Ok(checks)
}

pub fn varswap(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let m = cfg.model;
    let spec = cfg.varswap.spec();
    let states = freeze_states(&m, &spec)?;
    let vs = varswap_with_states(&m, &cfg.cf, &spec, &states)?;
    let qv = mc_quadratic_variation(&m, &cfg.mc.spec(), &spec.observation_times)?;
    let exact = (m.xi == 0.0).then(|| deterministic_total_variance(&m) / m.t_mat);
    let analytic =
        if cfg.cf.mode == CfMode::AffineOde { Some(varswap_strike_affine_analytic(&m, &spec, &states)?) } else { None };

    let mut t = Table::new(
        "varswap",
        &[
            "method",
            "value",
            "std_error",
            "coarse",
            "fine",
            "imaginary_residue",
            "gap_to_mc",
            "gap_to_mc_se",
            "rel_gap_to_integrated_variance",
        ],
    );
    let combined = |se: f64| (se * se + qv.std_error * qv.std_error).sqrt();
    let mut row = |method: &str, value: f64, se: Option<f64>, extra: [Option<f64>; 3]| {
        let gap = value - qv.estimate;
        let is_mc = method == "mc";
        t.push(vec![
            method.into(),
            num(value),
            opt(se),
            opt(extra[0]),
            opt(extra[1]),
            opt(extra[2]),
            opt((!is_mc).then_some(gap)),
            opt((!is_mc).then(|| gap.abs() / combined(se.unwrap_or(0.0)))),
            opt(exact.map(|e| (value - e) / e)),
        ]);
    };
    row("cf-forward", vs.strike, Some(vs.std_error), [Some(vs.coarse), Some(vs.fine), Some(vs.imaginary_residue)]);
    if let Some(a) = analytic {
        row("affine-analytic", a, None, [None; 3]);
    }
    row("mc", qv.estimate, Some(qv.std_error), [None; 3]);
    if let Some(e) = exact {
        row("integrated-variance", e, None, [None; 3]);
    }
    w.csv(&t)?;

    let mut checks = Vec::new();
    if let Some(e) = exact {
        let rel = (vs.strike - e).abs() / e;
        checks.push(Check::new(
            "varswap",
            "integrated_variance",
            rel <= 0.01,
            format!("strike {:.6} vs {e:.6} ({:.3}%)", vs.strike, rel * 100.0),
        ));
        let z = (vs.strike - qv.estimate).abs() / combined(vs.std_error);
        checks.push(Check::new(
            "varswap",
            "mc_cross_check",
            z <= 3.0,
            format!("strike {:.6} vs mc {:.6} ± {:.6} ({z:.2} SE)", vs.strike, qv.estimate, qv.std_error),
        ));
    }
    Ok(checks)
}

pub fn mc(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<Check>, CliError> {
    let m = cfg.model;
    let spec = cfg.mc.spec();
    let group = if spec.antithetic { 2 } else { 1 };
    let st = simulate_q(&m, &spec)?;
    let disc = (-m.r * m.t_mat).exp();
    let spot: Vec<f64> = st.log_s.iter().map(|x| disc * m.s0 * x.exp()).collect();
    let call: Vec<f64> = spot.iter().map(|s| (s - disc * m.s0).max(0.0)).collect();
    let atm_ref = if m.xi == 0.0 || cfg.cf.order >= 1 {
        let cf = |u: Complex| cf_total(u, &m, &cfg.cf);
        Some(fourier_price(cf, m.s0, m.s0, m.r, m.q, m.t_mat, &cfg.pricing.fourier, true)?)
    } else {
        None
    };
    let atm_checked = m.xi == 0.0 || small_param_check(&m)?.admissible;
    let sigma_ref = (m.xi == 0.0).then(|| m.sigma0 * (-m.kappa * m.t_mat).exp());
    let quantities = [
        ("discounted_spot", path_stats(&spot, group), Some(m.s0 * (-m.q * m.t_mat).exp()), 4.0, true),
        ("atm_call", path_stats(&call, group), atm_ref, 3.0, atm_checked),
        ("sigma_mean", path_stats(&st.sigma, group), sigma_ref, 4.0, true),
        ("v_mean", path_stats(&st.v, group), Some(m.v0 * (-m_integral(0.0, m.t_mat, &m)).exp()), 4.0, true),
    ];
    let mut t = Table::new("mc", &["quantity", "value", "std_error", "reference", "gap", "gap_se"]);
    let mut checks = Vec::new();
    for (name, s, reference, tol, checked) in quantities {
        let gap = reference.map(|r| s.estimate - r);
        let gap_se = gap.filter(|_| s.std_error > 0.0).map(|g| g.abs() / s.std_error);
        t.push(vec![name.into(), num(s.estimate), num(s.std_error), opt(reference), opt(gap), opt(gap_se)]);
        if let (Some(g), Some(r), true) = (gap, reference, checked) {
            // estimators with (near) zero variance are held to rounding level
            let floor = 1e-12 * r.abs().max(1.0);
            let ok = g.abs() <= floor || gap_se.is_some_and(|z| z <= tol);
            let z = gap_se.map_or("-".to_string(), |z| format!("{z:.2}"));
            checks.push(Check::new(
                "mc",
                name,
                ok,
                format!("gap {g:.3e}, {z} SE (bound {tol} SE or {floor:.0e} absolute)"),
            ));
        }
    }
    w.csv(&t)?;
    Ok(checks)
}
