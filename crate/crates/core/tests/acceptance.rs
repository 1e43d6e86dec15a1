//! The ten acceptance criteria, each reported on one PASS/FAIL line.

use std::time::Instant;

use adol_core::charfn::paper::drift_over_nu_antiderivative;
use adol_core::charfn::{
    cf_total, j_integral, pde_residual, solve_affine, CfMode, CoefficientValues, CorrectionConfig, GreenPieces,
    JIntegrand, JMethod,
};
use adol_core::do_process::{cov_m, psi_h, simulate_vh, TimeGrid};
use adol_core::montecarlo::{mc_price, mc_quadratic_variation, McSpec};
use adol_core::numerics::{integrate_real, OdeSpec, QuadratureSpec};
use adol_core::pricing::{
    bs_cf, bs_price, deterministic_total_variance, fourier_price, freeze_states, varswap_with_states,
    FourierPricingSpec, VarSwapSpec,
};
use adol_core::{do_constants, AdolModel, Complex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn baseline() -> AdolModel {
    AdolModel::baseline()
}

fn chi_grid(t: f64) -> Vec<f64> {
    (0..100).map(|j| 0.05 * t + (t - 0.05 * t) * j as f64 / 99.0).collect()
}

fn j_at(g: &GreenPieces, chi: f64) -> JIntegrand {
    let m = g.model();
    JIntegrand::from_state(g, m.sigma0, m.v0, 0.0, chi).unwrap()
}

fn criterion_1() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let start = Instant::now();
        let m = baseline();
        let quad = QuadratureSpec::new(1e-14, 1e-12, 5000).unwrap();
        let g = GreenPieces::new(&m, Complex::new(1.0, 0.0), quad).unwrap();
        let mut gaps = Vec::new();
        for chi in chi_grid(m.t_mat) {
            let j = j_at(&g, chi);
            let q = j_integral(&j, JMethod::Quadrature, &quad).map_err(|e| e.to_string())?;
            let a = j_integral(&j, JMethod::QuadraticAtVarsigma, &quad).map_err(|e| e.to_string())?;
            gaps.push((a - q).norm() / q.norm() * 1e4);
        }
        let elapsed = start.elapsed().as_secs_f64();
        let max = gaps.iter().cloned().fold(0.0, f64::max);
        let mut sorted = gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        check(
            (1.0..=10.0).contains(&max) && elapsed < 10.0,
            format!("max gap {max:.2} bps, median {median:.2} bps, {:.1} ms on one thread", elapsed * 1e3),
        )
    })
}

fn criterion_2() -> Outcome {
    let m = baseline();
    let quad = QuadratureSpec::default();
    let g = GreenPieces::new(&m, Complex::new(1.0, 0.0), quad).unwrap();
    let worst = chi_grid(m.t_mat)
        .into_iter()
        .map(|chi| {
            let j = j_at(&g, chi);
            j.quadratic_at(j.varsigma).2.re
        })
        .fold(f64::NEG_INFINITY, f64::max);
    check(worst < 0.0, format!("largest a2 on the grid {worst:.4e}"))
}

fn criterion_3() -> Outcome {
    let mut worst = (0.0, 0.0);
    let mut above = Vec::new();
    for j in 40..=99 {
        let h = j as f64 / 100.0;
        let d = do_constants(h).unwrap().d_h();
        if d > worst.1 {
            worst = (h, d);
        }
        if d > 0.12 {
            above.push(h);
        }
    }
    let range = match (above.first(), above.last()) {
        (Some(lo), Some(hi)) => format!("exceeds 0.12 on H in [{lo:.2}, {hi:.2}]"),
        _ => "stays within 0.12".to_string(),
    };
    let half = do_constants(0.5).unwrap().d_h_sq.abs();
    check(
        worst.1 <= 0.12 && half <= 1e-12,
        format!(
            "max d_H = {:.4} at H = {:.2} (bound 0.12); d_H^2 at 1/2 = {half:.1e}; the closed form {range}",
            worst.1, worst.0
        ),
    )
}

fn criterion_4() -> Outcome {
    let m = baseline();
    let mut worst: f64 = 0.0;
    for mode in [CfMode::AffineOde, CfMode::PaperClosedForm] {
        for order in 0..=2 {
            let cfg = CorrectionConfig::default().with_mode(mode).with_order(order);
            let v = cf_total(Complex::default(), &m, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max((v - 1.0).norm());
        }
    }
    check(worst <= 1e-12, format!("max |cf(0) - 1| = {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let m = AdolModel { r: 0.02, q: 0.01, ..baseline().with_xi(0.0) };
    let var = deterministic_total_variance(&m);
    let ode = OdeSpec::default();
    let mut cf_gap: f64 = 0.0;
    for j in 0..=80 {
        let u = -20.0 + 0.5 * j as f64;
        let uc = Complex::new(u, 0.0);
        let z = solve_affine(uc, &m, 0.0, 0, &ode).map_err(|e| e.to_string())?.z0(m.sigma0, m.v0);
        cf_gap = cf_gap.max((z - bs_cf(uc, m.r, m.q, m.t_mat, var)).norm());
    }
    let cfg = CorrectionConfig::default();
    let spec = FourierPricingSpec::default();
    let mut price_gap: f64 = 0.0;
    for j in 0..=8 {
        let k = 0.8 + 0.05 * j as f64;
        let f = fourier_price(|u| cf_total(u, &m, &cfg), 1.0, k, m.r, m.q, m.t_mat, &spec, true)
            .map_err(|e| e.to_string())?;
        let b = bs_price(1.0, k, m.r, m.q, m.t_mat, var, true).unwrap();
        price_gap = price_gap.max((f - b).abs());
    }
    check(
        cf_gap <= 1e-8 && price_gap <= 1e-6,
        format!("max CF gap {cf_gap:.1e}, max price gap {price_gap:.1e} (spot 1)"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let m = baseline();
    let admissible = adol_core::model::small_param_check(&m).unwrap().admissible;
    let cfg = CorrectionConfig::default().with_order(1);
    let cf =
        fourier_price(|u| cf_total(u, &m, &cfg), 1.0, 1.0, 0.0, 0.0, m.t_mat, &FourierPricingSpec::default(), true)
            .map_err(|e| e.to_string())?;
    let mc = mc_price(&m, &McSpec::new(100_000, 500, 2024), 1.0, true).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let z = (cf - mc.estimate).abs() / mc.std_error;
    check(
        admissible && z <= 3.0 && elapsed < 60.0,
        format!("cf-order-1 {cf:.6}, mc {:.6} ± {:.6} ({z:.2} SE), {elapsed:.1} s", mc.estimate, mc.std_error),
    )
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    for hj in 1..20 {
        let h = hj as f64 * 0.05;
        let c = do_constants(h).unwrap();
        for t in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
            let lhs = psi_h(t, &c).unwrap().powi(2) * cov_m(t, t, &c).unwrap();
            let rhs = (1.0 - c.d_h_sq) * t.powf(2.0 * h);
            worst = worst.max(((lhs - rhs) / rhs).abs());
        }
    }
    let c = do_constants(0.3).unwrap();
    let grid = TimeGrid::new(vec![0.25, 0.5, 1.0]).unwrap();
    let n = 100_000;
    let paths = simulate_vh(&grid, n, 7, &c).map_err(|e| e.to_string())?;
    let mut z_max: f64 = 0.0;
    for (j, &t) in grid.times().iter().enumerate() {
        let col = paths.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let exact = (1.0 - c.d_h_sq) * t.powf(0.6);
        let se = exact * (2.0 / (n - 1) as f64).sqrt();
        z_max = z_max.max((var - exact).abs() / se);
    }
    check(
        worst <= 1e-10 && z_max <= 4.0,
        format!("identity max rel error {worst:.1e}; empirical variance within {z_max:.2} SE"),
    )
}

fn criterion_8() -> Outcome {
    let m = baseline().with_xi(0.0);
    let exact = deterministic_total_variance(&m) / m.t_mat;
    let obs: Vec<f64> = (1..=25).map(|j| m.t_mat * j as f64 / 25.0).collect();
    let spec = VarSwapSpec { mc_states: 64, ..VarSwapSpec::new(obs.clone()) };
    let states = freeze_states(&m, &spec).map_err(|e| e.to_string())?;
    let cfg = CorrectionConfig::default();
    let vs = varswap_with_states(&m, &cfg, &spec, &states).map_err(|e| e.to_string())?;
    let qv = mc_quadratic_variation(&m, &McSpec::new(20_000, 500, 5), &obs).map_err(|e| e.to_string())?;
    let rel = (vs.strike - exact).abs() / exact;
    let z = (vs.strike - qv.estimate).abs() / qv.std_error;
    check(
        rel <= 0.01 && z <= 3.0,
        format!(
            "strike {:.6} vs integrated variance {exact:.6} ({:.3}%), mc {:.6} ± {:.6} ({z:.2} SE)",
            vs.strike,
            rel * 100.0,
            qv.estimate,
            qv.std_error
        ),
    )
}

fn criterion_9() -> Outcome {
    let m = baseline();
    let c = m.constants().unwrap();
    let quad = QuadratureSpec::new(1e-15, 1e-13, 5000).unwrap();
    let closed = drift_over_nu_antiderivative(m.t_mat, &m, &c) - drift_over_nu_antiderivative(0.0, &m, &c);
    let numeric =
        integrate_real(|s| (m.kappa + m.m_rho * s.powf(m.m_pi)) / (c.b_h * s.powf(m.h - 0.5)), 0.0, m.t_mat, &quad)
            .unwrap();
    let beta_gap = ((closed - numeric) / numeric).abs();
    let g = GreenPieces::new(&m, Complex::new(1.0, 0.0), quad).unwrap();
    let mut tau_gap: f64 = 0.0;
    for j in 0..50 {
        let t = m.t_mat * j as f64 / 50.0;
        let q = g.tau(t).unwrap();
        let cl = g.tau_closed(t).unwrap();
        tau_gap = tau_gap.max((cl - q).norm() / q);
    }
    let note = if tau_gap > 1e-6 { " (breach logged)" } else { "" };
    check(
        beta_gap <= 1e-10,
        format!("power-law integral gap {beta_gap:.1e}; tau closed form vs quadrature {tau_gap:.1e}{note}"),
    )
}

fn criterion_10() -> Outcome {
    let m = baseline().with_xi(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let points: Vec<(f64, f64, f64)> = (0..100)
        .map(|_| (rng.random_range(0.02..m.t_mat - 0.02), rng.random_range(0.1..0.6), rng.random_range(-2.0..8.0)))
        .collect();
    let u = Complex::new(1.0, 0.0);
    let ode = OdeSpec::new(1e-12, 1e-14, 0.05).unwrap();
    let affine = pde_residual(|t, s, v| Ok(solve_affine(u, &m, t, 0, &ode)?.z0(s, v)), u, &m, &points)
        .map_err(|e| e.to_string())?;
    let paper_model = baseline();
    let paper = pde_residual(
        |t, s, v| {
            let c = adol_core::charfn::coeffs_paper(u, &paper_model)?.at(t)?;
            Ok(CoefficientValues { ..c }.z0(s, v))
        },
        u,
        &paper_model.with_xi(0.0),
        &points,
    )
    .map_err(|e| e.to_string())?;
    check(
        affine.max <= 1e-6,
        format!(
            "affine residual max {:.1e}; paper-mode residual max {:.3e}, mean {:.3e} (published, no tolerance)",
            affine.max, paper.max, paper.mean
        ),
    )
}

#[test]
fn acceptance() {
    type Criterion = (u8, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "J approximation accuracy", criterion_1),
        (2, "a2 negativity", criterion_2),
        (3, "DO approximation quality", criterion_3),
        (4, "CF normalisation", criterion_4),
        (5, "Black-Scholes limit", criterion_5),
        (6, "Monte Carlo cross-check", criterion_6),
        (7, "projection-variance identity", criterion_7),
        (8, "variance swap", criterion_8),
        (9, "closed form vs quadrature", criterion_9),
        (10, "PDE residual", criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                println!("criterion {n:>2} FAIL  {name}: {detail}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
