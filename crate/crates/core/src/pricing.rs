//! European options from a characteristic function, the Black–Scholes
//! reference, implied volatility, and variance swaps through the forward
//! characteristic function.
//!
//! Every CF here is the CF of `log(S_T / S_0)`.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::charfn::{coefficients, solve_affine, CfMode, CorrectionConfig};
use crate::error::{invalid, Error, Result};
use crate::model::AdolModel;
use crate::montecarlo::{path_stats, simulate_states, McSpec, StateSample};
use crate::numerics::{integrate_adaptive, norm_cdf, norm_pdf, Complex, QuadratureSpec};

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{name} must be > 0, got {x}")));
    }
    Ok(())
}

/// Black–Scholes price for aggregate variance `total_variance` over `[0, t]`.
pub fn bs_price(spot: f64, strike: f64, r: f64, q: f64, t: f64, total_variance: f64, is_call: bool) -> Result<f64> {
    check_positive("spot", spot)?;
    check_positive("strike", strike)?;
    if !(total_variance >= 0.0) || !(t >= 0.0) {
        return Err(Error::Domain("variance and maturity must be >= 0".into()));
    }
    let df = (-r * t).exp();
    let fwd = spot * ((r - q) * t).exp();
    let sign = if is_call { 1.0 } else { -1.0 };
    if total_variance == 0.0 {
        return Ok(df * (sign * (fwd - strike)).max(0.0));
    }
    let sd = total_variance.sqrt();
    let d1 = ((fwd / strike).ln() + 0.5 * total_variance) / sd;
    let d2 = d1 - sd;
    Ok(df * sign * (fwd * norm_cdf(sign * d1) - strike * norm_cdf(sign * d2)))
}

/// `∫₀^T σ0² e^{-2κt} dt`, the aggregate variance of the model at ξ = 0.
pub fn deterministic_total_variance(model: &AdolModel) -> f64 {
    let (s2, k, t) = (model.sigma0 * model.sigma0, model.kappa, model.t_mat);
    if k * t < 1e-8 {
        return s2 * t * (1.0 - k * t);
    }
    s2 * (1.0 - (-2.0 * k * t).exp()) / (2.0 * k)
}

/// CF of `log(S_T/S_0)` under Black–Scholes with aggregate variance.
pub fn bs_cf(u: Complex, r: f64, q: f64, t: f64, total_variance: f64) -> Complex {
    let i = Complex::new(0.0, 1.0);
    (i * u * ((r - q) * t) - u * (u + i) * (0.5 * total_variance)).exp()
}

fn default_damping() -> f64 {
    1.5
}

fn default_u_max() -> f64 {
    500.0
}

fn default_n_points() -> usize {
    4096
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierPricingSpec {
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    /// Grid size of the FFT ladder.
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

impl Default for FourierPricingSpec {
    fn default() -> Self {
        Self {
            damping: default_damping(),
            u_max: default_u_max(),
            n_points: default_n_points(),
            quad: QuadratureSpec::default(),
        }
    }
}

impl FourierPricingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return Err(invalid("damping", "must be > 0"));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(invalid("u_max", "must be > 0"));
        }
        if self.n_points < 64 {
            return Err(invalid("n_points", "must be >= 64"));
        }
        self.quad.validate()
    }
}

fn check_normalised<F>(cf: &F) -> Result<()>
where
    F: Fn(Complex) -> Result<Complex>,
{
    let gap = (cf(Complex::default())? - 1.0).norm();
    if !(gap <= 1e-8) {
        return Err(Error::Normalization(gap));
    }
    Ok(())
}

/// Damped call transform `e^{-rT} cf(v - (α+1)i) / (α² + α - v² + i(2α+1)v)`.
fn damped<F>(cf: &F, v: f64, alpha: f64, df: f64) -> Result<Complex>
where
    F: Fn(Complex) -> Result<Complex>,
{
    let num = cf(Complex::new(v, -(alpha + 1.0)))?;
    let den = Complex::new(alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v);
    Ok(num * df / den)
}

fn settle_sign(price: f64, spot: f64) -> Result<f64> {
    if price < -1e-8 * spot {
        return Err(Error::Inversion(format!("negative price {price:.3e}")));
    }
    Ok(price.max(0.0))
}

/// Price by damped-contour inversion with adaptive quadrature on
/// `[0, u_max]`. Puts come from parity.
#[allow(clippy::too_many_arguments)]
pub fn fourier_price<F>(
    cf: F,
    spot: f64,
    strike: f64,
    r: f64,
    q: f64,
    t: f64,
    spec: &FourierPricingSpec,
    is_call: bool,
) -> Result<f64>
where
    F: Fn(Complex) -> Result<Complex>,
{
    check_positive("spot", spot)?;
    check_positive("strike", strike)?;
    spec.validate()?;
    check_normalised(&cf)?;
    let alpha = spec.damping;
    let k = (strike / spot).ln();
    let df = (-r * t).exp();
    let mut failure = None;
    let integral = integrate_adaptive(
        |v| {
            if failure.is_some() {
                return Complex::default();
            }
            match damped(&cf, v, alpha, df) {
                Ok(z) => Complex::new((Complex::new(0.0, -v * k).exp() * z).re, 0.0),
                Err(e) => {
                    failure = Some(e);
                    Complex::default()
                }
            }
        },
        0.0,
        spec.u_max,
        &spec.quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let call = spot * (-alpha * k).exp() / std::f64::consts::PI * integral.re;
    let price = if is_call { call } else { call - spot * (-q * t).exp() + strike * (-r * t).exp() };
    settle_sign(price, spot)
}

/// One row of a strike ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderPrice {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
}

/// Calls and puts for many strikes from one FFT of the damped transform
/// with Simpson weights, interpolated with Catmull–Rom cubics in
/// log-moneyness.
#[allow(clippy::too_many_arguments)]
pub fn fft_ladder<F>(
    cf: F,
    spot: f64,
    strikes: &[f64],
    r: f64,
    q: f64,
    t: f64,
    spec: &FourierPricingSpec,
) -> Result<Vec<LadderPrice>>
where
    F: Fn(Complex) -> Result<Complex> + Sync,
{
    check_positive("spot", spot)?;
    spec.validate()?;
    check_normalised(&cf)?;
    let n = spec.n_points;
    let alpha = spec.damping;
    let eta = spec.u_max / n as f64;
    let lambda = 2.0 * std::f64::consts::PI / (n as f64 * eta);
    let b = 0.5 * n as f64 * lambda;
    let df = (-r * t).exp();
    let values: Vec<Result<Complex>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let v = eta * j as f64;
            let w = if j == 0 {
                1.0 / 3.0
            } else if j % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
            Ok(Complex::new(0.0, b * v).exp() * damped(&cf, v, alpha, df)? * (eta * w))
        })
        .collect();
    let mut buf = values.into_iter().collect::<Result<Vec<_>>>()?;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let grid: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let k = -b + lambda * m as f64;
            (-alpha * k).exp() / std::f64::consts::PI * z.re
        })
        .collect();
    strikes
        .iter()
        .map(|&strike| {
            check_positive("strike", strike)?;
            let k = (strike / spot).ln();
            let pos = (k + b) / lambda;
            let m = pos.floor() as isize;
            if m < 1 || m as usize + 2 >= n {
                return Err(Error::Domain(format!("strike {strike} outside the FFT log-moneyness range")));
            }
            let m = m as usize;
            let x = pos - m as f64;
            let (p0, p1, p2, p3) = (grid[m - 1], grid[m], grid[m + 1], grid[m + 2]);
            let c =
                p1 + 0.5 * x * (p2 - p0 + x * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + x * (3.0 * (p1 - p2) + p3 - p0)));
            let call = settle_sign(spot * c, spot)?;
            let put = settle_sign(call - spot * (-q * t).exp() + strike * (-r * t).exp(), spot)?;
            Ok(LadderPrice { strike, call, put })
        })
        .collect()
}

/// Annualised Black–Scholes volatility reproducing `price`.
pub fn implied_vol(price: f64, spot: f64, strike: f64, r: f64, q: f64, t: f64, is_call: bool) -> Result<f64> {
    check_positive("spot", spot)?;
    check_positive("strike", strike)?;
    check_positive("maturity", t)?;
    let df = (-r * t).exp();
    let fwd = spot * ((r - q) * t).exp();
    let (lower, upper) = if is_call {
        (df * (fwd - strike).max(0.0), spot * (-q * t).exp())
    } else {
        (df * (strike - fwd).max(0.0), strike * df)
    };
    if !(price > lower && price < upper) {
        return Err(Error::OutOfBounds(format!("price {price} not inside ({lower}, {upper})")));
    }
    let f = |vol: f64| bs_price(spot, strike, r, q, t, vol * vol * t, is_call).map(|p| p - price);
    let (mut lo, mut hi) = (1e-8, 1.0);
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Inversion("implied volatility above 1000".into()));
        }
    }
    let mut vol = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = f(vol)?;
        if g.abs() <= 1e-14 * spot {
            return Ok(vol);
        }
        if g > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        let sd = vol * t.sqrt();
        let d1 = ((fwd / strike).ln() + 0.5 * sd * sd) / sd;
        let vega = df * fwd * norm_pdf(d1) * t.sqrt();
        let newton = vol - g / vega;
        vol = if vega > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(vol)
}

fn default_u_step() -> f64 {
    0.02
}

fn default_mc_states() -> usize {
    20_000
}

fn default_state_steps() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSwapSpec {
    pub observation_times: Vec<f64>,
    #[serde(default = "default_u_step")]
    pub u_step: f64,
    #[serde(default = "default_mc_states")]
    pub mc_states: usize,
    #[serde(default)]
    pub seed: u64,
    /// Grid steps of the state simulation.
    #[serde(default = "default_state_steps")]
    pub state_steps: usize,
}

impl VarSwapSpec {
    pub fn new(observation_times: Vec<f64>) -> Self {
        Self {
            observation_times,
            u_step: default_u_step(),
            mc_states: default_mc_states(),
            seed: 0,
            state_steps: default_state_steps(),
        }
    }

    pub fn validate(&self, model: &AdolModel) -> Result<()> {
        let obs = &self.observation_times;
        if obs.is_empty() {
            return Err(invalid("observation_times", "must be non-empty"));
        }
        if obs.windows(2).any(|w| w[1] <= w[0]) || !(obs[0] > 0.0) || obs[obs.len() - 1] > model.t_mat {
            return Err(invalid("observation_times", "must increase strictly inside (0, T]"));
        }
        if !(self.u_step > 1e-6 && self.u_step < 1e-1) {
            return Err(invalid("u_step", "must lie in (1e-6, 1e-1)"));
        }
        if self.mc_states < 2 || self.state_steps == 0 {
            return Err(invalid("mc_states", "need at least 2 states and 1 step"));
        }
        Ok(())
    }

    fn mc_spec(&self) -> McSpec {
        McSpec { n_paths: self.mc_states + self.mc_states % 2, ..McSpec::new(0, self.state_steps, self.seed) }
    }
}

/// Zero-order CF over `[t1, t2]` as a function of the state at `t1`.
#[derive(Debug, Clone)]
enum InnerCf {
    Coefficients(crate::charfn::CoefficientValues),
    One,
}

impl InnerCf {
    fn new(u: Complex, t1: f64, t2: f64, model: &AdolModel, cfg: &CorrectionConfig) -> Result<Self> {
        if u == Complex::default() {
            return Ok(Self::One);
        }
        let leg = model.with_maturity(t2);
        let c = match cfg.mode {
            CfMode::AffineOde => {
                let sol = solve_affine(u, &leg, t1, 0, &cfg.ode)?;
                crate::charfn::CoefficientValues {
                    alpha: sol.a,
                    gamma: sol.gamma,
                    beta_bar: sol.b,
                    gamma_bar: Complex::default(),
                }
            }
            CfMode::PaperClosedForm => coefficients(u, &leg, cfg.mode, &cfg.ode)?.at(t1)?,
        };
        Ok(Self::Coefficients(c))
    }

    fn eval(&self, sigma: f64, v: f64) -> Complex {
        match self {
            Self::One => Complex::new(1.0, 0.0),
            Self::Coefficients(c) => c.z0(sigma, v),
        }
    }
}

/// Forward CF estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardCf {
    pub value: Complex,
    /// Outer Monte Carlo standard error (zero when `t1 = 0`).
    pub std_error: f64,
    pub n_states: usize,
}

/// Index of `t` in a state sample.
fn state_index(states: &StateSample, t: f64) -> Result<usize> {
    states
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0))
        .ok_or_else(|| invalid("t1", format!("no frozen states at t = {t}")))
}

/// `E[exp(iu(log S_{t2} - log S_{t1}))]`: the zero-order CF over `[t1, t2]`
/// averaged over frozen states at `t1`. `states` may be `None` when `t1 = 0`.
pub fn forward_cf(
    u: Complex,
    t1: f64,
    t2: f64,
    model: &AdolModel,
    cfg: &CorrectionConfig,
    states: Option<&StateSample>,
) -> Result<ForwardCf> {
    if !(0.0 <= t1 && t1 < t2 && t2 <= model.t_mat) {
        return Err(Error::Domain(format!("need 0 <= t1 < t2 <= T, got [{t1}, {t2}]")));
    }
    if u == Complex::default() {
        return Ok(ForwardCf { value: Complex::new(1.0, 0.0), std_error: 0.0, n_states: 0 });
    }
    let inner = InnerCf::new(u, t1, t2, model, cfg)?;
    if t1 == 0.0 {
        return Ok(ForwardCf { value: inner.eval(model.sigma0, model.v0), std_error: 0.0, n_states: 1 });
    }
    let states = states.ok_or_else(|| invalid("states", "required when t1 > 0"))?;
    let j = state_index(states, t1)?;
    let vals: Vec<Complex> = states.sigma[j].iter().zip(&states.v[j]).map(|(&s, &v)| inner.eval(s, v)).collect();
    let re = path_stats(&vals.iter().map(|z| z.re).collect::<Vec<_>>(), states.group);
    let im = path_stats(&vals.iter().map(|z| z.im).collect::<Vec<_>>(), states.group);
    Ok(ForwardCf {
        value: Complex::new(re.estimate, im.estimate),
        std_error: re.std_error.hypot(im.std_error),
        n_states: re.n_effective,
    })
}

/// Simulate the states needed by the forward CF at the left ends of the
/// observation legs.
pub fn freeze_states(model: &AdolModel, spec: &VarSwapSpec) -> Result<StateSample> {
    let lefts: Vec<f64> = spec.observation_times[..spec.observation_times.len() - 1].to_vec();
    if lefts.is_empty() {
        return Ok(StateSample { times: Vec::new(), sigma: Vec::new(), v: Vec::new(), group: 2 });
    }
    simulate_states(model, &spec.mc_spec(), &lefts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarSwapResult {
    /// Richardson-extrapolated fair strike, variance units per year.
    pub strike: f64,
    pub std_error: f64,
    /// Estimate at step `u_step` alone.
    pub coarse: f64,
    /// Estimate at step `u_step / 2` alone.
    pub fine: f64,
    pub imaginary_residue: f64,
    pub n_states: usize,
    pub legs: usize,
}

/// Fair variance-swap strike `-(1/T) Σ ∂²_u φ_i(0)` over the observation
/// legs, by central differences at `u_step` and `u_step/2` with Richardson
/// extrapolation. Per-state contributions give the standard error.
pub fn varswap_strike(model: &AdolModel, cfg: &CorrectionConfig, spec: &VarSwapSpec) -> Result<VarSwapResult> {
    model.validate()?;
    cfg.validate()?;
    spec.validate(model)?;
    let states = freeze_states(model, spec)?;
    varswap_with_states(model, cfg, spec, &states)
}

pub fn varswap_with_states(
    model: &AdolModel,
    cfg: &CorrectionConfig,
    spec: &VarSwapSpec,
    states: &StateSample,
) -> Result<VarSwapResult> {
    let obs = &spec.observation_times;
    let legs: Vec<(f64, f64)> =
        std::iter::once(0.0).chain(obs.iter().copied()).collect::<Vec<_>>().windows(2).map(|w| (w[0], w[1])).collect();
    let h = spec.u_step;
    let n_paths = states.sigma.first().map_or(1, Vec::len);
    let group = if legs.len() > 1 { states.group } else { 1 };

    let per_leg: Vec<Result<Vec<(f64, f64, f64)>>> = legs
        .par_iter()
        .map(|&(t1, t2)| {
            let cfs: Vec<InnerCf> = [h, -h, 0.5 * h, -0.5 * h]
                .iter()
                .map(|&x| InnerCf::new(Complex::new(x, 0.0), t1, t2, model, cfg))
                .collect::<Result<_>>()?;
            let point = |s: f64, v: f64| {
                let d = |a: &InnerCf, b: &InnerCf, step: f64| -(a.eval(s, v) + b.eval(s, v) - 2.0) / (step * step);
                let coarse = d(&cfs[0], &cfs[1], h);
                let fine = d(&cfs[2], &cfs[3], 0.5 * h);
                let rich = (fine * 4.0 - coarse) / 3.0;
                (rich.re, coarse.re, fine.re)
            };
            if t1 == 0.0 {
                return Ok(vec![point(model.sigma0, model.v0); n_paths]);
            }
            let j = state_index(states, t1)?;
            Ok(states.sigma[j].iter().zip(&states.v[j]).map(|(&s, &v)| point(s, v)).collect())
        })
        .collect();

    // the imaginary part of the symmetric second difference, leg by leg
    let mut residue: f64 = 0.0;
    for &(t1, t2) in &legs {
        for x in [h, 0.5 * h] {
            let a = InnerCf::new(Complex::new(x, 0.0), t1, t2, model, cfg)?;
            let b = InnerCf::new(Complex::new(-x, 0.0), t1, t2, model, cfg)?;
            let (s, v) = if t1 == 0.0 {
                (model.sigma0, model.v0)
            } else {
                let j = state_index(states, t1)?;
                (states.sigma[j][0], states.v[j][0])
            };
            residue = residue.max(((a.eval(s, v) + b.eval(s, v)).im / (x * x)).abs());
        }
    }
    let tt = model.t_mat;
    let mut totals = vec![(0.0, 0.0, 0.0); n_paths];
    for leg in per_leg {
        for (acc, x) in totals.iter_mut().zip(leg?) {
            acc.0 += x.0 / tt;
            acc.1 += x.1 / tt;
            acc.2 += x.2 / tt;
        }
    }
    let rich = path_stats(&totals.iter().map(|x| x.0).collect::<Vec<_>>(), group);
    let coarse = path_stats(&totals.iter().map(|x| x.1).collect::<Vec<_>>(), group);
    let fine = path_stats(&totals.iter().map(|x| x.2).collect::<Vec<_>>(), group);
    if residue / tt > 1e-8 * rich.estimate.abs().max(1.0) {
        return Err(Error::Method(format!("variance-swap second derivative has imaginary residue {residue:.3e}")));
    }
    Ok(VarSwapResult {
        strike: rich.estimate,
        std_error: rich.std_error,
        coarse: coarse.estimate,
        fine: fine.estimate,
        imaginary_residue: residue / tt,
        n_states: if legs.len() > 1 { rich.n_effective } else { 0 },
        legs: legs.len(),
    })
}

/// Analytic counterpart in affine mode at order 0, where
/// `-φ''(0) = 2Gσ² + ((r-q)Δ - Gσ²)²` with `G = (1 - e^{-2κΔ}) / (4κ)`.
pub fn varswap_strike_affine_analytic(model: &AdolModel, spec: &VarSwapSpec, states: &StateSample) -> Result<f64> {
    spec.validate(model)?;
    let obs = &spec.observation_times;
    let tt = model.t_mat;
    let n_paths = states.sigma.first().map_or(1, Vec::len);
    let mut totals = vec![0.0; n_paths];
    let mut t1 = 0.0;
    for &t2 in obs {
        let dt = t2 - t1;
        let g = if model.kappa == 0.0 { 0.5 * dt } else { -(-2.0 * model.kappa * dt).exp_m1() / (4.0 * model.kappa) };
        let mu = (model.r - model.q) * dt;
        let contrib = |s: f64| (2.0 * g * s * s + (mu - g * s * s).powi(2)) / tt;
        if t1 == 0.0 {
            let c = contrib(model.sigma0);
            totals.iter_mut().for_each(|x| *x += c);
        } else {
            let j = state_index(states, t1)?;
            for (acc, &s) in totals.iter_mut().zip(&states.sigma[j]) {
                *acc += contrib(s);
            }
        }
        t1 = t2;
    }
    Ok(crate::montecarlo::pairwise_sum(&totals) / n_paths as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::cf_total;

    fn baseline_variance() -> f64 {
        let m = AdolModel::baseline();
        m.sigma0 * m.sigma0 * (1.0 - (-2.0 * m.kappa * m.t_mat).exp()) / (2.0 * m.kappa)
    }

    #[test]
    fn black_scholes_reference_values() {
        let v = baseline_variance();
        let p = bs_price(1.0, 1.0, 0.0, 0.0, 0.5, v, true).unwrap();
        assert!((p - 0.0556).abs() < 5e-5, "{p}");
        assert_eq!(bs_price(1.0, 1.0, 0.0, 0.0, 0.5, 0.0, true).unwrap(), 0.0);
        let small = 1e-8;
        let atm = bs_price(2.0, 2.0 * (0.01f64 * 0.3).exp(), 0.04, 0.03, 0.3, small, true).unwrap();
        let approx = 0.398_942_280_401_432_7 * 2.0 * small.sqrt() * (-0.03f64 * 0.3).exp();
        assert!((atm - approx).abs() < 1e-8 * approx.max(1e-12) + 1e-12);
        assert!(bs_price(0.0, 1.0, 0.0, 0.0, 1.0, 0.1, true).is_err());
    }

    #[test]
    fn fourier_reproduces_black_scholes() {
        let (r, q, t, v) = (0.03, 0.01, 0.5, baseline_variance());
        let cf = |u: Complex| Ok(bs_cf(u, r, q, t, v));
        let spec = FourierPricingSpec::default();
        for k in [0.8, 0.9, 1.0, 1.1, 1.2] {
            for is_call in [true, false] {
                let f = fourier_price(cf, 1.0, k, r, q, t, &spec, is_call).unwrap();
                let b = bs_price(1.0, k, r, q, t, v, is_call).unwrap();
                assert!((f - b).abs() < 1e-6, "K={k} call={is_call}: {f} vs {b}");
            }
        }
    }

    #[test]
    fn damping_invariance() {
        let v = baseline_variance();
        let cf = |u: Complex| Ok(bs_cf(u, 0.0, 0.0, 0.5, v));
        let reference = bs_price(1.0, 1.05, 0.0, 0.0, 0.5, v, true).unwrap();
        for damping in [0.5, 1.0, 1.5, 2.0, 2.5] {
            let spec = FourierPricingSpec { damping, ..FourierPricingSpec::default() };
            let p = fourier_price(cf, 1.0, 1.05, 0.0, 0.0, 0.5, &spec, true).unwrap();
            assert!((p - reference).abs() < 1e-6, "damping {damping}");
        }
    }

    #[test]
    fn deep_in_the_money_call() {
        let v = baseline_variance();
        let cf = |u: Complex| Ok(bs_cf(u, 0.02, 0.0, 0.5, v));
        let p = fourier_price(cf, 1.0, 0.3, 0.02, 0.0, 0.5, &FourierPricingSpec::default(), true).unwrap();
        assert!((p - (1.0 - 0.3 * (-0.01f64).exp())).abs() < 1e-5);
    }

    #[test]
    fn unnormalised_cf_is_rejected() {
        let cf = |_: Complex| Ok(Complex::new(0.9, 0.0));
        let e = fourier_price(cf, 1.0, 1.0, 0.0, 0.0, 0.5, &FourierPricingSpec::default(), true);
        assert!(matches!(e, Err(Error::Normalization(_))));
    }

    #[test]
    fn put_call_parity_for_model_cf() {
        let m = AdolModel { r: 0.02, q: 0.01, ..AdolModel::baseline() };
        let cfg = CorrectionConfig::default().with_order(1);
        let cf = |u: Complex| cf_total(u, &m, &cfg);
        let spec = FourierPricingSpec::default();
        let c = fourier_price(cf, 1.0, 0.95, m.r, m.q, m.t_mat, &spec, true).unwrap();
        let p = fourier_price(cf, 1.0, 0.95, m.r, m.q, m.t_mat, &spec, false).unwrap();
        let parity = (-m.q * m.t_mat).exp() - 0.95 * (-m.r * m.t_mat).exp();
        assert!((c - p - parity).abs() < 1e-8);
    }

    #[test]
    fn fft_ladder_matches_single_strike() {
        let v = baseline_variance();
        let cf = |u: Complex| Ok(bs_cf(u, 0.01, 0.0, 0.5, v));
        let spec = FourierPricingSpec::default();
        let strikes = [0.8, 0.95, 1.0, 1.07, 1.2];
        let ladder = fft_ladder(cf, 1.0, &strikes, 0.01, 0.0, 0.5, &spec).unwrap();
        for row in ladder {
            let b = bs_price(1.0, row.strike, 0.01, 0.0, 0.5, v, true).unwrap();
            assert!((row.call - b).abs() < 1e-5, "{row:?} vs {b}");
        }
    }

    #[test]
    fn implied_vol_round_trip() {
        for (k, vol, is_call) in [(0.8, 0.2, true), (1.0, 0.35, false), (1.3, 0.5, true), (1.1, 0.05, false)] {
            let p = bs_price(1.0, k, 0.02, 0.01, 0.7, vol * vol * 0.7, is_call).unwrap();
            let iv = implied_vol(p, 1.0, k, 0.02, 0.01, 0.7, is_call).unwrap();
            let back = bs_price(1.0, k, 0.02, 0.01, 0.7, iv * iv * 0.7, is_call).unwrap();
            assert!((back - p).abs() < 1e-8, "K={k}");
        }
        assert!(matches!(implied_vol(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, true), Err(Error::OutOfBounds(_))));
        assert!(matches!(implied_vol(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, true), Err(Error::OutOfBounds(_))));
    }

    #[test]
    fn forward_cf_degenerate_cases() {
        let m = AdolModel::baseline();
        let cfg = CorrectionConfig::default();
        let u = Complex::new(1.3, 0.0);
        assert_eq!(forward_cf(Complex::default(), 0.1, 0.3, &m, &cfg, None).unwrap().value, Complex::new(1.0, 0.0));
        let fwd = forward_cf(u, 0.0, 0.3, &m, &cfg, None).unwrap();
        let direct = cf_total(u, &m.with_maturity(0.3), &cfg).unwrap();
        assert!((fwd.value - direct).norm() < 1e-14);
        assert!(forward_cf(u, 0.1, 0.3, &m, &cfg, None).is_err());
    }

    #[test]
    fn forward_cf_deterministic_volatility() {
        let m = AdolModel::baseline().with_xi(0.0);
        let cfg = CorrectionConfig::default();
        let spec = VarSwapSpec { mc_states: 64, ..VarSwapSpec::new(vec![0.2, 0.45]) };
        let states = freeze_states(&m, &spec).unwrap();
        let (t1, t2) = (0.2, 0.45);
        let var = m.sigma0 * m.sigma0 * ((-2.0 * m.kappa * t1).exp() - (-2.0 * m.kappa * t2).exp()) / (2.0 * m.kappa);
        for u in [-3.0, 0.7, 5.0] {
            let uc = Complex::new(u, 0.0);
            let f = forward_cf(uc, t1, t2, &m, &cfg, Some(&states)).unwrap();
            assert!((f.value - bs_cf(uc, 0.0, 0.0, t2 - t1, var)).norm() < 1e-8);
        }
    }

    #[test]
    fn varswap_without_vol_of_vol() {
        let m = AdolModel::baseline().with_xi(0.0);
        let cfg = CorrectionConfig::default();
        let exact = baseline_variance() / m.t_mat;
        let single = varswap_strike(&m, &cfg, &VarSwapSpec::new(vec![m.t_mat])).unwrap();
        assert!(((single.strike - exact) / exact).abs() < 0.01, "{single:?} vs {exact}");
        let grid = |n: usize| (1..=n).map(|j| m.t_mat * j as f64 / n as f64).collect::<Vec<_>>();
        let spec = |n| VarSwapSpec { mc_states: 16, ..VarSwapSpec::new(grid(n)) };
        let a = varswap_strike(&m, &cfg, &spec(64)).unwrap().strike;
        let b = varswap_strike(&m, &cfg, &spec(128)).unwrap().strike;
        assert!(((a - b) / b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn varswap_step_convergence() {
        let m = AdolModel::baseline().with_xi(0.0);
        let cfg = CorrectionConfig::default();
        let coarse = |h: f64| {
            let spec = VarSwapSpec { u_step: h, ..VarSwapSpec::new(vec![m.t_mat]) };
            varswap_strike(&m, &cfg, &spec).unwrap().coarse
        };
        let (a, b, c) = (coarse(0.08), coarse(0.04), coarse(0.02));
        let ratio = (a - b) / (b - c);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn varswap_matches_affine_analytic() {
        let m = AdolModel::baseline();
        let cfg = CorrectionConfig::default();
        let spec = VarSwapSpec { mc_states: 2_000, ..VarSwapSpec::new(vec![0.1, 0.2, 0.3, 0.4, 0.5]) };
        let states = freeze_states(&m, &spec).unwrap();
        let fd = varswap_with_states(&m, &cfg, &spec, &states).unwrap();
        let analytic = varswap_strike_affine_analytic(&m, &spec, &states).unwrap();
        assert!(((fd.strike - analytic) / analytic).abs() < 1e-6, "{} vs {analytic}", fd.strike);
    }
}
