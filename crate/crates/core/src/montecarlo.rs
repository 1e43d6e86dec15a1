//! Path simulation of the risk-neutral system
//!
//! ```text
//! dS/S = (r - q) dt + σ dW₁
//! dσ   = [κθ - (κ + ξ m(t) 𝒱) σ] dt + ξ ν(t) σ dW₂
//! d𝒱   = -m(t) 𝒱 dt + ν(t) dW₂,        d⟨W₁, W₂⟩ = ρ dt
//! ```
//!
//! on the grid `{0, t_start} ∪ uniform(t_start, T; n_steps) ∪ marks`.
//! `log S` takes a log-Euler step with σ frozen at the left point. `log σ`
//! takes an Euler step whose Itô correction uses the exact integral of ν²
//! over the step, so ξ = 0 reproduces σ0 e^{-κt} exactly. `𝒱` takes the
//! exact step of its linear drift with the diffusion variance integrated
//! against the power-law ν².
//!
//! Every antithetic pair owns a ChaCha8 stream keyed by `(seed, pair)`, so
//! results do not depend on the number of threads.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::do_process::path_rng;
use crate::error::{invalid, Error, Result};
use crate::model::{m_integral, m_t, AdolModel};

fn default_antithetic() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// First grid point after 0; defaults to the model's ε.
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default = "default_antithetic")]
    pub antithetic: bool,
}

impl McSpec {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self { n_paths, n_steps, seed, t_start: None, antithetic: true }
    }

    pub fn validate(&self, model: &AdolModel) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be >= 1"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(invalid("n_paths", "must be even with antithetic pairs"));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be >= 1"));
        }
        let t0 = self.start(model);
        if !(t0 > 0.0 && t0 < model.t_mat) {
            return Err(invalid("t_start", "must lie in (0, T)"));
        }
        Ok(())
    }

    fn start(&self, model: &AdolModel) -> f64 {
        self.t_start.unwrap_or(model.eps)
    }

    fn group(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStats {
    pub estimate: f64,
    pub std_error: f64,
    /// Number of independent samples: pairs in antithetic mode, paths
    /// otherwise.
    pub n_effective: usize,
}

/// State of one path at a grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    /// `log(S_t / S_0)`.
    pub log_s: f64,
    pub sigma: f64,
    pub v: f64,
}

/// Simulated terminal values in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalStates {
    pub log_s: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
}

/// `(σ, 𝒱)` of every path at a set of times, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub times: Vec<f64>,
    /// `sigma[j][p]` is σ of path `p` at `times[j]`.
    pub sigma: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Paths per independent group (2 for antithetic pairs).
    pub group: usize,
}

/// Sum with pairwise splitting; the result depends only on the order of
/// `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of path values, grouped `group` at a time.
pub fn path_stats(values: &[f64], group: usize) -> PathStats {
    let samples: Vec<f64> = values.chunks(group).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let n = samples.len();
    let mean = pairwise_sum(&samples) / n as f64;
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
    let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
    PathStats { estimate: mean, std_error: (var / n as f64).sqrt(), n_effective: n }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    t1: f64,
    dt: f64,
    /// `∫ ν²` over the step.
    i2: f64,
    m0: f64,
    v_decay: f64,
    v_sd: f64,
}

fn build_grid(model: &AdolModel, spec: &McSpec, marks: &[f64]) -> Result<Vec<f64>> {
    let tt = model.t_mat;
    for &m in marks {
        if !(m > 0.0 && m <= tt) {
            return Err(invalid("observation_times", format!("{m} outside (0, T]")));
        }
    }
    let t0 = spec.start(model);
    let mut grid = vec![0.0, t0];
    let n = spec.n_steps;
    grid.extend((1..=n).map(|j| t0 + (tt - t0) * j as f64 / n as f64));
    grid.extend_from_slice(marks);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * tt);
    Ok(grid)
}

fn build_steps(model: &AdolModel, grid: &[f64]) -> Result<Vec<Step>> {
    let c = model.constants()?;
    let h = model.h;
    let b2 = c.b_h * c.b_h;
    grid.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let dt = b - a;
            let i2 = b2 * (b.powf(2.0 * h) - a.powf(2.0 * h)) / (2.0 * h);
            let mid = m_t(0.5 * (a + b), model);
            // ∫ ν²(s) e^{-2 m_mid (b - s)} ds with the exponential taken at the
            // ν²-weighted mean lag of the step
            let moment = b2 * (b.powf(2.0 * h + 1.0) - a.powf(2.0 * h + 1.0)) / (2.0 * h + 1.0);
            let lag = b * i2 - moment;
            let var = if i2 > 0.0 {
                let mean_lag = lag / i2;
                i2 * (-2.0 * mid * mean_lag).exp()
            } else {
                0.0
            };
            Ok(Step {
                t1: b,
                dt,
                i2,
                m0: m_t(a, model),
                v_decay: (-m_integral(a, b, model)).exp(),
                v_sd: var.max(0.0).sqrt(),
            })
        })
        .collect()
}

/// Simulate every path and reduce it to one value from its states at the
/// marked times. Values come back in path order.
pub fn simulate_reduce<R, F>(model: &AdolModel, spec: &McSpec, marks: &[f64], reduce: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&[PathState]) -> R + Sync,
{
    model.validate()?;
    spec.validate(model)?;
    let grid = build_grid(model, spec, marks)?;
    let steps = build_steps(model, &grid)?;
    let is_mark: Vec<bool> = grid.iter().map(|t| marks.iter().any(|m| (m - t).abs() <= 1e-14 * model.t_mat)).collect();
    let group = spec.group();
    let n_groups = spec.n_paths / group;
    let rho_perp = (1.0 - model.rho * model.rho).max(0.0).sqrt();
    let limit = 1e3 * model.sigma0;

    let groups: Vec<Result<Vec<R>>> = (0..n_groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = path_rng(spec.seed, g as u64);
            let shocks: Vec<(f64, f64)> = steps
                .iter()
                .map(|_| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    (a, b)
                })
                .collect();
            let signs: &[f64] = if group == 2 { &[1.0, -1.0] } else { &[1.0] };
            signs
                .iter()
                .map(|&sign| {
                    let mut marked = Vec::with_capacity(marks.len());
                    let (mut x, mut ls, mut v) = (0.0f64, model.sigma0.ln(), model.v0);
                    for (j, st) in steps.iter().enumerate() {
                        let (zp, z2) = (sign * shocks[j].0, sign * shocks[j].1);
                        let z1 = model.rho * z2 + rho_perp * zp;
                        let s = ls.exp();
                        x += (model.r - model.q - 0.5 * s * s) * st.dt + s * st.dt.sqrt() * z1;
                        let mut drift = -model.kappa - model.xi * st.m0 * v - 0.5 * model.xi * model.xi * st.i2 / st.dt;
                        if model.theta != 0.0 {
                            drift += model.kappa * model.theta / s;
                        }
                        ls += drift * st.dt + model.xi * st.i2.sqrt() * z2;
                        v = v * st.v_decay + st.v_sd * z2;
                        let s_new = ls.exp();
                        if !(s_new <= limit) {
                            return Err(Error::Method(format!(
                                "step-size instability: sigma = {s_new:.3e} exceeds 1e3 * sigma0 \
                                 at t = {} on group {g}; refine n_steps",
                                st.t1
                            )));
                        }
                        if is_mark[j + 1] {
                            marked.push(PathState { t: st.t1, log_s: x, sigma: s_new, v });
                        }
                    }
                    Ok(reduce(&marked))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(spec.n_paths);
    for g in groups {
        out.extend(g?);
    }
    Ok(out)
}

/// Terminal `(log S_T/S_0, σ_T, 𝒱_T)` of every path.
pub fn simulate_q(model: &AdolModel, spec: &McSpec) -> Result<TerminalStates> {
    let rows = simulate_reduce(model, spec, &[model.t_mat], |s| {
        let last = s[s.len() - 1];
        (last.log_s, last.sigma, last.v)
    })?;
    let mut out = TerminalStates {
        log_s: Vec::with_capacity(rows.len()),
        sigma: Vec::with_capacity(rows.len()),
        v: Vec::with_capacity(rows.len()),
    };
    for (x, s, v) in rows {
        out.log_s.push(x);
        out.sigma.push(s);
        out.v.push(v);
    }
    Ok(out)
}

/// `(σ, 𝒱)` at each of `times` (strictly increasing, inside `(0, T]`).
pub fn simulate_states(model: &AdolModel, spec: &McSpec, times: &[f64]) -> Result<StateSample> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times", "must be strictly increasing"));
    }
    let rows = simulate_reduce(model, spec, times, |s| s.iter().map(|p| (p.sigma, p.v)).collect::<Vec<_>>())?;
    let mut sigma = vec![Vec::with_capacity(rows.len()); times.len()];
    let mut v = vec![Vec::with_capacity(rows.len()); times.len()];
    for row in rows {
        for (j, (s, vv)) in row.into_iter().enumerate() {
            sigma[j].push(s);
            v[j].push(vv);
        }
    }
    Ok(StateSample { times: times.to_vec(), sigma, v, group: spec.group() })
}

/// Discounted European payoff.
pub fn mc_price(model: &AdolModel, spec: &McSpec, strike: f64, is_call: bool) -> Result<PathStats> {
    Ok(mc_price_ladder(model, spec, &[strike], is_call)?[0])
}

/// Discounted European payoffs for several strikes from one set of paths.
pub fn mc_price_ladder(model: &AdolModel, spec: &McSpec, strikes: &[f64], is_call: bool) -> Result<Vec<PathStats>> {
    if strikes.iter().any(|k| !(*k >= 0.0)) {
        return Err(invalid("strike", "must be >= 0"));
    }
    let disc = (-model.r * model.t_mat).exp();
    let s0 = model.s0;
    let values = simulate_reduce(model, spec, &[model.t_mat], |s| {
        let st = s0 * s[s.len() - 1].log_s.exp();
        strikes
            .iter()
            .map(|k| {
                let payoff = if is_call { st - k } else { k - st };
                disc * payoff.max(0.0)
            })
            .collect::<Vec<f64>>()
    })?;
    Ok((0..strikes.len())
        .map(|j| {
            let column: Vec<f64> = values.iter().map(|v| v[j]).collect();
            path_stats(&column, spec.group())
        })
        .collect())
}

/// `(1/T) Σ (Δ log S)²` over the observation schedule, starting from 0.
pub fn mc_quadratic_variation(model: &AdolModel, spec: &McSpec, observation_times: &[f64]) -> Result<PathStats> {
    if observation_times.is_empty() {
        return Err(invalid("observation_times", "must be non-empty"));
    }
    if observation_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("observation_times", "must be strictly increasing"));
    }
    let tt = model.t_mat;
    let values = simulate_reduce(model, spec, observation_times, |s| {
        let mut prev = 0.0;
        let mut sq = Vec::with_capacity(s.len());
        for p in s {
            sq.push((p.log_s - prev).powi(2));
            prev = p.log_s;
        }
        pairwise_sum(&sq) / tt
    })?;
    Ok(path_stats(&values, spec.group()))
}
