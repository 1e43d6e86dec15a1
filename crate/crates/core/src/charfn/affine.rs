//! Exponential-affine solution of the ξ = 0 pricing PDE together with its
//! polynomial ξ-corrections, integrated numerically backward from maturity.
//!
//! The zero order is `z₀ = exp(A + Γσ² + Bσ𝒱)`. Each correction is written
//! as `z_i = z₀ P_i(σ, 𝒱)` with `P_i` a polynomial whose coefficients obey a
//! linear ODE system driven by the source `Φ₁(z₀P_{i-1}) + Φ₂(z₀P_{i-2})`
//! divided by `z₀`. The monomial basis of every `P_i` is closed under the
//! operators and is found before integration.
//!
//! Time is reparametrised as `t = s^k` so that the `t^{H-1/2}` vol-of-vol
//! profile only ever enters through bounded weights.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Error, Result};
use crate::model::{m_t, AdolModel};
use crate::numerics::{integrate_ode, Complex, OdeSpec};

pub const MAX_ORDER: usize = 2;

type Mono = (u32, u32);

/// Polynomial in (σ, 𝒱) with complex coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Mono, Complex>,
}

impl Poly {
    pub fn one() -> Self {
        let mut p = Self::default();
        p.add((0, 0), Complex::new(1.0, 0.0));
        p
    }

    fn add(&mut self, m: Mono, c: Complex) {
        *self.terms.entry(m).or_default() += c;
    }

    pub fn eval(&self, sigma: f64, v: f64) -> Complex {
        self.terms
            .iter()
            .fold(Complex::default(), |acc, (&(a, b), c)| acc + c * sigma.powi(a as i32) * v.powi(b as i32))
    }

    pub fn monomials(&self) -> impl Iterator<Item = Mono> + '_ {
        self.terms.keys().copied()
    }

    pub fn coeff(&self, m: Mono) -> Complex {
        self.terms.get(&m).copied().unwrap_or_default()
    }
}

/// Time-local quantities needed by the operators, with every power of ν
/// already multiplied by `dt/ds`.
#[derive(Debug, Clone, Copy)]
struct Weights {
    w0: f64,
    w1: f64,
    w2: f64,
    m: f64,
}

/// `Φ₁(z₀P)/z₀ · dt/ds` for the adjusted first-order operator
/// `ν²σ ∂²_{σ𝒱} + (iuρνσ - m𝒱) σ ∂_σ`.
fn phi1(p: &Poly, gamma: Complex, iurho: Complex, w: &Weights) -> Poly {
    let mut out = Poly::default();
    for (&(a, b), &c) in &p.terms {
        let (fa, fb) = (a as f64, b as f64);
        if b >= 1 {
            out.add((a + 2, b - 1), c * gamma * (2.0 * fb * w.w2));
            if a >= 1 {
                out.add((a, b - 1), c * (fa * fb * w.w2));
            }
        }
        out.add((a + 2, b + 1), -c * gamma * (2.0 * w.m * w.w0));
        if a >= 1 {
            out.add((a, b + 1), -c * (fa * w.m * w.w0));
        }
        out.add((a + 3, b), c * iurho * gamma * (2.0 * w.w1));
        if a >= 1 {
            out.add((a + 1, b), c * iurho * (fa * w.w1));
        }
    }
    out
}

/// `Φ₂(z₀P)/z₀ · dt/ds` for `Φ₂ = ½ν²σ² ∂²_σ`.
fn phi2(p: &Poly, gamma: Complex, w: &Weights) -> Poly {
    let mut out = Poly::default();
    for (&(a, b), &c) in &p.terms {
        let fa = a as f64;
        out.add((a + 2, b), c * gamma * ((1.0 + 2.0 * fa) * w.w2));
        out.add((a + 4, b), c * gamma * gamma * (2.0 * w.w2));
        if a >= 2 {
            out.add((a, b), c * (0.5 * fa * (fa - 1.0) * w.w2));
        }
    }
    out
}

/// Structural closure: monomials reached from `seed` by the transport part of
/// the coefficient ODE (`𝒱²`-lowering via diffusion, `𝒱 -> σ` via the cross
/// term).
fn close_basis(seed: &BTreeSet<Mono>) -> Vec<Mono> {
    let mut set = seed.clone();
    let mut stack: Vec<Mono> = seed.iter().copied().collect();
    while let Some((a, b)) = stack.pop() {
        let mut next = Vec::new();
        if b >= 2 {
            next.push((a, b - 2));
        }
        if b >= 1 {
            next.push((a + 1, b - 1));
        }
        for m in next {
            if set.insert(m) {
                stack.push(m);
            }
        }
    }
    set.into_iter().collect()
}

/// Monomial bases of `P_1..P_order`, found by running the operators on
/// generic coefficients.
fn bases(order: usize) -> Vec<Vec<Mono>> {
    let w = Weights { w0: 1.0, w1: 1.0, w2: 1.0, m: 1.0 };
    let g = Complex::new(0.7, 0.3);
    let iur = Complex::new(0.2, 0.9);
    let mut out: Vec<Vec<Mono>> = Vec::new();
    for i in 1..=order {
        let prev1 = if i == 1 { Poly::one() } else { generic_poly(&out[i - 2]) };
        let mut seed: BTreeSet<Mono> = phi1(&prev1, g, iur, &w).monomials().collect();
        if i >= 2 {
            let prev2 = if i == 2 { Poly::one() } else { generic_poly(&out[i - 3]) };
            seed.extend(phi2(&prev2, g, &w).monomials());
        }
        out.push(close_basis(&seed));
    }
    out
}

fn generic_poly(basis: &[Mono]) -> Poly {
    let mut p = Poly::default();
    for (j, &m) in basis.iter().enumerate() {
        p.add(m, Complex::new(1.0 + j as f64, 0.5));
    }
    p
}

/// Coefficients of the affine exponent and correction polynomials at one
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSolution {
    pub t: f64,
    pub a: Complex,
    pub gamma: Complex,
    pub b: Complex,
    /// `P_1, ..., P_order`.
    pub corrections: Vec<Poly>,
}

impl AffineSolution {
    pub fn exponent(&self, sigma: f64, v: f64) -> Complex {
        self.a + self.gamma * sigma * sigma + self.b * sigma * v
    }

    pub fn z0(&self, sigma: f64, v: f64) -> Complex {
        self.exponent(sigma, v).exp()
    }

    /// `z₀ (1 + ξP₁ + ξ²P₂ ...)` truncated at `order`.
    pub fn value(&self, sigma: f64, v: f64, xi: f64, order: usize) -> Complex {
        let mut series = Complex::new(1.0, 0.0);
        let mut xi_pow = 1.0;
        for p in self.corrections.iter().take(order) {
            xi_pow *= xi;
            series += p.eval(sigma, v) * xi_pow;
        }
        self.z0(sigma, v) * series
    }
}

/// Exponent of the `t = s^k` substitution.
pub fn time_power(h: f64) -> u32 {
    if h >= 0.5 {
        1
    } else {
        (1.0 / (2.0 * h)).ceil().max(1.0) as u32
    }
}

/// Solve for the coefficients at `t_eval` given maturity `model.t_mat`.
pub fn solve_affine(
    u: Complex,
    model: &AdolModel,
    t_eval: f64,
    order: usize,
    spec: &OdeSpec,
) -> Result<AffineSolution> {
    model.validate()?;
    if model.theta != 0.0 {
        return Err(Error::Domain("characteristic-function engine requires theta = 0".into()));
    }
    if order > MAX_ORDER {
        return Err(invalid("order", format!("must be at most {MAX_ORDER}")));
    }
    let tt = model.t_mat;
    if !(0.0..=tt).contains(&t_eval) {
        return Err(Error::Domain(format!("evaluation time {t_eval} outside [0, {tt}]")));
    }
    let c = model.constants()?;
    let h = model.h;
    let k = time_power(h);
    let kf = k as f64;
    let b_h = c.b_h;
    let basis = bases(order);
    let offsets: Vec<usize> = basis
        .iter()
        .scan(3usize, |acc, b| {
            let o = *acc;
            *acc += b.len();
            Some(o)
        })
        .collect();
    let dim = 3 + basis.iter().map(Vec::len).sum::<usize>();

    let iu = Complex::new(0.0, 1.0) * u;
    let iurho = iu * model.rho;
    let drift = iu * (model.r - model.q);
    let uiu = u * (u + Complex::new(0.0, 1.0));
    let kappa = model.kappa;

    let weights = move |s: f64| -> Weights {
        let t = s.powi(k as i32);
        let w0 = kf * s.powi(k as i32 - 1);
        let (w1, w2) = if h == 0.5 {
            (b_h * w0, b_h * b_h * w0)
        } else {
            (b_h * kf * s.powf(kf * (h + 0.5) - 1.0), b_h * b_h * kf * s.powf(2.0 * h * kf - 1.0))
        };
        Weights { w0, w1, w2, m: m_t(t, model) }
    };

    let unpack = |y: &[Complex], i: usize| -> Poly {
        let mut p = Poly::default();
        for (j, &m) in basis[i].iter().enumerate() {
            p.add(m, y[offsets[i] + j]);
        }
        p
    };

    let rhs = |s: f64, y: &[Complex]| -> Vec<Complex> {
        let w = weights(s);
        let (gamma, bcoef) = (y[1], y[2]);
        let mut dy = vec![Complex::default(); dim];
        dy[0] = -drift * w.w0;
        dy[1] = (gamma * (2.0 * kappa) + uiu * 0.5) * w.w0 - bcoef * bcoef * (0.5 * w.w2) - iurho * bcoef * w.w1;
        dy[2] = bcoef * ((kappa + w.m) * w.w0);

        let mut polys: Vec<Poly> = Vec::with_capacity(basis.len());
        for i in 0..basis.len() {
            polys.push(unpack(y, i));
        }
        for i in 0..basis.len() {
            let prev1 = if i == 0 { Poly::one() } else { polys[i - 1].clone() };
            let mut src = phi1(&prev1, gamma, iurho, &w);
            if i >= 1 {
                let prev2 = if i == 1 { Poly::one() } else { polys[i - 2].clone() };
                for (m, cval) in phi2(&prev2, gamma, &w).terms {
                    src.add(m, cval);
                }
            }
            let p = &polys[i];
            for (j, &(a, b)) in basis[i].iter().enumerate() {
                let (fa, fb) = (a as f64, b as f64);
                let mut d = p.coeff((a, b)) * ((kappa * fa + w.m * fb) * w.w0)
                    - p.coeff((a, b + 2)) * (0.5 * w.w2 * (fb + 2.0) * (fb + 1.0))
                    - src.coeff((a, b));
                if a >= 1 {
                    d -= iurho * p.coeff((a - 1, b + 1)) * ((fb + 1.0) * w.w1);
                }
                dy[offsets[i] + j] = d;
            }
        }
        dy
    };

    let s_t = tt.powf(1.0 / kf);
    let s_eval = t_eval.powf(1.0 / kf);
    let ode_spec = OdeSpec { max_step: spec.max_step.min(s_t / 8.0), ..*spec };
    let y0 = vec![Complex::default(); dim];
    let y = integrate_ode(rhs, s_t, s_eval, &y0, &ode_spec)?;

    let corrections = (0..basis.len()).map(|i| unpack(&y, i)).collect();
    Ok(AffineSolution { t: t_eval, a: y[0], gamma: y[1], b: y[2], corrections })
}
