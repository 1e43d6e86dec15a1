//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands on finite intervals.
//!
//! Panels are bisected in order of decreasing error estimate, so integrable
//! power-law endpoint behavior (`t^{H-1/2}`-type) is resolved by repeated
//! subdivision toward the endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerances and subdivision budget for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 2000 }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self { abs_tol, rel_tol, max_subdivisions };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be > 0"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv1 = [Complex64::default(); 7];
    let mut fv2 = [Complex64::default(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += (f1 + f2) * WGK[j];
        res_abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            res_g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        res_asc += ((fv1[j] - mean).norm() + (fv2[j] - mean).norm()) * WGK[j];
    }
    let value = res_k * half;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite(format!("integrand is not finite on [{a}, {b}]")));
    }
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// Adaptive integral of `f` over `[a, b]` returning the estimate and its
/// error bound. `a > b` integrates in the reverse direction.
pub fn integrate_adaptive_estimate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadEstimate>
where
    F: FnMut(f64) -> Complex64,
{
    adaptive_core(f, a, b, spec).map(|(est, _)| est)
}

/// Final panel partition of an adaptive run over `[a, b]` with `a < b`,
/// sorted left to right. Reusing it with [`integrate_on_panels`] gives a
/// fixed rule that varies smoothly with parameters of the integrand.
pub fn adaptive_partition<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(f64) -> Complex64,
{
    if !(a < b) {
        return Err(Error::Domain(format!("partition needs a < b, got [{a}, {b}]")));
    }
    adaptive_core(f, a, b, spec).map(|(_, panels)| panels)
}

/// Kronrod nodes and weights on every panel.
pub fn panel_nodes(panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(15 * panels.len());
    for &(a, b) in panels {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        out.push((center, WGK[7] * half));
        for j in 0..7 {
            let dx = half * XGK[j];
            out.push((center - dx, WGK[j] * half));
            out.push((center + dx, WGK[j] * half));
        }
    }
    out
}

/// Apply the 15-point Kronrod rule on a fixed set of panels.
pub fn integrate_on_panels<F>(mut f: F, panels: &[(f64, f64)]) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    panel_nodes(panels).into_iter().fold(Complex64::default(), |acc, (x, w)| acc + f(x) * w)
}

fn adaptive_core<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<(QuadEstimate, Vec<(f64, f64)>)>
where
    F: FnMut(f64) -> Complex64,
{
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        let est = QuadEstimate { value: Complex64::default(), error: 0.0, subdivisions: 0 };
        return Ok((est, Vec::new()));
    }
    if a > b {
        let (est, panels) = adaptive_core(f, b, a, spec)?;
        let est = QuadEstimate { value: -est.value, ..est };
        return Ok((est, panels));
    }

    let (value, error) = gk15(&mut f, a, b)?;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut subdivisions = 1;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_err <= tol {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate_re: total.re,
                estimate_im: total.im,
                error: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::QuadratureNonConvergence {
                estimate_re: total.re,
                estimate_im: total.im,
                error: total_err,
                subdivisions,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }

    // re-sum to shed accumulated cancellation from the running updates
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::default(), |acc, p| acc + p.value);
    let error = panels.iter().map(|p| p.error).sum();
    let est = QuadEstimate { value, error, subdivisions };
    Ok((est, panels.iter().map(|p| (p.a, p.b)).collect()))
}

/// Adaptive integral of a complex-valued `f` over `[a, b]`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    integrate_adaptive_estimate(f, a, b, spec).map(|e| e.value)
}

/// Real-valued convenience wrapper around [`integrate_adaptive`].
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_adaptive(|x| Complex64::new(f(x), 0.0), a, b, spec).map(|z| z.re)
}
