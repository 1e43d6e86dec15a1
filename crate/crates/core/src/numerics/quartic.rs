//! Real roots of polynomials up to degree four.
//!
//! Quartics go through Ferrari's reduction with a complex Cardano step for the
//! resolvent cubic; every candidate is Newton-polished on the real line and
//! kept only if its residual passes the acceptance bound.

use num_complex::Complex64;

const ACCEPT: f64 = 1e-9;

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    // coeffs in descending order; returns (p, p')
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish(coeffs: &[f64], x0: f64) -> f64 {
    let mut x = x0;
    let mut best = x0;
    let mut best_res = horner(coeffs, x0).0.abs();
    for _ in 0..60 {
        let (p, dp) = horner(coeffs, x);
        if p == 0.0 {
            return x;
        }
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() {
            break;
        }
        let r = horner(coeffs, next).0.abs();
        if r < best_res {
            best_res = r;
            best = next;
        }
        if (next - x).abs() <= 1e-16 * next.abs().max(1.0) {
            break;
        }
        x = next;
    }
    best
}

fn quadratic_complex(b: Complex64, c: Complex64) -> [Complex64; 2] {
    // z² + b z + c = 0, cancellation-free form
    let disc = (b * b - c * 4.0).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = (b + disc * sign) * -0.5;
    if q.norm() == 0.0 {
        return [Complex64::default(); 2];
    }
    [q, c / q]
}

fn cubic_complex(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    // z³ + a z² + b z + c = 0
    let third = 1.0 / 3.0;
    let p = b - a * a * third;
    let q = a * a * a * (2.0 / 27.0) - a * b * third + c;
    let shift = a * -third;
    if p.norm() == 0.0 && q.norm() == 0.0 {
        return [shift; 3];
    }
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    let mut u3 = q * -0.5 + disc;
    let alt = q * -0.5 - disc;
    if alt.norm() > u3.norm() {
        u3 = alt;
    }
    let u = u3.powf(third);
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::default(); 3];
    let mut rot = Complex64::new(1.0, 0.0);
    for r in roots.iter_mut() {
        let uk = u * rot;
        let vk = if uk.norm() == 0.0 { Complex64::default() } else { -p / (uk * 3.0) };
        *r = uk + vk + shift;
        rot *= omega;
    }
    roots
}

fn quartic_complex(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 4] {
    // monic x⁴ + a x³ + b x² + c x + d, depressed via x = y - a/4
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let shift = -a / 4.0;
    let scale = 1.0 + p.abs() + q.abs() + r.abs();
    let mut ys = [Complex64::default(); 4];
    if q.abs() <= 1e-14 * scale {
        let w = quadratic_complex(Complex64::new(p, 0.0), Complex64::new(r, 0.0));
        let s0 = w[0].sqrt();
        let s1 = w[1].sqrt();
        ys = [s0, -s0, s1, -s1];
    } else {
        let ms = cubic_complex(
            Complex64::new(p, 0.0),
            Complex64::new(p * p / 4.0 - r, 0.0),
            Complex64::new(-q * q / 8.0, 0.0),
        );
        let m = ms.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).expect("three roots");
        let s = (m * 2.0).sqrt();
        let half_q_over_s = Complex64::new(q, 0.0) / (s * 2.0);
        let base = m + p / 2.0;
        let r1 = quadratic_complex(-s, base + half_q_over_s);
        let r2 = quadratic_complex(s, base - half_q_over_s);
        ys[..2].copy_from_slice(&r1);
        ys[2..].copy_from_slice(&r2);
    }
    ys.map(|y| y + shift)
}

/// Real roots of `c4 x⁴ + c3 x³ + c2 x² + c1 x + c0`, sorted ascending, with
/// coincident roots collapsed. Leading coefficients that vanish relative to
/// the others reduce the degree.
pub fn solve_quartic(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let all = [c4, c3, c2, c1, c0];
    let cmax = all.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if cmax == 0.0 || !cmax.is_finite() {
        return Vec::new();
    }
    let lead = all.iter().position(|c| c.abs() > 1e-14 * cmax).expect("some coefficient is nonzero");
    let coeffs: Vec<f64> = all[lead..].iter().map(|c| c / cmax).collect();
    let degree = coeffs.len() - 1;
    let norm: Vec<f64> = coeffs.iter().map(|c| c / coeffs[0]).collect();

    let candidates: Vec<Complex64> = match degree {
        0 => Vec::new(),
        1 => vec![Complex64::new(-norm[1], 0.0)],
        2 => quadratic_complex(Complex64::new(norm[1], 0.0), Complex64::new(norm[2], 0.0)).to_vec(),
        3 => cubic_complex(Complex64::new(norm[1], 0.0), Complex64::new(norm[2], 0.0), Complex64::new(norm[3], 0.0))
            .to_vec(),
        _ => quartic_complex(norm[1], norm[2], norm[3], norm[4]).to_vec(),
    };

    let bound = ACCEPT * coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<f64> = candidates
        .iter()
        .map(|z| polish(&coeffs, z.re))
        .filter(|x| x.is_finite() && horner(&coeffs, *x).0.abs() <= bound)
        .collect();
    roots.sort_by(f64::total_cmp);

    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        if let Some(&last) = merged.last() {
            let mid = 0.5 * (last + x);
            let close = (x - last).abs() <= 1e-12 * x.abs().max(1.0);
            if close || horner(&coeffs, mid).0.abs() <= bound {
                let best = if horner(&coeffs, x).0.abs() < horner(&coeffs, last).0.abs() { x } else { last };
                *merged.last_mut().expect("non-empty") = best;
                continue;
            }
        }
        merged.push(x);
    }
    merged
}
