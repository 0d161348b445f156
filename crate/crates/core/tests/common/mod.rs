//! Oracles shared by the integration tests. Nothing here calls into the
//! quadrature code of the crate.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Double-exponential quadrature of `f` over `(a, b)`. The integrand gets
/// the point together with its distances to both ends, so kernels singular
/// at an endpoint can be evaluated without cancellation.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    tanh_sinh_steps(a, b, 64, f)
}

/// `tanh_sinh` with `per_unit` nodes per unit of the transformed variable.
/// Coarse settings are enough for smooth integrands.
pub fn tanh_sinh_steps(a: f64, b: f64, per_unit: i32, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let h = 1.0 / per_unit as f64;
    let mut sum = 0.0;
    for k in -(per_unit * 25 / 4)..=per_unit * 25 / 4 {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let c = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (c * c);
        let da = half * 2.0 / (1.0 + (-2.0 * u).exp());
        let db = half * 2.0 / (1.0 + (2.0 * u).exp());
        // the dropped end pieces are below 1e-16 for singularities up to
        // order 0.92, and nested singular kernels stay finite
        if da < 1e-200 || db < 1e-200 || w == 0.0 || !w.is_finite() {
            continue;
        }
        let x = if da < db { a + da } else { b - db };
        sum += w * f(x, da, db);
    }
    sum * half * h
}

/// `tanh_sinh` applied between consecutive `cuts`.
pub fn split_integral(cuts: &[f64], f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| tanh_sinh(w[0], w[1], &f)).sum()
}

/// `(1/Γ(α)) ∫_0^t (t−s)^{α−1} v(s) ds`, split at the `cuts` below `t`.
pub fn brute_rl_integral(alpha: f64, cuts: &[f64], t: f64, v: impl Fn(f64) -> f64) -> f64 {
    let mut pts = vec![0.0];
    pts.extend(cuts.iter().cloned().filter(|&c| c > 0.0 && c < t));
    pts.push(t);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let last = w[1] == t;
        total += tanh_sinh(w[0], w[1], |s, _, db| {
            let dist = if last { db } else { t - s };
            dist.powf(alpha - 1.0) * v(s)
        });
    }
    total / gamma(alpha)
}

/// Truncated series `Σ z^k / Γ(αk + 1)`.
pub fn mittag_leffler(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..200 {
        let term = z.powi(k) / gamma(alpha * k as f64 + 1.0);
        sum += term;
        if k > 10 && term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Dense LU solve of a row-major square system.
pub fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, a);
    let x = m.lu().solve(&DVector::from_column_slice(b)).expect("nonsingular");
    x.iter().cloned().collect()
}

/// `∫ |ξ|^{2α} |v̂(ξ)|² dξ` with the unitary Fourier transform, from samples
/// of `v` (supported in `[0, T]`) zero-extended to `(−T, (window − 1)T)`.
/// Each frequency sample stands for its cell of width `2π / (window T)`,
/// and the weight `|ξ|^{2α}` is integrated exactly over the cell at zero.
pub fn fourier_seminorm_sq(alpha: f64, final_time: f64, window: usize, points: usize, v: impl Fn(f64) -> f64) -> f64 {
    let len = window as f64 * final_time;
    let dx = len / points as f64;
    let mut data: Vec<Complex<f64>> = (0..points)
        .map(|k| {
            let x = -final_time + k as f64 * dx;
            let value = if x > 0.0 && x <= final_time { v(x) } else { 0.0 };
            Complex::new(value, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(points).process(&mut data);
    let dxi = 2.0 * PI / len;
    let mut total = 0.0;
    for (k, c) in data.iter().enumerate() {
        let freq = if k <= points / 2 { k as f64 } else { k as f64 - points as f64 };
        let hat_sq = dx * dx / (2.0 * PI) * c.norm_sqr();
        let weight = if freq == 0.0 {
            2.0 * (0.5 * dxi).powf(1.0 + 2.0 * alpha) / (1.0 + 2.0 * alpha)
        } else {
            (freq * dxi).abs().powf(2.0 * alpha) * dxi
        };
        total += weight * hat_sq;
    }
    total
}

/// `|a − b| / |b|`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
