//! Riemann–Liouville integrals and derivatives of slab-wise polynomials, and
//! the coupling integrals `∫_{I_j} ψ_a D^{2γ₀}[Φ_b' 𝟙_{I_i}]` that make up the
//! temporal part of the discrete fractional operator.
//!
//! Everything is reduced to the reference moment
//! `K^μ_k(x) = ∫_0^{min(1,x)} (x - η)^{-μ} η^k dη`, which is a complete Beta
//! value for `x <= 1`, a difference of two continued Beta values just above
//! 1, and a convergent series in `1/x` beyond.

use crate::error::{ensure_arg, Result};
use crate::quadrature::{beta, gamma, gauss_legendre, graded_integrate, QuadRule};
use crate::temporal_basis::{shifted_legendre_monomials, PiecewisePolynomial, MAX_TRIAL_DEGREE};
use crate::timegrid::TimeGrid;

/// Below this argument the series in `1/x` converges too slowly.
const NEAR_SWITCH: f64 = 1.05;
const MAX_SERIES_TERMS: usize = 4000;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `K^μ_k(x)`. `μ` may be any real that is not a positive integer; `x <= 1`
/// additionally requires `μ < 1`.
pub(crate) fn unit_moment(mu: f64, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    if x <= 1.0 {
        return beta(kf + 1.0, 1.0 - mu) * x.powf(kf + 1.0 - mu);
    }
    if x < NEAR_SWITCH {
        // ∫_0^x minus ∫_1^x, both as Beta values continued in μ
        let z = x - 1.0;
        let b = 1.0 - mu;
        let tail: f64 = (0..=k)
            .map(|l| binomial(k, l) * z.powi(l as i32) * signed_beta(l as f64 + 1.0, b))
            .sum();
        return signed_beta(kf + 1.0, b) * x.powf(kf + 1.0 - mu) - z.powf(b) * tail;
    }
    // positive series in 1/x
    let inv = 1.0 / x;
    let mut coef = 1.0;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        let term = coef * pow / (kf + nf + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && n > 2 {
            break;
        }
        coef *= (mu + nf) / (nf + 1.0);
        pow *= inv;
    }
    x.powf(-mu) * sum
}

/// `Γ(x)` for real `x` that is not a nonpositive integer.
fn signed_gamma(x: f64) -> f64 {
    if x > 0.0 {
        gamma(x)
    } else {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    }
}

/// `B(a, b)` with `a > 0` and `a + b > 0`, continued to negative `b`.
fn signed_beta(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        beta(a, b)
    } else {
        gamma(a) * signed_gamma(b) / gamma(a + b)
    }
}

/// `∫_a^{min(b,t)} (t - s)^{-μ} (s - a)^k ds` for `a < b <= t`.
pub fn kernel_moment(mu: f64, k: usize, a: f64, b: f64, t: f64) -> Result<f64> {
    ensure_arg!(mu < 1.0 && mu.is_finite(), "kernel exponent must be < 1, got {mu}");
    ensure_arg!(a < b, "kernel moment needs a < b (a = {a}, b = {b})");
    ensure_arg!(t >= b, "kernel moment needs t >= b (t = {t}, b = {b})");
    let len = b - a;
    Ok(len.powf(k as f64 + 1.0 - mu) * unit_moment(mu, k, (t - a) / len))
}

/// Slab data in monomial form on arbitrary breakpoints.
#[derive(Debug, Clone)]
struct Pieces {
    breaks: Vec<f64>,
    mono: Vec<Vec<f64>>,
}

impl Pieces {
    fn from_pw(v: &PiecewisePolynomial) -> Self {
        let grid = v.grid();
        Self {
            breaks: grid.breakpoints().to_vec(),
            mono: (1..=grid.slabs()).map(|j| v.slab_monomials(j)).collect(),
        }
    }

    /// `w(s) = v(T - s)` on the mirrored breakpoints.
    fn reflected(&self) -> Self {
        let t_end = *self.breaks.last().expect("empty grid");
        let breaks = self.breaks.iter().rev().map(|&x| t_end - x).collect();
        let mono = self
            .mono
            .iter()
            .rev()
            .map(|c| {
                let mut out = vec![0.0; c.len()];
                for (p, cp) in c.iter().enumerate() {
                    for (q, slot) in out.iter_mut().enumerate().take(p + 1) {
                        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                        *slot += cp * binomial(p, q) * sign;
                    }
                }
                out
            })
            .collect();
        Self { breaks, mono }
    }

    fn slabs(&self) -> usize {
        self.mono.len()
    }

    fn integral_at(&self, alpha: f64, t: f64) -> f64 {
        let mu = 1.0 - alpha;
        let mut total = 0.0;
        for i in 0..self.slabs() {
            let (lo, hi) = (self.breaks[i], self.breaks[i + 1]);
            if lo >= t {
                break;
            }
            let tau = hi - lo;
            let x = (t - lo) / tau;
            let s: f64 = self.mono[i].iter().enumerate().map(|(p, c)| c * unit_moment(mu, p, x)).sum();
            total += tau.powf(alpha) * s;
        }
        total / gamma(alpha)
    }

    fn derivative_at(&self, alpha: f64, t: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.slabs() {
            let (lo, hi) = (self.breaks[i], self.breaks[i + 1]);
            if lo >= t {
                break;
            }
            let tau = hi - lo;
            let x = (t - lo) / tau;
            let s: f64 = if x < 1.0 {
                self.mono[i]
                    .iter()
                    .enumerate()
                    .map(|(p, c)| {
                        let pf = p as f64;
                        c * gamma(pf + 1.0) / gamma(pf + 1.0 - alpha) * x.powf(pf - alpha)
                    })
                    .sum::<f64>()
                    * gamma(1.0 - alpha)
            } else {
                -alpha
                    * self.mono[i]
                        .iter()
                        .enumerate()
                        .map(|(p, c)| c * unit_moment(1.0 + alpha, p, x))
                        .sum::<f64>()
            };
            total += tau.powf(-alpha) * s;
        }
        total / gamma(1.0 - alpha)
    }
}

/// `(I^α_{0+} v)(t)` for a slab-wise polynomial `v`.
pub fn rl_integral_pw(alpha: f64, v: &PiecewisePolynomial, t: f64) -> Result<f64> {
    ensure_arg!(alpha > 0.0 && alpha <= 3.0, "integral order must lie in (0, 3], got {alpha}");
    let grid = v.grid();
    ensure_arg!(t > 0.0 && t <= grid.final_time() * (1.0 + 1e-15), "t = {t} outside (0, T]");
    Ok(Pieces::from_pw(v).integral_at(alpha, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `(D^α_{0+} v)(t)` or `(D^α_{T-} v)(t)` for `α ∈ (0,1)` at a point
/// strictly inside a slab.
pub fn rl_derivative_pw(alpha: f64, v: &PiecewisePolynomial, t: f64, side: Side) -> Result<f64> {
    ensure_arg!(alpha > 0.0 && alpha < 1.0, "derivative order must lie in (0, 1), got {alpha}");
    let grid = v.grid();
    let t_end = grid.final_time();
    ensure_arg!(t > 0.0 && t < t_end, "t = {t} outside (0, T)");
    ensure_arg!(!grid.is_breakpoint(t), "t = {t} is a breakpoint");
    let pieces = Pieces::from_pw(v);
    Ok(match side {
        Side::Left => pieces.derivative_at(alpha, t),
        Side::Right => pieces.reflected().derivative_at(alpha, t_end - t),
    })
}

/// Temporal coupling of trial modes on slab `src` with tests on slab `tgt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracCouplingBlock {
    pub gamma0: f64,
    pub src: usize,
    pub tgt: usize,
    m: usize,
    entries: Vec<f64>,
}

impl FracCouplingBlock {
    pub fn degree(&self) -> usize {
        self.m
    }

    /// `F[a][b]` with `a ∈ 0..m`, `b ∈ 1..=m`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.m + (b - 1)]
    }

    /// Row-major `m × m` entries, column `b-1` for trial mode `b`.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0.0)
    }
}

/// Precomputed polynomial tables for coupling integrals up to degree `m`.
#[derive(Debug, Clone)]
pub(crate) struct CouplingKernel {
    mu: f64,
    m: usize,
    trial_deriv: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    test_deriv: Vec<Vec<f64>>,
    rule: std::sync::Arc<QuadRule>,
}

impl CouplingKernel {
    pub(crate) fn new(mu: f64, m: usize) -> Result<Self> {
        ensure_arg!(mu > 0.0 && mu < 1.0, "fractional order 2γ₀ must lie in (0, 1), got {mu}");
        ensure_arg!((1..=MAX_TRIAL_DEGREE).contains(&m), "temporal degree {m} outside 1..={MAX_TRIAL_DEGREE}");
        let test: Vec<Vec<f64>> = (0..m).map(shifted_legendre_monomials).collect();
        let test_deriv = test
            .iter()
            .map(|c| c.iter().enumerate().skip(1).map(|(p, v)| p as f64 * v).collect())
            .collect();
        Ok(Self {
            mu,
            m,
            trial_deriv: (0..m).map(shifted_legendre_monomials).collect(),
            test,
            test_deriv,
            rule: gauss_legendre(16)?,
        })
    }

    /// Own-slab block; `τ^{-μ}` times a fixed matrix.
    pub(crate) fn diagonal(&self, tau: f64) -> Vec<f64> {
        let mu = self.mu;
        let scale = tau.powf(-mu);
        let mut out = vec![0.0; self.m * self.m];
        for a in 0..self.m {
            for b in 0..self.m {
                let mut s = 0.0;
                for (k, l) in self.trial_deriv[b].iter().enumerate() {
                    let kf = k as f64;
                    let inner: f64 = self.test[a]
                        .iter()
                        .enumerate()
                        .map(|(p, q)| q / (p as f64 + kf + 1.0 - mu))
                        .sum();
                    s += l * gamma(kf + 1.0) / gamma(kf + 1.0 - mu) * inner;
                }
                out[a * self.m + b] = scale * s;
            }
        }
        out
    }

    /// `I^{1-μ}[Φ_b' 𝟙_{src}](t)` for `t` right of the source slab's left end.
    fn history_potential(&self, b: usize, src_lo: f64, src_tau: f64, t: f64) -> f64 {
        let x = (t - src_lo) / src_tau;
        let s: f64 = self.trial_deriv[b]
            .iter()
            .enumerate()
            .map(|(k, l)| l * unit_moment(self.mu, k, x))
            .sum();
        src_tau.powf(-self.mu) * s / gamma(1.0 - self.mu)
    }

    /// Block for a target slab strictly later than the source slab, by
    /// integrating the derivative off the test function.
    pub(crate) fn off_diagonal(&self, src_lo: f64, src_tau: f64, tgt_lo: f64, tgt_tau: f64) -> Vec<f64> {
        let m = self.m;
        let src_hi = src_lo + src_tau;
        let sing = ((src_hi - tgt_lo) / tgt_tau).min(0.0);
        let mut out = vec![0.0; m * m];
        for b in 0..m {
            let h_right = self.history_potential(b, src_lo, src_tau, tgt_lo + tgt_tau);
            let h_left = self.history_potential(b, src_lo, src_tau, tgt_lo);
            let interior: Vec<f64> = if m > 1 {
                // ∫_0^1 θ^p H(t(θ)) dθ for p = 0..m-2
                let mut moments = vec![0.0; m - 1];
                for (p, slot) in moments.iter_mut().enumerate() {
                    *slot = graded_integrate(&self.rule, 0.0, 1.0, sing, |th| {
                        th.powi(p as i32) * self.history_potential(b, src_lo, src_tau, tgt_lo + tgt_tau * th)
                    });
                }
                moments
            } else {
                Vec::new()
            };
            for a in 0..m {
                let left_sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                let correction: f64 = self.test_deriv[a].iter().zip(&interior).map(|(c, mom)| c * mom).sum();
                out[a * m + b] = h_right - left_sign * h_left - correction;
            }
        }
        out
    }
}

/// Coupling block `F^{i→j}` for `γ₀ = (γ-1)/2`.
pub fn frac_coupling_block(gamma0: f64, grid: &TimeGrid, i: usize, j: usize, m: usize) -> Result<FracCouplingBlock> {
    ensure_arg!(gamma0 > 0.0 && gamma0 < 0.5, "γ₀ must lie in (0, 1/2), got {gamma0}");
    let slabs = grid.slabs();
    ensure_arg!((1..=slabs).contains(&i) && (1..=slabs).contains(&j), "slab indices ({i}, {j}) outside 1..={slabs}");
    let kernel = CouplingKernel::new(2.0 * gamma0, m)?;
    let entries = if j < i {
        vec![0.0; m * m]
    } else if j == i {
        kernel.diagonal(grid.tau(j))
    } else {
        kernel.off_diagonal(grid.left(i), grid.tau(i), grid.left(j), grid.tau(j))
    };
    Ok(FracCouplingBlock { gamma0, src: i, tgt: j, m, entries })
}

/// `∫_{lo}^{lo+τ} ψ_a(t) (t - anchor)^e dt` for `a < m`, `anchor <= lo`, `e > -1`.
pub(crate) fn power_moments(lo: f64, tau: f64, anchor: f64, e: f64, m: usize) -> Vec<f64> {
    let tests: Vec<Vec<f64>> = (0..m).map(shifted_legendre_monomials).collect();
    let gap = lo - anchor;
    if gap <= 1e-14 * tau {
        let scale = tau.powf(e + 1.0);
        return tests
            .iter()
            .map(|q| scale * q.iter().enumerate().map(|(p, c)| c / (p as f64 + e + 1.0)).sum::<f64>())
            .collect();
    }
    let rule = gauss_legendre(16).expect("static rule size");
    let delta = gap / tau;
    tests
        .iter()
        .map(|q| {
            tau.powf(e + 1.0)
                * graded_integrate(&rule, 0.0, 1.0, -delta, |th| {
                    let psi: f64 = q.iter().rev().fold(0.0, |acc, c| acc * th + c);
                    psi * (delta + th).powf(e)
                })
        })
        .collect()
}

/// `w[a] = ∫_{I_j} ψ_a(t) (t - t_*)^{1-γ} / Γ(2-γ) dt` for `t_* <= t_{j-1}`.
pub fn omega_load(gamma_order: f64, grid: &TimeGrid, j: usize, anchor: f64, m: usize) -> Result<Vec<f64>> {
    ensure_arg!(gamma_order > 1.0 && gamma_order < 2.0, "γ must lie in (1, 2), got {gamma_order}");
    ensure_arg!((1..=grid.slabs()).contains(&j), "slab {j} outside 1..={}", grid.slabs());
    ensure_arg!(m >= 1, "temporal degree must be positive");
    let lo = grid.left(j);
    ensure_arg!(
        anchor >= 0.0 && anchor <= lo + 1e-14 * grid.final_time(),
        "anchor {anchor} must lie in [0, t_(j-1) = {lo}]"
    );
    let scale = 1.0 / gamma(2.0 - gamma_order);
    Ok(power_moments(lo, grid.tau(j), anchor.min(lo), 1.0 - gamma_order, m)
        .into_iter()
        .map(|w| w * scale)
        .collect())
}
