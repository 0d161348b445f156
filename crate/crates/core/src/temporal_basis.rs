//! Temporal bases on the reference slab `θ ∈ [0, 1]`.
//!
//! Test functions are shifted Legendre polynomials `L̂_a(θ) = P_a(2θ - 1)`.
//! Trial modes are their integrals, `Φ̂_b(θ) = ∫_0^θ L̂_{b-1}`, so every mode
//! vanishes at the left end of its slab and continuity across slabs is
//! carried by the nodal value alone.

use std::sync::Arc;

use crate::error::{ensure_arg, Result};
use crate::quadrature::gauss_legendre;
use crate::timegrid::TimeGrid;

/// Largest supported temporal trial degree.
pub const MAX_TRIAL_DEGREE: usize = 3;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomial coefficients of `L̂_n` in powers of `θ`.
pub fn shifted_legendre_monomials(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(n, k) * binomial(n + k, k)
        })
        .collect()
}

/// `(L̂_n(θ), L̂_n'(θ))`.
pub fn shifted_legendre(n: usize, theta: f64) -> (f64, f64) {
    let x = 2.0 * theta - 1.0;
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, 2.0 * d)
}

/// Legendre polynomial `P_n(x)` on `[-1, 1]`.
fn legendre(n: usize, x: f64) -> f64 {
    shifted_legendre(n, 0.5 * (x + 1.0)).0
}

/// Trial modes `Φ̂_1 .. Φ̂_m` spanning (with the constant) `P_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialBasis {
    m: usize,
}

impl TrialBasis {
    pub fn new(m: usize) -> Result<Self> {
        ensure_arg!((1..=MAX_TRIAL_DEGREE).contains(&m), "temporal degree {m} outside 1..={MAX_TRIAL_DEGREE}");
        Ok(Self { m })
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    /// `Φ̂_b(θ)` (`derivative == 0`) or `Φ̂_b'(θ)` (`derivative == 1`).
    pub fn eval(&self, b: usize, theta: f64, derivative: u8) -> Result<f64> {
        ensure_arg!((1..=self.m).contains(&b), "trial mode {b} outside 1..={}", self.m);
        match derivative {
            0 => Ok(trial_value(b, theta)),
            1 => Ok(shifted_legendre(b - 1, theta).0),
            d => Err(crate::Error::InvalidArgument(format!("derivative order {d} not supported"))),
        }
    }

    /// Monomial coefficients of `Φ̂_b` in `θ`.
    pub fn monomials(&self, b: usize) -> Vec<f64> {
        trial_monomials(b)
    }
}

pub(crate) fn trial_value(b: usize, theta: f64) -> f64 {
    if b == 1 {
        return theta;
    }
    let x = 2.0 * theta - 1.0;
    (legendre(b, x) - legendre(b - 2, x)) / (2.0 * (2 * b - 1) as f64)
}

pub(crate) fn trial_monomials(b: usize) -> Vec<f64> {
    let deriv = shifted_legendre_monomials(b - 1);
    let mut out = vec![0.0; b + 1];
    for (k, c) in deriv.iter().enumerate() {
        out[k + 1] = c / (k + 1) as f64;
    }
    out
}

/// Discontinuous test functions `ψ̂_0 .. ψ̂_{m-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestBasis {
    m: usize,
}

impl TestBasis {
    pub fn new(m: usize) -> Result<Self> {
        ensure_arg!((1..=MAX_TRIAL_DEGREE).contains(&m), "temporal degree {m} outside 1..={MAX_TRIAL_DEGREE}");
        Ok(Self { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, a: usize, theta: f64) -> Result<f64> {
        ensure_arg!(a < self.m, "test mode {a} outside 0..{}", self.m);
        Ok(shifted_legendre(a, theta).0)
    }
}

/// Convert monomial coefficients in `θ` to shifted-Legendre modal ones.
pub fn monomials_to_legendre(mono: &[f64]) -> Vec<f64> {
    let d = mono.len();
    let mut rest = mono.to_vec();
    let mut out = vec![0.0; d];
    for n in (0..d).rev() {
        let basis = shifted_legendre_monomials(n);
        let c = rest[n] / basis[n];
        out[n] = c;
        for (k, b) in basis.iter().enumerate() {
            rest[k] -= c * b;
        }
    }
    out
}

/// Convert shifted-Legendre modal coefficients to monomials in `θ`.
pub fn legendre_to_monomials(modal: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; modal.len()];
    for (n, c) in modal.iter().enumerate() {
        for (k, b) in shifted_legendre_monomials(n).iter().enumerate() {
            out[k] += c * b;
        }
    }
    out
}

/// Slab-wise polynomial of fixed degree over a time grid, stored as
/// shifted-Legendre coefficients in the local coordinate of each slab.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    grid: Arc<TimeGrid>,
    degree: usize,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(grid: Arc<TimeGrid>, degree: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        ensure_arg!(coeffs.len() == grid.slabs(), "expected {} slabs of coefficients, got {}", grid.slabs(), coeffs.len());
        ensure_arg!(
            coeffs.iter().all(|c| c.len() == degree + 1),
            "every slab needs {} coefficients",
            degree + 1
        );
        Ok(Self { grid, degree, coeffs })
    }

    /// Build from per-slab monomial coefficients in the local `θ`.
    pub fn from_monomials(grid: Arc<TimeGrid>, degree: usize, mono: Vec<Vec<f64>>) -> Result<Self> {
        let coeffs = mono
            .into_iter()
            .map(|mut c| {
                c.resize(degree + 1, 0.0);
                monomials_to_legendre(&c)
            })
            .collect();
        Self::new(grid, degree, coeffs)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Modal coefficients of slab `j` (1-based).
    pub fn slab_coeffs(&self, j: usize) -> &[f64] {
        &self.coeffs[j - 1]
    }

    /// Monomial coefficients in powers of the local coordinate of slab `j`.
    pub fn slab_monomials(&self, j: usize) -> Vec<f64> {
        legendre_to_monomials(&self.coeffs[j - 1])
    }

    pub fn eval_local(&self, j: usize, theta: f64) -> f64 {
        self.coeffs[j - 1]
            .iter()
            .enumerate()
            .map(|(a, c)| c * shifted_legendre(a, theta).0)
            .sum()
    }

    /// Value at `t ∈ (0, T]`; at a breakpoint the left slab is used.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let j = self
            .grid
            .slab_of(t)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("t = {t} outside (0, T]")))?;
        let theta = (t - self.grid.left(j)) / self.grid.tau(j);
        Ok(self.eval_local(j, theta))
    }
}

/// Slab-wise interpolant of degree `m-1`: matches `v(t_j^-)` at each right
/// endpoint and is `L²(I_j)`-orthogonal to `P_{m-2}` against `v`.
pub fn interpolate_ptau(
    grid: Arc<TimeGrid>,
    m: usize,
    v: impl Fn(f64) -> f64,
    v_at_breakpoints: &[f64],
) -> Result<PiecewisePolynomial> {
    ensure_arg!(m >= 1, "temporal degree must be positive");
    ensure_arg!(
        v_at_breakpoints.len() == grid.slabs(),
        "need one right-endpoint value per slab ({}), got {}",
        grid.slabs(),
        v_at_breakpoints.len()
    );
    let rule = gauss_legendre(24)?;
    let coeffs = (1..=grid.slabs())
        .map(|j| {
            let (lo, tau) = (grid.left(j), grid.tau(j));
            let mut c = vec![0.0; m];
            for (a, slot) in c.iter_mut().enumerate().take(m - 1) {
                let moment: f64 = rule
                    .unit_interval()
                    .map(|(th, w)| w * v(lo + tau * th) * shifted_legendre(a, th).0)
                    .sum();
                *slot = (2 * a + 1) as f64 * moment;
            }
            let head: f64 = c[..m - 1].iter().sum();
            c[m - 1] = v_at_breakpoints[j - 1] - head;
            c
        })
        .collect();
    PiecewisePolynomial::new(grid, m - 1, coeffs)
}
