//! Gauss rules on the reference interval `[-1, 1]` and the log-gamma function.
//!
//! Jacobi rules integrate `p(x) (1-x)^a (1+x)^b` exactly for polynomials `p`
//! of degree `<= 2k-1`. Nodes come from the Golub–Welsch eigenproblem and are
//! polished by Newton steps on the Jacobi recurrence; weights use the closed
//! form in terms of `P_k'` at the nodes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure_arg, Result};

pub const MAX_POINTS: usize = 64;

/// Nodes and positive weights of a Gauss-type rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `sum_i w_i f(x_i)` on the reference interval.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Integral over `[lo, hi]` with the reference weight transported by the
    /// affine map. For a Legendre rule this is the plain integral; for a
    /// Jacobi rule with exponents `(a, b)` the caller multiplies by
    /// `((hi-lo)/2)^(a+b)` to obtain `∫ (hi-s)^a (s-lo)^b f(s) ds`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self.apply(|x| f(mid + half * x))
    }

    /// Nodes and weights mapped to `[0, 1]`; weights sum to the weight
    /// integral rescaled by `2^-(1+a+b)`.
    pub fn unit_interval(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.iter().map(|(x, w)| (0.5 * (1.0 + x), 0.5 * w))
    }
}

type CacheKey = (usize, i64, i64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<QuadRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<QuadRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn quantize(v: f64) -> i64 {
    (v * 1e12).round() as i64
}

/// Gauss–Legendre rule with `k` points (unit weight).
pub fn gauss_legendre(k: usize) -> Result<Arc<QuadRule>> {
    gauss_jacobi(k, 0.0, 0.0)
}

/// Gauss–Jacobi rule with `k` points for the weight `(1-x)^a (1+x)^b`.
pub fn gauss_jacobi(k: usize, a: f64, b: f64) -> Result<Arc<QuadRule>> {
    ensure_arg!((1..=MAX_POINTS).contains(&k), "rule size {k} outside 1..={MAX_POINTS}");
    ensure_arg!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1 (a = {a}, b = {b})");
    let key = (k, quantize(a), quantize(b));
    if let Some(rule) = cache().lock().expect("quadrature cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build_jacobi(k, a, b));
    let mut guard = cache().lock().expect("quadrature cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(rule)))
}

fn build_jacobi(k: usize, a: f64, b: f64) -> QuadRule {
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(k, k);
    for n in 0..k {
        let nf = n as f64;
        let diag = if n == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        jac[(n, n)] = diag;
        if n + 1 < k {
            let m = nf + 1.0;
            let beta = if n == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            jac[(n, n + 1)] = beta.sqrt();
            jac[(n + 1, n)] = beta.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("NaN node"));

    // Newton polish on P_k^{(a,b)}.
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(k, a, b, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }

    let ln_const = ln_gamma_unchecked(k as f64 + a + 1.0) + ln_gamma_unchecked(k as f64 + b + 1.0)
        - ln_gamma_unchecked(k as f64 + ab + 1.0)
        - ln_gamma_unchecked(k as f64 + 1.0)
        + (ab + 1.0) * std::f64::consts::LN_2;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, dp) = jacobi_with_derivative(k, a, b, x);
            (ln_const - ((1.0 - x * x) * dp * dp).ln()).exp()
        })
        .collect();
    QuadRule { nodes, weights }
}

/// `P_n^{(a,b)}(x)` and its derivative from the three-term recurrence.
fn jacobi_with_derivative(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let ab = a + b;
    let mut p_prev = 1.0;
    let mut p = 0.5 * (a - b + (ab + 2.0) * x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let c = 2.0 * jf + ab;
        let a1 = 2.0 * jf * (jf + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (jf + a - 1.0) * (jf + b - 1.0) * c;
        let next = ((a2 + a3 * x) * p - a4 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let c = 2.0 * nf + ab;
    let dp = (nf * ((a - b) - c * x) * p + 2.0 * (nf + a) * (nf + b) * p_prev) / (c * (1.0 - x * x));
    (p, dp)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    ensure_arg!(x > 0.0 && x.is_finite(), "ln_gamma requires a positive finite argument, got {x}");
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `Γ(x)` for `x > 0`.
pub(crate) fn gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma_unchecked(x).exp()
}

/// `B(a, b)` for positive arguments.
pub(crate) fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)).exp()
}

/// Integral over `[lo, hi]` of an integrand that is analytic except at
/// `sing <= lo`. The interval is cut into pieces whose length never exceeds
/// their distance to `sing`, each integrated with `rule`. When `sing == lo`
/// the pieces shrink geometrically toward `lo` and the remainder below
/// `2^-60 (hi - lo)` is dropped, so the integrand must stay bounded there.
pub fn graded_integrate(
    rule: &QuadRule,
    lo: f64,
    hi: f64,
    sing: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    debug_assert!(sing <= lo && lo <= hi);
    let len = hi - lo;
    if len <= 0.0 {
        return 0.0;
    }
    let gap = lo - sing;
    let mut total = 0.0;
    if gap <= 1e-14 * len.max(lo.abs()) {
        let mut right = len;
        for _ in 0..60 {
            let left = 0.5 * right;
            total += rule.integrate(lo + left, lo + right, &mut f);
            right = left;
        }
        return total;
    }
    let mut a = lo;
    while a < hi {
        let b = (a + (a - sing)).min(hi);
        total += rule.integrate(a, b, &mut f);
        a = b;
    }
    total
}
