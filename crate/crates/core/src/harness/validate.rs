//! Self-checks run by `fracwave validate`.

use std::sync::Arc;

use super::{compute_errors_separable, Discretization, ErrorReport};
use crate::error::{ensure_arg, Result};
use crate::fracops::{frac_coupling_block, rl_derivative_pw, rl_integral_pw, Side};
use crate::problems::{grad_phi, phi, scalar_ode_reference};
use crate::quadrature::{gamma, gauss_jacobi, gauss_legendre};
use crate::stepper::{march, march_scalar, Forcing, MarchConfig, ScalarConfig, TimeProfile};
use crate::temporal_basis::PiecewisePolynomial;
use crate::timegrid::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("semigroup", semigroup()),
        check("causality", causality()),
        check("block scaling", block_scaling()),
        check("coercive pairing", coercive_pairing()),
        check("reproduction u=t*phi", reproduction_check(1)),
        check("reproduction u=t^2*phi", reproduction_check(2)),
        check("scalar reference", scalar_agreement()),
    ]
}

/// `I^a I^b v = I^{a+b} v` for a quadratic on one slab. The inner integral
/// is `s^b` times a polynomial, so Gauss–Jacobi evaluates the outer one
/// exactly.
fn semigroup() -> Result<(bool, String)> {
    let grid = Arc::new(TimeGrid::uniform(1, 1.0)?);
    let v = PiecewisePolynomial::from_monomials(grid, 2, vec![vec![1.0, 1.0, -1.0]])?;
    let (a, b, t) = (0.3, 0.45, 0.8);
    let rule = gauss_jacobi(8, a - 1.0, b)?;
    let mut lhs = 0.0;
    for (x, w) in rule.iter() {
        let s = 0.5 * t * (1.0 + x);
        lhs += w * rl_integral_pw(b, &v, s)? / s.powf(b);
    }
    lhs *= (0.5 * t).powf(a + b) / gamma(a);
    let rhs = rl_integral_pw(a + b, &v, t)?;
    let err = (lhs - rhs).abs();
    Ok((err < 1e-9, format!("|difference| = {err:.2e}")))
}

fn causality() -> Result<(bool, String)> {
    let grid = TimeGrid::graded(6, 2.0, 1.0)?;
    let mut all_zero = true;
    for m in 1..=3 {
        for (i, j) in [(2, 1), (5, 3), (6, 1)] {
            all_zero &= frac_coupling_block(0.25, &grid, i, j, m)?.is_zero();
        }
    }
    Ok((all_zero, "blocks with target before source".into()))
}

/// Doubling the final time of a uniform grid scales every block by `2^{-2γ₀}`.
fn block_scaling() -> Result<(bool, String)> {
    let gamma0 = 0.3;
    let (g1, g2) = (TimeGrid::uniform(5, 1.0)?, TimeGrid::uniform(5, 2.0)?);
    let mut worst: f64 = 0.0;
    for (i, j) in [(1, 1), (1, 2), (2, 5)] {
        let b1 = frac_coupling_block(gamma0, &g1, i, j, 2)?;
        let b2 = frac_coupling_block(gamma0, &g2, i, j, 2)?;
        for (x, y) in b1.entries().iter().zip(b2.entries()) {
            if x.abs() > 1e-12 {
                let exponent = (y / x).ln() / 2f64.ln();
                worst = worst.max((exponent + 2.0 * gamma0).abs());
            }
        }
    }
    Ok((worst < 1e-10, format!("max exponent deviation {worst:.2e}")))
}

/// Levels of geometric refinement toward each slab end. Deeper levels would
/// place nodes within the breakpoint tolerance of the grid.
const PAIRING_LEVELS: usize = 36;

/// `∫_0^T D^α_{0+} v · D^α_{T−} v dt` by quadrature refined geometrically
/// toward both ends of every slab.
pub fn coercive_pairing_value(alpha: f64, v: &PiecewisePolynomial) -> Result<f64> {
    ensure_arg!(alpha > 0.0 && alpha < 0.5, "pairing order must lie in (0, 1/2)");
    let grid = v.grid();
    let rule = gauss_legendre(12)?;
    let mut total = 0.0;
    for j in 1..=grid.slabs() {
        let (lo, hi) = (grid.left(j), grid.right(j));
        let half = 0.5 * (hi - lo);
        let mut right = half;
        for _ in 0..PAIRING_LEVELS {
            let left = 0.5 * right;
            for (x, w) in rule.iter() {
                let s = left + (right - left) * 0.5 * (1.0 + x);
                let wt = w * 0.5 * (right - left);
                for t in [lo + s, hi - s] {
                    let l = rl_derivative_pw(alpha, v, t, Side::Left)?;
                    let r = rl_derivative_pw(alpha, v, t, Side::Right)?;
                    total += wt * l * r;
                }
            }
            right = left;
        }
    }
    Ok(total)
}

fn coercive_pairing() -> Result<(bool, String)> {
    let grid = Arc::new(TimeGrid::uniform(3, 1.0)?);
    let v = PiecewisePolynomial::from_monomials(
        grid,
        2,
        vec![vec![0.0, 1.0, 2.0], vec![0.2, -0.5, 0.3], vec![-0.1, 0.4, 0.0]],
    )?;
    let mut detail = Vec::new();
    let mut ok = true;
    for alpha in [0.1, 0.25, 0.4] {
        let p = coercive_pairing_value(alpha, &v)?;
        ok &= p > 0.0;
        detail.push(format!("α={alpha}: {p:.4e}"));
    }
    Ok((ok, detail.join(", ")))
}

/// Marches `u = t^power φ` with `φ` in the `n = 4` space on a coarse mesh
/// and returns the errors, which vanish up to solver tolerance.
pub fn polynomial_reproduction(gamma_order: f64, m: usize, power: u32, grid: TimeGrid) -> Result<ErrorReport> {
    ensure_arg!(power == 1 || power == 2, "power must be 1 or 2");
    ensure_arg!(power as usize <= m, "t^{power} is not in the trial space of degree {m}");
    let disc = Discretization::new(2, 4)?;
    let space = &disc.space;
    let ops = &disc.operators;
    let phi_h = space.interpolate(phi);
    let a_phi = ops.stiffness.mul(&phi_h);
    let m_phi = ops.mass.mul(&phi_h);
    let zero = vec![0.0; space.dofs()];
    let (u1, forcing) = if power == 1 {
        (phi_h.clone(), Forcing::none().with_term(TimeProfile::power(1.0, 1.0)?, a_phi))
    } else {
        let coef = 2.0 / gamma(3.0 - gamma_order);
        let forcing = Forcing::none()
            .with_term(TimeProfile::power(coef, 2.0 - gamma_order)?, m_phi)
            .with_term(TimeProfile::power(1.0, 2.0)?, a_phi);
        (zero.clone(), forcing)
    };
    let cfg =
        MarchConfig::field(gamma_order, m, Arc::new(grid), space, ops.clone(), zero, u1, forcing, 1e-13);
    let traj = march(&cfg)?;
    compute_errors_separable(&traj, &disc, power as f64, phi, grad_phi, 1e-13)
}

fn reproduction_check(power: u32) -> Result<(bool, String)> {
    let grid = TimeGrid::graded(8, 1.5, 1.0)?;
    let r = polynomial_reproduction(1.5, 2, power, grid)?;
    Ok((r.e1 <= 1e-8 && r.e2 <= 1e-8, format!("E1 = {:.2e}, E2 = {:.2e}", r.e1, r.e2)))
}

fn scalar_agreement() -> Result<(bool, String)> {
    let cfg = ScalarConfig {
        gamma: 1.5,
        m: 2,
        grid: Arc::new(TimeGrid::uniform(64, 1.0)?),
        lambda: 1.0,
        c0: 0.0,
        c1: 0.0,
        g: TimeProfile::constant(1.0),
        tol: 1e-13,
    };
    let traj = march_scalar(&cfg)?;
    let reference = scalar_ode_reference(1.5, 1.0, 0.0, 0.0, |_| 1.0, &[1.0], 2048)?[0];
    let err = (traj.nodal(64)[0] - reference).abs();
    Ok((err < 1e-4, format!("|y(1) − reference| = {err:.2e}")))
}
