mod common;

use std::sync::Arc;

use common::tanh_sinh;
use fracwave::quadrature::gauss_legendre;
use fracwave::temporal_basis::{interpolate_ptau, PiecewisePolynomial, TestBasis, TrialBasis};
use fracwave::TimeGrid;
use proptest::prelude::*;

#[test]
fn trial_examples() {
    let basis = TrialBasis::new(3).unwrap();
    assert_eq!(basis.eval(1, 1.0, 0).unwrap(), 1.0);
    assert!(basis.eval(2, 1.0, 0).unwrap().abs() < 1e-15);
    assert!(basis.eval(2, 0.5, 1).unwrap().abs() < 1e-15);
    assert!((basis.eval(2, 0.25, 0).unwrap() - (0.0625 - 0.25)).abs() < 1e-15);
    assert!(basis.eval(0, 0.5, 0).is_err());
    assert!(basis.eval(4, 0.5, 0).is_err());
    assert!(TrialBasis::new(0).is_err());
    assert!(TrialBasis::new(4).is_err());
}

#[test]
fn trial_modes_vanish_at_zero_and_integrate_legendre() {
    let basis = TrialBasis::new(3).unwrap();
    let test = TestBasis::new(3).unwrap();
    for b in 1..=3 {
        assert_eq!(basis.eval(b, 0.0, 0).unwrap(), 0.0);
        for theta in [0.1, 0.37, 0.8] {
            let d = basis.eval(b, theta, 1).unwrap();
            assert!((d - test.eval(b - 1, theta).unwrap()).abs() < 1e-14);
            let h = 1e-6;
            let fd = (basis.eval(b, theta + h, 0).unwrap() - basis.eval(b, theta - h, 0).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8);
        }
    }
}

#[test]
fn test_basis_examples() {
    let basis = TestBasis::new(3).unwrap();
    assert_eq!(basis.len(), 3);
    for theta in [0.0, 0.3, 1.0] {
        assert_eq!(basis.eval(0, theta).unwrap(), 1.0);
    }
    assert!((basis.eval(1, 0.75).unwrap() - 0.5).abs() < 1e-15);
    assert!(basis.eval(3, 0.5).is_err());
    let rule = gauss_legendre(4).unwrap();
    for a in 0..3 {
        for c in 0..3 {
            let ip: f64 =
                rule.unit_interval().map(|(x, w)| w * basis.eval(a, x).unwrap() * basis.eval(c, x).unwrap()).sum();
            let expected = if a == c { 1.0 / (2 * a + 1) as f64 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-14, "a={a} c={c}: {ip}");
        }
    }
}

#[test]
fn trial_span_contains_all_polynomials() {
    // θ³ vanishes at 0, so it is a combination of the three modes alone
    let basis = TrialBasis::new(3).unwrap();
    let n = 3;
    let samples: Vec<f64> = (1..=n).map(|i| i as f64 / (n as f64 + 0.5)).collect();
    let mut a = Vec::new();
    for &x in &samples {
        for b in 1..=3 {
            a.push(basis.eval(b, x, 0).unwrap());
        }
    }
    let rhs: Vec<f64> = samples.iter().map(|x| x.powi(3)).collect();
    let c = common::dense_solve(3, &a, &rhs);
    for x in [0.05, 0.5, 0.95] {
        let v: f64 = (1..=3).map(|b| c[b - 1] * basis.eval(b, x, 0).unwrap()).sum();
        assert!((v - x * x * x).abs() < 1e-12);
    }
}

#[test]
fn ptau_examples() {
    let grid = Arc::new(TimeGrid::graded(5, 1.5, 1.0).unwrap());
    let v = |t: f64| (3.0 * t).sin() + t;
    let at: Vec<f64> = grid.breakpoints()[1..].iter().map(|&t| v(t)).collect();
    let p = interpolate_ptau(grid.clone(), 1, v, &at).unwrap();
    assert_eq!(p.degree(), 0);
    for j in 1..=5 {
        let mid = 0.5 * (grid.left(j) + grid.right(j));
        assert!((p.eval(mid).unwrap() - v(grid.right(j))).abs() < 1e-14);
    }

    let single = Arc::new(TimeGrid::uniform(1, 1.0).unwrap());
    let p = interpolate_ptau(single.clone(), 2, |t| t, &[1.0]).unwrap();
    for t in [0.1, 0.5, 0.9] {
        assert!((p.eval(t).unwrap() - t).abs() < 1e-13);
    }
    let p = interpolate_ptau(single.clone(), 1, |t| t * t, &[1.0]).unwrap();
    assert!((p.eval(0.3).unwrap() - 1.0).abs() < 1e-15);
    assert!(interpolate_ptau(single, 2, |t| t, &[1.0, 2.0]).is_err());
}

#[test]
fn ptau_conditions_hold() {
    let grid = Arc::new(TimeGrid::graded(4, 2.0, 1.5).unwrap());
    let v = |t: f64| (2.0 * t).cos() * t;
    let at: Vec<f64> = grid.breakpoints()[1..].iter().map(|&t| v(t)).collect();
    let test = TestBasis::new(3).unwrap();
    let p = interpolate_ptau(grid.clone(), 3, v, &at).unwrap();
    for j in 1..=4 {
        assert!((p.eval_local(j, 1.0) - v(grid.right(j))).abs() < 1e-13);
        let (lo, tau) = (grid.left(j), grid.tau(j));
        for a in 0..2 {
            let ip = tanh_sinh(0.0, 1.0, |x, _, _| (v(lo + tau * x) - p.eval_local(j, x)) * test.eval(a, x).unwrap());
            assert!(ip.abs() < 1e-13, "slab {j} mode {a}: {ip}");
        }
    }
}

fn ptau_l2_error(m: usize, slabs: usize) -> f64 {
    let grid = Arc::new(TimeGrid::uniform(slabs, 1.0).unwrap());
    let at: Vec<f64> = grid.breakpoints()[1..].iter().map(|t| t.sin()).collect();
    let p = interpolate_ptau(grid.clone(), m, f64::sin, &at).unwrap();
    let mut sq = 0.0;
    for j in 1..=slabs {
        let (lo, tau) = (grid.left(j), grid.tau(j));
        sq += tau * tanh_sinh(0.0, 1.0, |x, _, _| (p.eval_local(j, x) - (lo + tau * x).sin()).powi(2));
    }
    sq.sqrt()
}

#[test]
fn ptau_approximation_order() {
    for m in 1..=3 {
        let errs: Vec<f64> = [8, 16, 32].iter().map(|&s| ptau_l2_error(m, s)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - m as f64).abs() < 0.1, "m={m}: order {order}");
        }
    }
}

proptest! {
    #[test]
    fn ptau_reproduces_its_range(
        m in 1usize..=3,
        slabs in 1usize..6,
        sigma in 1.0f64..3.0,
        raw in prop::collection::vec(-2.0f64..2.0, 18),
    ) {
        let grid = Arc::new(TimeGrid::graded(slabs, sigma, 1.0).unwrap());
        let coeffs: Vec<Vec<f64>> = (0..slabs).map(|j| raw[j * 3..j * 3 + m].to_vec()).collect();
        let q = PiecewisePolynomial::new(grid.clone(), m - 1, coeffs).unwrap();
        let v = |t: f64| {
            let j = grid.slab_of(t).unwrap_or(slabs);
            q.eval_local(j, (t - grid.left(j)) / grid.tau(j))
        };
        let at: Vec<f64> = (1..=slabs).map(|j| q.eval_local(j, 1.0)).collect();
        let p = interpolate_ptau(grid.clone(), m, v, &at).unwrap();
        for j in 1..=slabs {
            for theta in [0.1, 0.5, 0.9] {
                prop_assert!((p.eval_local(j, theta) - q.eval_local(j, theta)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn evaluation_is_slab_local(raw in prop::collection::vec(-1.0f64..1.0, 9), bump in -5.0f64..5.0) {
        let grid = Arc::new(TimeGrid::uniform(3, 1.0).unwrap());
        let coeffs: Vec<Vec<f64>> = raw.chunks(3).map(|c| c.to_vec()).collect();
        let p = PiecewisePolynomial::new(grid.clone(), 2, coeffs.clone()).unwrap();
        let mut changed = coeffs;
        changed[2][1] += bump;
        let q = PiecewisePolynomial::new(grid, 2, changed).unwrap();
        for t in [0.1, 0.2, 0.4, 0.6] {
            prop_assert_eq!(p.eval(t).unwrap(), q.eval(t).unwrap());
        }
    }
}
