mod common;

use common::{brute_rl_integral, gamma, mittag_leffler, tanh_sinh, tanh_sinh_steps};
use fracwave::problems::{grad_phi, laplacian_phi, manufactured_problem, phi, scalar_ode_reference};
use rand::{rngs::StdRng, Rng, SeedableRng};

#[test]
fn phi_examples() {
    assert_eq!(phi(0.5, 0.5), 0.0625);
    assert_eq!(laplacian_phi(0.5, 0.5), -1.0);
    for (x, y) in [(0.0, 0.3), (1.0, 0.7), (0.2, 0.0), (0.9, 1.0)] {
        assert_eq!(phi(x, y), 0.0);
    }
    let h = 1e-5;
    for (x, y) in [(0.3, 0.6), (0.8, 0.15)] {
        let g = grad_phi(x, y);
        assert!((g[0] - (phi(x + h, y) - phi(x - h, y)) / (2.0 * h)).abs() < 1e-9);
        assert!((g[1] - (phi(x, y + h) - phi(x, y - h)) / (2.0 * h)).abs() < 1e-9);
        let lap = (phi(x + h, y) + phi(x - h, y) + phi(x, y + h) + phi(x, y - h) - 4.0 * phi(x, y)) / (h * h);
        assert!((laplacian_phi(x, y) - lap).abs() < 1e-5);
    }
}

#[test]
fn problem_validation() {
    assert!(manufactured_problem(1.5, 2.0, 1.0).is_ok());
    assert!(manufactured_problem(1.5, 1.0, 1.0).is_err());
    assert!(manufactured_problem(1.0, 2.0, 1.0).is_err());
    assert!(manufactured_problem(2.0, 2.0, 1.0).is_err());
    assert!(manufactured_problem(1.5, 2.0, 0.0).is_err());
    let p = manufactured_problem(1.3, 1.4, 2.0).unwrap();
    for (x, y) in [(0.2, 0.4), (0.5, 0.5)] {
        assert_eq!(p.u(x, y, 0.0), 0.0);
        assert_eq!(p.u_t(x, y, 0.0), 0.0);
        assert_eq!(p.u0(x, y), 0.0);
        assert_eq!(p.u1(x, y), 0.0);
    }
}

/// `D^γ t^r` at `t`, as `I^{2−γ}` of the second derivative (valid since
/// `t^r` and its derivative vanish at 0 for `r > 1`).
fn brute_derivative(gamma_order: f64, r: f64, t: f64) -> f64 {
    brute_rl_integral(2.0 - gamma_order, &[], t, |s| r * (r - 1.0) * s.powf(r - 2.0))
}

#[test]
fn forcing_coefficient_matches_fractional_derivative() {
    let p = manufactured_problem(1.5, 2.0, 1.0).unwrap();
    assert!((p.forcing_coefficient() - 2.256_758_334_2).abs() < 1e-9);
    assert!((p.forcing_coefficient() - brute_derivative(1.5, 2.0, 1.0)).abs() < 1e-9);
    for (g, r) in [(1.2, 3.0), (1.4, 1.1), (1.8, 2.5)] {
        let p = manufactured_problem(g, r, 1.0).unwrap();
        for t in [0.3, 1.0] {
            let expected = brute_derivative(g, r, t);
            let got = p.forcing_coefficient() * t.powf(r - g);
            assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0), "γ={g} r={r} t={t}");
        }
    }
}

#[test]
fn forcing_splits_into_profiles() {
    let p = manufactured_problem(1.4, 1.1, 1.0).unwrap();
    let (p1, p2) = p.time_profiles();
    for (x, y, t) in [(0.3, 0.7, 0.01), (0.5, 0.5, 0.9)] {
        let split = p1.eval(t) * phi(x, y) + p2.eval(t) * laplacian_phi(x, y);
        assert!((split - p.f(x, y, t)).abs() < 1e-13 * p.f(x, y, t).abs());
    }
}

#[test]
fn reference_fixed_point() {
    for (lambda, c0) in [(2.0, 0.3), (0.5, -1.0)] {
        let y = scalar_ode_reference(1.5, lambda, c0, 0.0, |_| lambda * c0, &[0.0, 0.25, 0.6, 1.0], 64).unwrap();
        assert!(y.iter().all(|v| (v - c0).abs() < 1e-12));
    }
    assert!(scalar_ode_reference(1.5, 1.0, 0.0, 0.0, |_| 1.0, &[1.0], 8).is_err());
}

#[test]
fn reference_matches_mittag_leffler() {
    let exact = 0.7 * mittag_leffler(1.5, -1.0);
    let y = scalar_ode_reference(1.5, 1.0, 0.7, 0.0, |_| 0.0, &[1.0], 4096).unwrap()[0];
    assert!((y - exact).abs() < 1e-6, "{y} vs {exact}");

    let err = |steps| (scalar_ode_reference(1.5, 1.0, 0.7, 0.0, |_| 0.0, &[1.0], steps).unwrap()[0] - exact).abs();
    for steps in [256, 512] {
        let ratio = err(steps) / err(2 * steps);
        assert!((3.5..4.5).contains(&ratio), "steps {steps}: ratio {ratio}");
    }
}

#[test]
fn reference_handles_linear_term() {
    // y = c₁ t solves the equation with g = λ c₁ t
    let times = [0.1, 0.5, 1.0];
    let y = scalar_ode_reference(1.3, 2.0, 0.0, 0.4, |t| 0.8 * t, &times, 128).unwrap();
    for (v, t) in y.iter().zip(times) {
        assert!((v - 0.4 * t).abs() < 1e-12);
    }
}

/// Space-time residual of the weak form at `u = t^r φ` against
/// `v = q(t) w(x)` with `w = φ · (1 + a x + b y)`, relative to the size of
/// its terms. The fractional term is integrated by parts in time,
/// `∫ D^μ(u') q = q(T) I^{1−μ}u'(T) − ∫ I^{1−μ}u' q'`.
fn weak_residual(gamma_order: f64, r: f64, q: &[f64], a: f64, b: f64) -> f64 {
    let final_time = 1.0;
    let p = manufactured_problem(gamma_order, r, final_time).unwrap();
    let mu = gamma_order - 1.0;
    let w = |x: f64, y: f64| phi(x, y) * (1.0 + a * x + b * y);
    let grad_w = |x: f64, y: f64| {
        let g = grad_phi(x, y);
        let s = 1.0 + a * x + b * y;
        [g[0] * s + phi(x, y) * a, g[1] * s + phi(x, y) * b]
    };
    let qv = |t: f64| q.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let dq = |t: f64| q.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c);
    let space = |f: &dyn Fn(f64, f64) -> f64| {
        tanh_sinh_steps(0.0, 1.0, 6, |x, _, _| tanh_sinh_steps(0.0, 1.0, 6, |y, _, _| f(x, y)))
    };
    // u' = a(t) φ; the spatial factor is read off the evaluator at one point
    let (x0, y0) = (0.4, 0.3);
    let frac_time = |t: f64| brute_rl_integral(1.0 - mu, &[], t, |s| p.u_t(x0, y0, s) / phi(x0, y0));
    let time_part = qv(final_time) * frac_time(final_time)
        - tanh_sinh_steps(0.0, final_time, 16, |t, _, _| frac_time(t) * dq(t));
    let frac = time_part * space(&|x, y| phi(x, y) * w(x, y));
    let grad = tanh_sinh_steps(0.0, final_time, 16, |t, _, _| {
        qv(t) * space(&|x, y| {
            let (gu, gw) = (p.grad_u(x, y, t), grad_w(x, y));
            gu[0] * gw[0] + gu[1] * gw[1]
        })
    });
    let load = tanh_sinh_steps(0.0, final_time, 16, |t, _, _| qv(t) * space(&|x, y| p.f(x, y, t) * w(x, y)));
    (frac + grad - load).abs() / (frac.abs() + grad.abs() + load.abs())
}

#[test]
fn manufactured_solution_satisfies_weak_form() {
    let mut rng = StdRng::seed_from_u64(11);
    for (g, r) in [(1.5, 2.0), (1.4, 1.1), (1.2, 3.0)] {
        for _ in 0..2 {
            let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let res = weak_residual(g, r, &q, a, b);
            assert!(res < 1e-8, "γ={g} r={r}: residual {res}");
        }
    }
}

#[test]
fn gamma_oracle_sanity() {
    assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    let half = tanh_sinh(0.0, 1.0, |_, da, _| da.powf(-0.5));
    assert!((half - 2.0).abs() < 1e-12);
}
