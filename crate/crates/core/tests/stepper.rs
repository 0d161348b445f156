mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{gamma, tanh_sinh};
use fracwave::fracops::frac_coupling_block;
use fracwave::harness::Discretization;
use fracwave::problems::{phi, scalar_ode_reference};
use fracwave::spacefem::{energy, l2_projection, load_vector, ritz_projection};
use fracwave::stepper::{
    assemble_slab_system, march, march_scalar, Forcing, MarchConfig, ScalarConfig, TimeProfile, Trajectory,
};
use fracwave::{Error, TimeGrid};

fn zero_config(disc: &Discretization, m: usize, grid: TimeGrid) -> MarchConfig {
    let zero = vec![0.0; disc.space.dofs()];
    MarchConfig::field(1.5, m, Arc::new(grid), &disc.space, disc.operators.clone(), zero.clone(), zero, Forcing::none(), 1e-12)
}

fn empty_history(cfg: &MarchConfig) -> Trajectory {
    march(cfg).unwrap().truncated(0)
}

#[test]
fn zero_data_gives_zero_solution() {
    let disc = Discretization::new(4, 2).unwrap();
    for m in 1..=3 {
        let cfg = zero_config(&disc, m, TimeGrid::graded(6, 1.5, 1.0).unwrap());
        let sys = assemble_slab_system(&cfg, 1, &empty_history(&cfg)).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
        let traj = march(&cfg).unwrap();
        assert_eq!(traj.completed(), 6);
        for j in 1..=6 {
            for b in 1..=m {
                assert!(traj.block(j, b).iter().all(|&v| v == 0.0));
            }
        }
    }
}

fn slab_g(m: usize, tau: f64) -> Vec<f64> {
    let trial = |b: usize, x: f64| match b {
        1 => x,
        2 => x * x - x,
        3 => 2.0 * x * x * x - 3.0 * x * x + x,
        _ => unreachable!(),
    };
    let test = |a: usize, x: f64| match a {
        0 => 1.0,
        1 => 2.0 * x - 1.0,
        2 => 6.0 * x * x - 6.0 * x + 1.0,
        _ => unreachable!(),
    };
    let mut g = vec![0.0; m * m];
    for a in 0..m {
        for b in 1..=m {
            g[a * m + b - 1] = tau * tanh_sinh(0.0, 1.0, |x, _, _| test(a, x) * trial(b, x));
        }
    }
    g
}

#[test]
fn piecewise_constant_test_matrix() {
    let disc = Discretization::new(3, 1).unwrap();
    let grid = TimeGrid::uniform(8, 2.0).unwrap();
    let tau: f64 = 0.25;
    let mu = 0.5;
    let cfg = zero_config(&disc, 1, grid);
    let history = march(&cfg).unwrap();
    let sys = assemble_slab_system(&cfg, 4, &history.truncated(3)).unwrap();
    assert!(sys.matrix.is_symmetric(1e-13));
    let f = tau.powf(-mu) / gamma(2.0 - mu);
    let g = slab_g(1, tau)[0];
    assert!((g - tau / 2.0).abs() < 1e-15);
    let mask = disc.space.dirichlet_mask();
    let (mass, stiff) = (&disc.operators.mass, &disc.operators.stiffness);
    for i in 0..disc.space.dofs() {
        for k in 0..disc.space.dofs() {
            if mask[i] || mask[k] {
                continue;
            }
            let expected = f * mass.get(i, k) + g * stiff.get(i, k);
            assert!((sys.matrix.get(i, k) - expected).abs() < 1e-14, "({i},{k})");
        }
    }
}

#[test]
fn block_matrix_structure() {
    let disc = Discretization::new(2, 2).unwrap();
    let grid = TimeGrid::graded(5, 1.6, 1.0).unwrap();
    for m in 2..=3 {
        let cfg = zero_config(&disc, m, grid.clone());
        let history = march(&cfg).unwrap();
        let j = 3;
        let sys = assemble_slab_system(&cfg, j, &history.truncated(j - 1)).unwrap();
        let fblock = frac_coupling_block(0.25, &grid, j, j, m).unwrap();
        let g = slab_g(m, grid.tau(j));
        let mask = disc.space.dirichlet_mask();
        let (mass, stiff) = (&disc.operators.mass, &disc.operators.stiffness);
        for i in (0..disc.space.dofs()).filter(|&i| !mask[i]) {
            for k in (0..disc.space.dofs()).filter(|&k| !mask[k]) {
                for a in 0..m {
                    for b in 1..=m {
                        let expected = fblock.get(a, b) * mass.get(i, k) + g[a * m + b - 1] * stiff.get(i, k);
                        let got = sys.matrix.get(i * m + a, k * m + b - 1);
                        assert!((got - expected).abs() < 1e-13, "m={m} ({i},{a})x({k},{b})");
                    }
                }
            }
        }
    }
}

#[test]
fn missing_history_is_rejected() {
    let disc = Discretization::new(2, 1).unwrap();
    let cfg = zero_config(&disc, 2, TimeGrid::uniform(4, 1.0).unwrap());
    let traj = march(&cfg).unwrap();
    let err = assemble_slab_system(&cfg, 3, &traj.truncated(1)).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let disc = Discretization::new(2, 1).unwrap();
    let mut cfg = zero_config(&disc, 2, TimeGrid::uniform(4, 1.0).unwrap());
    cfg.u0.pop();
    assert!(matches!(march(&cfg), Err(Error::InvalidArgument(_))));
    let mut cfg = zero_config(&disc, 4, TimeGrid::uniform(4, 1.0).unwrap());
    assert!(march(&cfg).is_err());
    cfg.m = 2;
    cfg.gamma = 2.0;
    assert!(march(&cfg).is_err());
}

/// Marches `u = t^p φ_h` with `φ_h` the interpolant of `φ` in the `n = 4`
/// space and returns the trajectory with `φ_h`.
fn reproduce(gamma_order: f64, m: usize, power: u32, grid: TimeGrid) -> (Trajectory, Vec<f64>) {
    let disc = Discretization::new(2, 4).unwrap();
    let phi_h = disc.space.interpolate(phi);
    let a_phi = disc.operators.stiffness.mul(&phi_h);
    let m_phi = disc.operators.mass.mul(&phi_h);
    let zero = vec![0.0; disc.space.dofs()];
    let (u1, forcing) = match power {
        1 => (phi_h.clone(), Forcing::none().with_term(TimeProfile::power(1.0, 1.0).unwrap(), a_phi)),
        _ => (
            zero.clone(),
            Forcing::none()
                .with_term(TimeProfile::power(2.0 / gamma(3.0 - gamma_order), 2.0 - gamma_order).unwrap(), m_phi)
                .with_term(TimeProfile::power(1.0, 2.0).unwrap(), a_phi),
        ),
    };
    let cfg = MarchConfig::field(
        gamma_order,
        m,
        Arc::new(grid),
        &disc.space,
        disc.operators.clone(),
        zero,
        u1,
        forcing,
        1e-14,
    );
    (march(&cfg).unwrap(), phi_h)
}

fn assert_blocks(traj: &Trajectory, phi_h: &[f64], expected: impl Fn(f64, f64, usize) -> f64) {
    let grid = traj.grid();
    for j in 1..=grid.slabs() {
        let (lo, tau) = (grid.left(j), grid.tau(j));
        for b in 1..=traj.degree() {
            let scale = expected(lo, tau, b);
            for (c, p) in traj.block(j, b).iter().zip(phi_h) {
                assert!((c - scale * p).abs() < 1e-9, "slab {j} mode {b}: {c} vs {}", scale * p);
            }
        }
    }
}

#[test]
fn linear_in_time_solution_is_reproduced() {
    for m in 1..=3 {
        for gamma_order in [1.2, 1.5, 1.8] {
            let (traj, phi_h) = reproduce(gamma_order, m, 1, TimeGrid::graded(6, 1.7, 1.0).unwrap());
            assert_blocks(&traj, &phi_h, |_, tau, b| if b == 1 { tau } else { 0.0 });
        }
    }
}

#[test]
fn quadratic_in_time_solution_is_reproduced() {
    for m in 2..=3 {
        for gamma_order in [1.3, 1.6] {
            let (traj, phi_h) = reproduce(gamma_order, m, 2, TimeGrid::graded(6, 2.0, 1.0).unwrap());
            // t² = lo² + (2 lo τ + τ²) Φ̂_1 + τ² Φ̂_2 on each slab
            assert_blocks(&traj, &phi_h, |lo, tau, b| match b {
                1 => 2.0 * lo * tau + tau * tau,
                2 => tau * tau,
                _ => 0.0,
            });
        }
    }
}

#[test]
fn single_mode_field_matches_scalar_march() {
    let disc = Discretization::new(1, 2).unwrap();
    let center = disc.space.dirichlet_mask().iter().position(|&m| !m).unwrap();
    let (mass, stiff) = (&disc.operators.mass, &disc.operators.stiffness);
    let (mcc, acc) = (mass.get(center, center), stiff.get(center, center));
    let (c0, c1) = (0.3, -0.8);
    let profile = || TimeProfile::constant(1.0).plus_power(0.5, 0.3).unwrap().plus_smooth(|t| (3.0 * t).cos());
    let mut load = vec![0.0; disc.space.dofs()];
    load[center] = mcc;
    let mut u0 = vec![0.0; disc.space.dofs()];
    u0[center] = c0;
    let mut u1 = vec![0.0; disc.space.dofs()];
    u1[center] = c1;
    for m in 1..=3 {
        let grid = Arc::new(TimeGrid::graded(10, 1.5, 1.0).unwrap());
        let field = MarchConfig::field(
            1.4,
            m,
            grid.clone(),
            &disc.space,
            disc.operators.clone(),
            u0.clone(),
            u1.clone(),
            Forcing::none().with_term(profile(), load.clone()),
            1e-14,
        );
        let scalar = ScalarConfig { gamma: 1.4, m, grid, lambda: acc / mcc, c0, c1, g: profile(), tol: 1e-14 };
        let a = march(&field).unwrap();
        let b = march_scalar(&scalar).unwrap();
        for j in 0..=10 {
            assert!((a.nodal(j)[center] - b.nodal(j)[0]).abs() < 1e-9, "m={m} j={j}");
        }
    }
}

#[test]
fn constant_scalar_solution_is_reproduced() {
    for m in 1..=3 {
        let cfg = ScalarConfig {
            gamma: 1.7,
            m,
            grid: Arc::new(TimeGrid::graded(16, 2.0, 2.0).unwrap()),
            lambda: 3.0,
            c0: -0.4,
            c1: 0.0,
            g: TimeProfile::constant(-1.2),
            tol: 1e-14,
        };
        let traj = march_scalar(&cfg).unwrap();
        for j in 0..=16 {
            assert!((traj.nodal(j)[0] + 0.4).abs() < 1e-11);
        }
    }
    let bad = ScalarConfig {
        gamma: 1.5,
        m: 1,
        grid: Arc::new(TimeGrid::uniform(4, 1.0).unwrap()),
        lambda: 0.0,
        c0: 0.0,
        c1: 0.0,
        g: TimeProfile::zero(),
        tol: 1e-12,
    };
    assert!(march_scalar(&bad).is_err());
}

#[test]
fn scalar_march_matches_reference() {
    let cfg = ScalarConfig {
        gamma: 1.5,
        m: 2,
        grid: Arc::new(TimeGrid::uniform(256, 1.0).unwrap()),
        lambda: 1.0,
        c0: 0.0,
        c1: 0.0,
        g: TimeProfile::constant(1.0),
        tol: 1e-14,
    };
    let y = march_scalar(&cfg).unwrap().nodal(256)[0];
    let reference = scalar_ode_reference(1.5, 1.0, 0.0, 0.0, |_| 1.0, &[1.0], 4096).unwrap()[0];
    assert!((y - reference).abs() < 1e-5, "{y} vs {reference}");
}

#[test]
fn scalar_refinement_decreases_error() {
    let times: Vec<f64> = (1..=64).map(|k| k as f64 / 64.0).collect();
    let reference = scalar_ode_reference(1.5, 2.0, 1.0, 0.5, |t| (2.0 * t).cos(), &times, 8192).unwrap();
    let mut last = f64::INFINITY;
    for slabs in [8, 16, 32, 64] {
        let cfg = ScalarConfig {
            gamma: 1.5,
            m: 1,
            grid: Arc::new(TimeGrid::uniform(slabs, 1.0).unwrap()),
            lambda: 2.0,
            c0: 1.0,
            c1: 0.5,
            g: TimeProfile::zero().plus_smooth(|t| (2.0 * t).cos()),
            tol: 1e-14,
        };
        let traj = march_scalar(&cfg).unwrap();
        let stride = 64 / slabs;
        let err = (1..=slabs)
            .map(|j| (traj.nodal(j)[0] - reference[j * stride - 1]).abs())
            .fold(0.0, f64::max);
        assert!(err < last, "J={slabs}: {err} after {last}");
        last = err;
    }
}

#[test]
fn recomputing_a_slab_is_bit_identical() {
    let disc = Discretization::new(4, 2).unwrap();
    let forcing = Forcing::none().with_term(
        TimeProfile::power(1.3, -0.2).unwrap().plus_smooth(|t| t.sin()),
        load_vector(&disc.space, |x, y| x * (1.0 - y) + 0.5),
    );
    let u0 = ritz_projection(&disc.space, &disc.operators, |x, y| [PI * (PI * x).cos() * (PI * y).sin(), PI * (PI * x).sin() * (PI * y).cos()], 1e-13).unwrap();
    for (m, grid) in [(1, TimeGrid::uniform(9, 1.0).unwrap()), (2, TimeGrid::graded(9, 1.8, 1.0).unwrap())] {
        let zero = vec![0.0; disc.space.dofs()];
        let cfg = MarchConfig::field(1.5, m, Arc::new(grid), &disc.space, disc.operators.clone(), u0.clone(), zero, forcing.clone(), 1e-12);
        let traj = march(&cfg).unwrap();
        for j in [2, 5, 9] {
            let sys = assemble_slab_system(&cfg, j, &traj.truncated(j - 1)).unwrap();
            let guess: Vec<Vec<f64>> = (1..=m).map(|b| traj.block(j - 1, b).to_vec()).collect();
            let again = sys.solve(1e-12, Some(&guess)).unwrap();
            for b in 1..=m {
                assert_eq!(again[b - 1].as_slice(), traj.block(j, b), "m={m} slab {j} mode {b}");
            }
        }
    }
}

#[test]
fn solver_failure_carries_slab_index() {
    let disc = Discretization::new(6, 2).unwrap();
    let load = load_vector(&disc.space, |x, y| 1.0 + x * y);
    let zero = vec![0.0; disc.space.dofs()];
    let cfg = MarchConfig::field(
        1.5,
        1,
        Arc::new(TimeGrid::uniform(4, 1.0).unwrap()),
        &disc.space,
        disc.operators.clone(),
        zero.clone(),
        zero,
        Forcing::none().with_term(TimeProfile::constant(1.0), load),
        1e-300,
    );
    let err = march(&cfg).unwrap_err();
    assert!(matches!(err, Error::Slab { slab: 1, .. }), "{err}");
    assert!(err.is_solver_failure());
}

/// `max_j |U(t_j)|_{H¹}` for smooth compatible data.
pub fn max_energy_norm(slabs: usize, m: usize) -> f64 {
    let disc = Discretization::new(8, 1).unwrap();
    let (space, ops) = (&disc.space, &disc.operators);
    let u0 = vec![0.0; space.dofs()];
    let u1 = l2_projection(space, ops, |x, y| 4.0 * (PI * x).sin() * (2.0 * PI * y).sin(), 1e-13).unwrap();
    let forcing = Forcing::none().with_term(TimeProfile::constant(1.0).plus_smooth(|t| (4.0 * t).cos()), load_vector(space, phi));
    let cfg = MarchConfig::field(1.5, m, Arc::new(TimeGrid::uniform(slabs, 1.0).unwrap()), space, ops.clone(), u0, u1, forcing, 1e-12);
    let traj = march(&cfg).unwrap();
    (0..=slabs).map(|j| energy(&ops.stiffness, traj.nodal(j)).sqrt()).fold(0.0, f64::max)
}

#[test]
fn energy_stays_bounded_under_refinement() {
    for m in 1..=2 {
        let norms: Vec<f64> = [16, 32, 64, 128].iter().map(|&j| max_energy_norm(j, m)).collect();
        for w in norms.windows(2) {
            let ratio = w[1] / w[0];
            assert!((1.0 / 1.05..=1.05).contains(&ratio), "m={m}: {norms:?}");
        }
    }
}
