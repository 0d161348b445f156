//! Error functionals, convergence sweeps and the command line front end.

mod cli;
pub mod validate;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{ensure_arg, Error, Result};
use crate::problems::{grad_phi, manufactured_problem, phi, ManufacturedProblem};
use crate::quadrature::{gauss_legendre, graded_integrate};
use crate::spacefem::{
    assemble_operators, build_fe_space, build_unit_square_mesh, energy, l2_projection, ritz_projection, spatial_error,
    FeSpace, Norm, Operators,
};
use crate::stepper::{march, MarchConfig, Trajectory};
use crate::timegrid::TimeGrid;

pub use cli::cli_main;

/// Parameters of one manufactured-solution run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub r: f64,
    pub m: usize,
    pub n: usize,
    pub slabs: usize,
    pub sigma: f64,
    pub cells: usize,
    pub final_time: f64,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.5,
            r: 2.0,
            m: 2,
            n: 1,
            slabs: 64,
            sigma: 1.0,
            cells: 8,
            final_time: 1.0,
            tol: 1e-12,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.gamma > 1.0 && self.gamma < 2.0, "gamma must lie in (1, 2), got {}", self.gamma);
        ensure_arg!(self.sigma >= 1.0, "sigma must be at least 1, got {}", self.sigma);
        ensure_arg!((1..=3).contains(&self.m), "m must be in 1..=3, got {}", self.m);
        ensure_arg!((1..=4).contains(&self.n), "n must be in 1..=4, got {}", self.n);
        ensure_arg!(self.slabs >= 1, "J must be positive");
        ensure_arg!(self.cells >= 1, "cells must be positive");
        ensure_arg!(self.tol > 0.0 && self.tol < 1.0, "tol must lie in (0, 1), got {}", self.tol);
        manufactured_problem(self.gamma, self.r, self.final_time)?;
        Ok(())
    }
}

/// Spatial discretization shared by a march and its error evaluation.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: Arc<FeSpace>,
    pub operators: Arc<Operators>,
}

impl Discretization {
    pub fn new(cells: usize, n: usize) -> Result<Self> {
        let mesh = Arc::new(build_unit_square_mesh(cells)?);
        let space = build_fe_space(mesh, n)?;
        let operators = assemble_operators(&space)?;
        Ok(Self { space: Arc::new(space), operators: Arc::new(operators) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `‖(u − U)'‖` in `L²(0, T; L²(Ω))`.
    pub e1: f64,
    /// `max_j |(u − U)(t_j)|_{H¹}`.
    pub e2: f64,
    pub seconds: f64,
}

/// Errors of `traj` against `u(x, t) = t^r v(x)`.
///
/// Both functionals are split orthogonally: with `p = Π_h v` and
/// `q = R_h v`,
/// `‖u' − U'‖² = ‖r t^{r−1} p − U'‖² + r² t^{2r−2} ‖v − p‖²` and
/// `|u − U|²_{H¹} = |t^r q − U|²_{H¹} + t^{2r} |v − q|²_{H¹}`, so the
/// discrete parts are evaluated on coefficient vectors.
pub fn compute_errors_separable(
    traj: &Trajectory,
    disc: &Discretization,
    r: f64,
    v: impl Fn(f64, f64) -> f64 + Copy,
    grad_v: impl Fn(f64, f64) -> [f64; 2] + Copy,
    tol: f64,
) -> Result<ErrorReport> {
    let space = &disc.space;
    let ops = &disc.operators;
    ensure_arg!(traj.dofs() == space.dofs(), "trajectory has {} dofs, space has {}", traj.dofs(), space.dofs());
    ensure_arg!(traj.completed() == traj.grid().slabs(), "trajectory is incomplete");
    ensure_arg!(r >= 1.0, "temporal exponent must be at least 1");
    let p = l2_projection(space, ops, v, tol)?;
    let q = ritz_projection(space, ops, grad_v, tol)?;
    let grid = traj.grid();
    let t_end = grid.final_time();

    let l2_rest = spatial_error(space, &p, v, grad_v, Norm::L2).powi(2);
    let mut e1_sq = r * r * t_end.powf(2.0 * r - 1.0) / (2.0 * r - 1.0) * l2_rest;
    let rule = gauss_legendre(traj.degree() + 8)?;
    let mass = &ops.mass;
    for j in 1..=grid.slabs() {
        let (lo, tau) = (grid.left(j), grid.tau(j));
        let integrand = |t: f64| {
            let theta = (t - lo) / tau;
            let a = r * t.powf(r - 1.0);
            let mut w = traj.slab_derivative(j, theta);
            w.iter_mut().zip(&p).for_each(|(wi, pi)| *wi = a * pi - *wi);
            energy(mass, &w)
        };
        e1_sq += graded_integrate(&rule, lo, lo + tau, 0.0, integrand);
    }

    let h1_rest = spatial_error(space, &q, v, grad_v, Norm::H1Semi).powi(2);
    let mut e2_sq: f64 = 0.0;
    for j in 1..=grid.slabs() {
        let tj = grid.right(j);
        let s = tj.powf(r);
        let w: Vec<f64> = traj.nodal(j).iter().zip(&q).map(|(u, qi)| s * qi - u).collect();
        let val = energy(&ops.stiffness, &w).max(0.0) + s * s * h1_rest;
        e2_sq = e2_sq.max(val);
    }
    Ok(ErrorReport { e1: e1_sq.max(0.0).sqrt(), e2: e2_sq.sqrt(), seconds: 0.0 })
}

/// Errors against the manufactured solution.
pub fn compute_errors(
    traj: &Trajectory,
    disc: &Discretization,
    prob: &ManufacturedProblem,
    tol: f64,
) -> Result<ErrorReport> {
    ensure_arg!(
        (traj.grid().final_time() - prob.final_time).abs() <= 1e-14 * prob.final_time,
        "trajectory and problem have different final times"
    );
    compute_errors_separable(traj, disc, prob.r, phi, grad_phi, tol)
}

/// Marches the manufactured problem described by `cfg`.
pub fn solve_manufactured(cfg: &RunConfig) -> Result<(Trajectory, Discretization)> {
    cfg.validate()?;
    let prob = manufactured_problem(cfg.gamma, cfg.r, cfg.final_time)?;
    let disc = Discretization::new(cfg.cells, cfg.n)?;
    let grid = Arc::new(TimeGrid::graded(cfg.slabs, cfg.sigma, cfg.final_time)?);
    let zero = vec![0.0; disc.space.dofs()];
    let march_cfg = MarchConfig::field(
        cfg.gamma,
        cfg.m,
        grid,
        &disc.space,
        disc.operators.clone(),
        zero.clone(),
        zero,
        prob.forcing(&disc.space),
        cfg.tol,
    );
    Ok((march(&march_cfg)?, disc))
}

/// One timed run with its errors.
pub fn run(cfg: &RunConfig) -> Result<ErrorReport> {
    let start = Instant::now();
    let (traj, disc) = solve_manufactured(cfg)?;
    let prob = manufactured_problem(cfg.gamma, cfg.r, cfg.final_time)?;
    let mut report = compute_errors(&traj, &disc, &prob, cfg.tol)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    Time,
    Space,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level: usize,
    pub slabs: usize,
    pub inv_h: usize,
    pub report: ErrorReport,
    pub order1: Option<f64>,
    pub order2: Option<f64>,
}

/// `log(e_prev / e_curr) / log(refinement ratio)`.
pub fn observed_order(e_prev: f64, e_curr: f64, ratio: f64) -> f64 {
    (e_prev / e_curr).ln() / ratio.ln()
}

/// Rounds to the four significant digits written to CSV.
fn printed(x: f64) -> f64 {
    format!("{x:.3e}").parse().expect("formatted float")
}

/// Runs `base` at each level, varying `J` or the cells per side.
pub fn convergence_sweep(base: &RunConfig, levels: &[usize], vary: Vary) -> Result<Vec<SweepRow>> {
    ensure_arg!(levels.len() >= 2, "a sweep needs at least two levels");
    ensure_arg!(levels.iter().all(|&l| l >= 1), "levels must be positive");
    base.validate()?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(levels.len());
    for (level, &value) in levels.iter().enumerate() {
        let mut cfg = base.clone();
        match vary {
            Vary::Time => cfg.slabs = value,
            Vary::Space => cfg.cells = value,
        }
        let report = run(&cfg).map_err(|e| Error::Level { level, source: Box::new(e) })?;
        let (order1, order2) = match rows.last() {
            Some(prev) => {
                let prev_value = match vary {
                    Vary::Time => prev.slabs,
                    Vary::Space => prev.inv_h,
                };
                let ratio = value as f64 / prev_value as f64;
                (
                    Some(observed_order(printed(prev.report.e1), printed(report.e1), ratio)),
                    Some(observed_order(printed(prev.report.e2), printed(report.e2), ratio)),
                )
            }
            None => (None, None),
        };
        rows.push(SweepRow { level, slabs: cfg.slabs, inv_h: cfg.cells, report, order1, order2 });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "level,J,inv_h,E1,order1,E2,order2,seconds";

pub fn write_csv(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let order = |o: Option<f64>| o.map_or_else(String::new, |v| format!("{v:.3}"));
    for row in rows {
        writeln!(
            out,
            "{},{},{},{:.3e},{},{:.3e},{},{:.3e}",
            row.level,
            row.slabs,
            row.inv_h,
            row.report.e1,
            order(row.order1),
            row.report.e2,
            order(row.order2),
            row.report.seconds
        )?;
    }
    Ok(())
}
