//! Slab-by-slab solution of the space-time system.
//!
//! On slab `I_j` the discrete solution is `U(t_{j-1}) + Σ_b c_{j,b} Φ̂_b(θ)`.
//! Testing against `ψ̂_a(θ) w` for every test mode `a` and spatial function
//! `w` gives the block system
//!
//! ```text
//! Σ_b (F^{jj}[a][b] M + G[a][b] A) c_{j,b}
//!     = ⟨f, ψ_a w⟩ − Σ_{i<j} Σ_b F^{i→j}[a][b] M c_{i,b} + ω_a M Π u₁ − τ_j δ_{a0} A U(t_{j-1})
//! ```

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{ensure_arg, Error, Result};
use crate::fracops::{omega_load, power_moments, CouplingKernel};
use crate::quadrature::gauss_legendre;
use crate::spacefem::{gmres, sparse_solve_from, FeSpace, Ilu0, Operators, SparseMatrix};
use crate::temporal_basis::{shifted_legendre, trial_value, MAX_TRIAL_DEGREE};
use crate::timegrid::TimeGrid;

const GMRES_RESTART: usize = 60;
const GMRES_MAX_ITER: usize = 20_000;

type SmoothFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar function of time: `Σ c_k t^{e_k}` plus an optional smooth part.
#[derive(Clone, Default)]
pub struct TimeProfile {
    powers: Vec<(f64, f64)>,
    smooth: Option<SmoothFn>,
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeProfile")
            .field("powers", &self.powers)
            .field("smooth", &self.smooth.is_some())
            .finish()
    }
}

impl TimeProfile {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `coef · t^exponent` with `exponent > -1`.
    pub fn power(coef: f64, exponent: f64) -> Result<Self> {
        Self::zero().plus_power(coef, exponent)
    }

    pub fn constant(value: f64) -> Self {
        Self { powers: vec![(value, 0.0)], smooth: None }
    }

    pub fn plus_power(mut self, coef: f64, exponent: f64) -> Result<Self> {
        ensure_arg!(exponent > -1.0, "time exponent {exponent} is not integrable at 0");
        self.powers.push((coef, exponent));
        Ok(self)
    }

    /// Adds a function that is smooth on every slab.
    pub fn plus_smooth(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f: SmoothFn = Arc::new(f);
        self.smooth = Some(match self.smooth.take() {
            Some(g) => Arc::new(move |t| g(t) + f(t)),
            None => f,
        });
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        let p: f64 = self.powers.iter().map(|&(c, e)| if e == 0.0 { c } else { c * t.powf(e) }).sum();
        p + self.smooth.as_ref().map_or(0.0, |g| g(t))
    }

    /// `∫_{I_j} ψ_a(t) g(t) dt` for `a < m`.
    pub fn slab_moments(&self, grid: &TimeGrid, j: usize, m: usize) -> Vec<f64> {
        let (lo, tau) = (grid.left(j), grid.tau(j));
        let mut out = vec![0.0; m];
        for &(c, e) in &self.powers {
            for (o, w) in out.iter_mut().zip(power_moments(lo, tau, 0.0, e, m)) {
                *o += c * w;
            }
        }
        if let Some(g) = &self.smooth {
            let rule = gauss_legendre(16).expect("static rule size");
            for (th, w) in rule.unit_interval() {
                let gv = g(lo + tau * th) * w * tau;
                for (a, o) in out.iter_mut().enumerate() {
                    *o += gv * shifted_legendre(a, th).0;
                }
            }
        }
        out
    }
}

/// Forcing written as `Σ_k g_k(t) b_k` with fixed load vectors `b_k`
/// (entries `∫ f_k φ_i`).
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    terms: Vec<(TimeProfile, Vec<f64>)>,
}

impl Forcing {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, profile: TimeProfile, load: Vec<f64>) -> Self {
        self.terms.push((profile, load));
        self
    }

    pub fn terms(&self) -> &[(TimeProfile, Vec<f64>)] {
        &self.terms
    }
}

/// Everything needed to march: operators, data and discretization choices.
#[derive(Debug, Clone)]
pub struct MarchConfig {
    pub gamma: f64,
    pub m: usize,
    pub grid: Arc<TimeGrid>,
    pub operators: Arc<Operators>,
    /// Dofs held at zero.
    pub mask: Vec<bool>,
    /// Coefficients of `U(0)`.
    pub u0: Vec<f64>,
    /// Coefficients of the projected initial velocity.
    pub u1: Vec<f64>,
    pub forcing: Forcing,
    pub tol: f64,
}

impl MarchConfig {
    /// Configuration on a finite element space with homogeneous Dirichlet
    /// conditions on its boundary dofs.
    #[allow(clippy::too_many_arguments)]
    pub fn field(
        gamma: f64,
        m: usize,
        grid: Arc<TimeGrid>,
        space: &FeSpace,
        operators: Arc<Operators>,
        u0: Vec<f64>,
        u1: Vec<f64>,
        forcing: Forcing,
        tol: f64,
    ) -> Self {
        Self { gamma, m, grid, operators, mask: space.dirichlet_mask().to_vec(), u0, u1, forcing, tol }
    }

    pub fn dofs(&self) -> usize {
        self.operators.mass.dim()
    }

    fn validate(&self) -> Result<()> {
        ensure_arg!(self.gamma > 1.0 && self.gamma < 2.0, "γ must lie in (1, 2), got {}", self.gamma);
        ensure_arg!(
            (1..=MAX_TRIAL_DEGREE).contains(&self.m),
            "temporal degree {} outside 1..={MAX_TRIAL_DEGREE}",
            self.m
        );
        ensure_arg!(self.tol > 0.0, "solver tolerance must be positive");
        let n = self.dofs();
        ensure_arg!(self.operators.stiffness.dim() == n, "mass and stiffness sizes differ");
        ensure_arg!(self.mask.len() == n, "mask has {} entries, expected {n}", self.mask.len());
        ensure_arg!(self.u0.len() == n, "u0 has {} entries, expected {n}", self.u0.len());
        ensure_arg!(self.u1.len() == n, "u1 has {} entries, expected {n}", self.u1.len());
        for (_, load) in self.forcing.terms() {
            ensure_arg!(load.len() == n, "load vector has {} entries, expected {n}", load.len());
        }
        Ok(())
    }
}

/// Discrete solution: nodal values at every breakpoint and the slab modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Arc<TimeGrid>,
    m: usize,
    dofs: usize,
    /// `U(t_j)` for `j = 0..=completed`.
    nodal: Vec<Vec<f64>>,
    /// `blocks[j-1][b-1] = c_{j,b}`.
    blocks: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    fn start(grid: Arc<TimeGrid>, m: usize, u0: Vec<f64>) -> Self {
        Self { grid, m, dofs: u0.len(), nodal: vec![u0], blocks: Vec::new() }
    }

    fn push(&mut self, block: Vec<Vec<f64>>) {
        let mut end = self.nodal.last().expect("initial value").clone();
        for (b, c) in block.iter().enumerate() {
            let at_one = trial_value(b + 1, 1.0);
            end.iter_mut().zip(c).for_each(|(e, v)| *e += at_one * v);
        }
        self.nodal.push(end);
        self.blocks.push(block);
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    /// Copy holding only the first `slabs` slabs.
    pub fn truncated(&self, slabs: usize) -> Trajectory {
        let k = slabs.min(self.completed());
        Trajectory {
            grid: self.grid.clone(),
            m: self.m,
            dofs: self.dofs,
            nodal: self.nodal[..=k].to_vec(),
            blocks: self.blocks[..k].to_vec(),
        }
    }

    /// Number of slabs solved so far.
    pub fn completed(&self) -> usize {
        self.blocks.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.nodal[0]
    }

    /// `U(t_j)`.
    pub fn nodal(&self, j: usize) -> &[f64] {
        &self.nodal[j]
    }

    /// `c_{j,b}` for `j ≥ 1`, `b ∈ 1..=m`.
    pub fn block(&self, j: usize, b: usize) -> &[f64] {
        &self.blocks[j - 1][b - 1]
    }

    /// `U(t_{j-1} + θ τ_j)`.
    pub fn slab_value(&self, j: usize, theta: f64) -> Vec<f64> {
        let mut out = self.nodal[j - 1].clone();
        for (b, c) in self.blocks[j - 1].iter().enumerate() {
            let phi = trial_value(b + 1, theta);
            out.iter_mut().zip(c).for_each(|(o, v)| *o += phi * v);
        }
        out
    }

    /// `U'(t_{j-1} + θ τ_j)`.
    pub fn slab_derivative(&self, j: usize, theta: f64) -> Vec<f64> {
        let tau = self.grid.tau(j);
        let mut out = vec![0.0; self.dofs];
        for (b, c) in self.blocks[j - 1].iter().enumerate() {
            let d = shifted_legendre(b, theta).0 / tau;
            out.iter_mut().zip(c).for_each(|(o, v)| *o += d * v);
        }
        out
    }

    /// `U(t)` for `t ∈ [0, t_completed]`.
    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(self.nodal[0].clone());
        }
        let j = self.locate(t)?;
        Ok(self.slab_value(j, (t - self.grid.left(j)) / self.grid.tau(j)))
    }

    /// `U'(t)`, taken from the left slab at breakpoints.
    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        let j = self.locate(t)?;
        Ok(self.slab_derivative(j, (t - self.grid.left(j)) / self.grid.tau(j)))
    }

    fn locate(&self, t: f64) -> Result<usize> {
        match self.grid.slab_of(t) {
            Some(j) if j <= self.completed() => Ok(j),
            _ => Err(Error::InvalidArgument(format!("time {t} outside the solved range"))),
        }
    }
}

/// Linear system for the modes of one slab, in dof-major order
/// (`row = dof·m + test mode`), with Dirichlet rows eliminated.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub j: usize,
    pub m: usize,
    pub matrix: Arc<SparseMatrix>,
    pub rhs: Vec<f64>,
    /// Incomplete factorization of `matrix`, built for `m ≥ 2` only.
    precond: Option<Arc<Ilu0>>,
}

impl SlabSystem {
    /// Solves to relative residual `tol`, returning `c_b` for `b = 1..=m`.
    pub fn solve(&self, tol: f64, guess: Option<&[Vec<f64>]>) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        let n = self.rhs.len() / m;
        let x0 = guess.map(|g| interleave(g, n));
        let x = if m == 1 {
            sparse_solve_from(&self.matrix, &self.rhs, tol, x0.as_deref())?
        } else {
            let ilu = self.precond.as_ref().ok_or_else(|| Error::Precondition("missing preconditioner".into()))?;
            gmres(
                |v, y| self.matrix.matvec(v, y),
                |v, y| ilu.apply(v, y),
                &self.rhs,
                x0.as_deref(),
                tol,
                GMRES_RESTART,
                GMRES_MAX_ITER,
            )?
        };
        Ok((0..m).map(|b| (0..n).map(|k| x[k * m + b]).collect()).collect())
    }
}

fn interleave(blocks: &[Vec<f64>], n: usize) -> Vec<f64> {
    let m = blocks.len();
    let mut out = vec![0.0; n * m];
    for (b, c) in blocks.iter().enumerate() {
        for k in 0..n {
            out[k * m + b] = c[k];
        }
    }
    out
}

/// `G[a][b] = ∫_0^1 ψ̂_a Φ̂_b` (multiply by `τ` for the slab value).
fn reference_g(m: usize) -> Vec<f64> {
    let rule = gauss_legendre(8).expect("static rule size");
    let mut g = vec![0.0; m * m];
    for (th, w) in rule.unit_interval() {
        for a in 0..m {
            let psi = shifted_legendre(a, th).0;
            for b in 0..m {
                g[a * m + b] += w * psi * trial_value(b + 1, th);
            }
        }
    }
    g
}

#[derive(Debug, Clone)]
struct SlabMatrix {
    matrix: Arc<SparseMatrix>,
    precond: Option<Arc<Ilu0>>,
}

/// Builds slab systems, caching matrices and coupling blocks.
pub struct SlabAssembler<'a> {
    cfg: &'a MarchConfig,
    kernel: CouplingKernel,
    g_ref: Vec<f64>,
    mass_u1: Vec<f64>,
    /// Off-diagonal blocks by slab offset, uniform grids only.
    offset_blocks: Vec<Option<Arc<Vec<f64>>>>,
    /// Slab matrix and preconditioner keyed by the bits of `τ_j`.
    matrices: HashMap<u64, SlabMatrix>,
    /// `M c_{i,b}` for completed slabs.
    mass_blocks: Vec<Vec<Vec<f64>>>,
}

impl<'a> SlabAssembler<'a> {
    pub fn new(cfg: &'a MarchConfig) -> Result<Self> {
        cfg.validate()?;
        let kernel = CouplingKernel::new(cfg.gamma - 1.0, cfg.m)?;
        Ok(Self {
            cfg,
            kernel,
            g_ref: reference_g(cfg.m),
            mass_u1: cfg.operators.mass.mul(&cfg.u1),
            offset_blocks: vec![None; cfg.grid.slabs()],
            matrices: HashMap::new(),
            mass_blocks: Vec::new(),
        })
    }

    /// `F^{i→j}` as row-major `m × m` entries.
    fn coupling(&mut self, i: usize, j: usize) -> Arc<Vec<f64>> {
        let grid = &self.cfg.grid;
        let compute = |k: &CouplingKernel, i: usize, j: usize| {
            Arc::new(k.off_diagonal(grid.left(i), grid.tau(i), grid.left(j), grid.tau(j)))
        };
        if grid.is_uniform() {
            // always from the first slab, so the block does not depend on
            // which slab requested it first
            let d = j - i;
            if self.offset_blocks[d].is_none() {
                self.offset_blocks[d] = Some(compute(&self.kernel, 1, d + 1));
            }
            self.offset_blocks[d].clone().expect("filled above")
        } else {
            compute(&self.kernel, i, j)
        }
    }

    fn history_blocks(&mut self, j: usize) -> Vec<Arc<Vec<f64>>> {
        if self.cfg.grid.is_uniform() {
            (1..j).map(|i| self.coupling(i, j)).collect()
        } else {
            let grid = &self.cfg.grid;
            let kernel = &self.kernel;
            (1..j)
                .into_par_iter()
                .map(|i| Arc::new(kernel.off_diagonal(grid.left(i), grid.tau(i), grid.left(j), grid.tau(j))))
                .collect()
        }
    }

    fn slab_matrix(&mut self, j: usize) -> Result<SlabMatrix> {
        let tau = self.cfg.grid.tau(j);
        if let Some(hit) = self.matrices.get(&tau.to_bits()) {
            return Ok(hit.clone());
        }
        let m = self.cfg.m;
        let f = self.kernel.diagonal(tau);
        let g: Vec<f64> = self.g_ref.iter().map(|v| v * tau).collect();
        let ops = &self.cfg.operators;
        let mask = &self.cfg.mask;
        let n = ops.mass.dim();
        let mut trip = Vec::with_capacity(ops.mass.nnz() * m * m);
        for k in 0..n {
            let (cols, mv) = ops.mass.row(k);
            let (kcols, av) = ops.stiffness.row(k);
            debug_assert_eq!(cols, kcols);
            for ((&l, &mkl), &akl) in cols.iter().zip(mv).zip(av) {
                let fixed = mask[k] || mask[l];
                for a in 0..m {
                    for b in 0..m {
                        let v = if fixed {
                            if k == l && a == b {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            f[a * m + b] * mkl + g[a * m + b] * akl
                        };
                        trip.push((k * m + a, l * m + b, v));
                    }
                }
            }
        }
        let matrix = SparseMatrix::from_triplets(n * m, &trip)?;
        let precond = if m > 1 { Some(Arc::new(Ilu0::new(&matrix)?)) } else { None };
        let entry = SlabMatrix { matrix: Arc::new(matrix), precond };
        self.matrices.insert(tau.to_bits(), entry.clone());
        Ok(entry)
    }

    /// System for slab `j` given the trajectory through slab `j - 1`.
    pub fn assemble(&mut self, j: usize, history: &Trajectory) -> Result<SlabSystem> {
        let cfg = self.cfg;
        let grid = &cfg.grid;
        ensure_arg!((1..=grid.slabs()).contains(&j), "slab {j} outside 1..={}", grid.slabs());
        if history.completed() != j - 1 {
            return Err(Error::Precondition(format!(
                "slab {j} needs history through slab {}, have {}",
                j - 1,
                history.completed()
            )));
        }
        while self.mass_blocks.len() < j - 1 {
            let i = self.mass_blocks.len() + 1;
            let y = (1..=cfg.m).map(|b| cfg.operators.mass.mul(history.block(i, b))).collect();
            self.mass_blocks.push(y);
        }
        let SlabMatrix { matrix, precond } = self.slab_matrix(j)?;
        let m = cfg.m;
        let n = cfg.dofs();
        let loads: Vec<(Vec<f64>, &Vec<f64>)> =
            cfg.forcing.terms().iter().map(|(p, b)| (p.slab_moments(grid, j, m), b)).collect();
        let omega = omega_load(cfg.gamma, grid, j, 0.0, m)?;
        let tau = grid.tau(j);
        let a_prev = cfg.operators.stiffness.mul(history.nodal(j - 1));
        let hist = self.history_blocks(j);
        let mass_blocks = &self.mass_blocks;
        let mass_u1 = &self.mass_u1;
        let mut rhs = vec![0.0; n * m];
        rhs.par_chunks_mut(m).enumerate().for_each(|(k, row)| {
            if cfg.mask[k] {
                return;
            }
            for (a, r) in row.iter_mut().enumerate() {
                let mut v: f64 = loads.iter().map(|(w, b)| w[a] * b[k]).sum();
                let mut h = 0.0;
                for (i, blk) in hist.iter().enumerate() {
                    for b in 0..m {
                        h += blk[a * m + b] * mass_blocks[i][b][k];
                    }
                }
                v -= h;
                v += omega[a] * mass_u1[k];
                if a == 0 {
                    v -= tau * a_prev[k];
                }
                *r = v;
            }
        });
        Ok(SlabSystem { j, m, matrix, rhs, precond })
    }
}

/// Builds the system of slab `j` from scratch; convenient for inspection.
pub fn assemble_slab_system(cfg: &MarchConfig, j: usize, history: &Trajectory) -> Result<SlabSystem> {
    SlabAssembler::new(cfg)?.assemble(j, history)
}

/// Solves every slab in order.
pub fn march(cfg: &MarchConfig) -> Result<Trajectory> {
    let mut assembler = SlabAssembler::new(cfg)?;
    let mut traj = Trajectory::start(cfg.grid.clone(), cfg.m, cfg.u0.clone());
    for j in 1..=cfg.grid.slabs() {
        let tag = |e: Error| Error::Slab { slab: j, source: Box::new(e) };
        let sys = assembler.assemble(j, &traj).map_err(tag)?;
        let guess = (j > 1).then(|| traj.blocks[j - 2].clone());
        let block = sys.solve(cfg.tol, guess.as_deref()).map_err(tag)?;
        traj.push(block);
    }
    Ok(traj)
}

/// Data of the scalar problem `D^γ(y − c₀ − t c₁) + λ y = g`.
#[derive(Debug, Clone)]
pub struct ScalarConfig {
    pub gamma: f64,
    pub m: usize,
    pub grid: Arc<TimeGrid>,
    pub lambda: f64,
    pub c0: f64,
    pub c1: f64,
    pub g: TimeProfile,
    pub tol: f64,
}

/// Same scheme with mass `1` and stiffness `λ`; the result has one dof.
pub fn march_scalar(cfg: &ScalarConfig) -> Result<Trajectory> {
    ensure_arg!(cfg.lambda > 0.0, "λ must be positive, got {}", cfg.lambda);
    let ops = Operators {
        mass: SparseMatrix::identity(1),
        stiffness: SparseMatrix::from_triplets(1, &[(0, 0, cfg.lambda)])?,
    };
    let field = MarchConfig {
        gamma: cfg.gamma,
        m: cfg.m,
        grid: cfg.grid.clone(),
        operators: Arc::new(ops),
        mask: vec![false],
        u0: vec![cfg.c0],
        u1: vec![cfg.c1],
        forcing: Forcing::none().with_term(cfg.g.clone(), vec![1.0]),
        tol: cfg.tol,
    };
    march(&field)
}
