use rayon::prelude::*;

use crate::error::{ensure_arg, Error, Result};

/// Row count above which matrix-vector products run in parallel. Each row
/// is still summed sequentially, so results do not depend on thread count.
const PARALLEL_ROWS: usize = 4096;

/// Square matrix in compressed sparse row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets, summing
    /// duplicates. Every listed position is kept even if it sums to zero.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            ensure_arg!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            raw[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n {
            let row = &mut raw[counts[i]..counts[i + 1]];
            row.sort_by_key(|e| e.0);
            for &(j, v) in row.iter() {
                if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self { n, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, row_offsets: (0..=n).collect(), col_indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let row = |i: usize| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum::<f64>()
        };
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `a·self + b·other` for two matrices sharing one sparsity pattern.
    pub fn combine(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.row_offsets != other.row_offsets || self.col_indices != other.col_indices {
            return Err(Error::Precondition("matrices do not share a sparsity pattern".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SparseMatrix { values, ..self.clone() })
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| (v - self.get(j, i)).abs() <= rel_tol * scale)
        })
    }

    /// Replaces masked rows and columns by those of the identity, keeping the
    /// sparsity pattern.
    pub fn eliminate(&self, mask: &[bool]) -> SparseMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                if mask[i] || mask[j] {
                    out.values[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let (cols, _) = a.row(i);
            let k = cols
                .binary_search(&i)
                .map_err(|_| Error::Precondition(format!("row {i} has no diagonal entry")))?;
            diag_pos.push(a.row_offsets[i] + k);
        }
        for i in 0..n {
            let (start, end) = (lu.row_offsets[i], lu.row_offsets[i + 1]);
            for p in start..end {
                let k = lu.col_indices[p];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag_pos[k]];
                let factor = lu.values[p] / pivot;
                lu.values[p] = factor;
                if factor == 0.0 {
                    continue;
                }
                let mut q = p + 1;
                for r in diag_pos[k] + 1..lu.row_offsets[k + 1] {
                    let j = lu.col_indices[r];
                    while q < end && lu.col_indices[q] < j {
                        q += 1;
                    }
                    if q == end {
                        break;
                    }
                    if lu.col_indices[q] == j {
                        lu.values[q] -= factor * lu.values[r];
                    }
                }
            }
            let d = lu.values[diag_pos[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Precondition(format!("zero pivot in incomplete factorization at row {i}")));
            }
        }
        Ok(Self { lu, diag_pos })
    }

    /// `y = (LU)⁻¹ x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.dim();
        for i in 0..n {
            let mut s = x[i];
            for p in lu.row_offsets[i]..self.diag_pos[i] {
                s -= lu.values[p] * y[lu.col_indices[p]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in self.diag_pos[i] + 1..lu.row_offsets[i + 1] {
                s -= lu.values[p] * y[lu.col_indices[p]];
            }
            y[i] = s / lu.values[self.diag_pos[i]];
        }
    }
}

pub(super) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = rhs` for symmetric positive definite `A` by conjugate
/// gradients with Jacobi preconditioning, stopping once
/// `‖A x − rhs‖₂ ≤ tol·‖rhs‖₂`.
pub fn sparse_solve(a: &SparseMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    sparse_solve_from(a, rhs, tol, None)
}

/// [`sparse_solve`] with an optional starting guess.
pub fn sparse_solve_from(a: &SparseMatrix, rhs: &[f64], tol: f64, x0: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = a.dim();
    ensure_arg!(rhs.len() == n, "right-hand side has length {}, expected {n}", rhs.len());
    ensure_arg!(tol > 0.0, "tolerance must be positive");
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::SolverFailure { iterations: 0, residual: 1.0 });
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = rhs.to_vec();
    let mut ax = vec![0.0; n];
    if x0.is_some() {
        a.matvec(&x, &mut ax);
        r.iter_mut().zip(&ax).for_each(|(ri, v)| *ri -= v);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n + 100;
    let mut rel = norm(&r) / bnorm;
    for it in 0..max_iter {
        if rel <= tol {
            // Confirm against the true residual so drift cannot pass silently.
            a.matvec(&x, &mut ax);
            let true_rel = ax.iter().zip(rhs).map(|(v, b)| (v - b).powi(2)).sum::<f64>().sqrt() / bnorm;
            if true_rel <= tol {
                return Ok(x);
            }
            r = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
            z = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
            p = z.clone();
            rz = dot(&r, &z);
            rel = true_rel;
            if it + 1 == max_iter {
                break;
            }
        }
        a.matvec(&p, &mut ax);
        let pap = dot(&p, &ax);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverFailure { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        rel = norm(&r) / bnorm;
    }
    Err(Error::SolverFailure { iterations: max_iter, residual: rel })
}

/// Restarted GMRES with right preconditioning.
///
/// `apply` computes `y = A x`, `precond` computes `y = P⁻¹ x`. Converges once
/// `‖A x − rhs‖₂ ≤ tol·‖rhs‖₂`.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    ensure_arg!(restart >= 1, "restart length must be positive");
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut work = vec![0.0; n];
    let mut total = 0;
    let mut rel;
    loop {
        apply(&x, &mut work);
        let r: Vec<f64> = rhs.iter().zip(&work).map(|(b, v)| b - v).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok(x);
        }
        if total >= max_iter {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut z_basis: Vec<Vec<f64>> = Vec::new();
        let mut h: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iter {
            let mut z = vec![0.0; n];
            precond(&basis[k], &mut z);
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            z_basis.push(z);
            let mut col = vec![0.0; k + 2];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let d = col[k].hypot(col[k + 1]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (col[k] / d, col[k + 1] / d) };
            col[k] = d;
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(col);
            k += 1;
            total += 1;
            if (g[k].abs() / bnorm) <= 0.1 * tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|l| h[l][i] * y[l]).sum();
            if h[i][i] == 0.0 {
                return Err(Error::SolverFailure { iterations: total, residual: rel });
            }
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, z) in y.iter().zip(&z_basis) {
            x.iter_mut().zip(z).for_each(|(xi, zi)| *xi += yi * zi);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure { iterations: total, residual: f64::NAN });
        }
    }
    Err(Error::SolverFailure { iterations: total, residual: rel })
}
