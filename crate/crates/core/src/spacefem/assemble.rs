use super::space::FeSpace;
use super::sparse::{sparse_solve, SparseMatrix};
use crate::error::Result;

/// Mass and stiffness matrices of a space, both on the full dof set with no
/// boundary condition applied. They share one sparsity pattern.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1Semi,
}

pub fn assemble_operators(space: &FeSpace) -> Result<Operators> {
    let el = space.element();
    let nd = el.dofs();
    let ne = space.elem_dofs().len();
    let mut mt = Vec::with_capacity(ne * nd * nd);
    let mut kt = Vec::with_capacity(ne * nd * nd);
    let mesh = space.mesh();
    for (e, dofs) in space.elem_dofs().iter().enumerate() {
        let coords = mesh.triangles()[e].map(|v| mesh.vertices()[v]);
        let (me, ke) = el.element_matrices(&coords);
        for i in 0..nd {
            for j in 0..nd {
                mt.push((dofs[i], dofs[j], me[i * nd + j]));
                kt.push((dofs[i], dofs[j], ke[i * nd + j]));
            }
        }
    }
    let n = space.dofs();
    Ok(Operators { mass: SparseMatrix::from_triplets(n, &mt)?, stiffness: SparseMatrix::from_triplets(n, &kt)? })
}

/// Visits every quadrature point with its physical position, weight, shape
/// values, shape gradients and element dofs.
fn for_each_point(space: &FeSpace, mut visit: impl FnMut([f64; 2], f64, &[f64], &[[f64; 2]], &[usize])) {
    let el = space.element();
    let rule = el.rule();
    for (e, dofs) in space.elem_dofs().iter().enumerate() {
        let geo = space.geometry(e);
        for q in 0..rule.len() {
            let x = geo.map(rule.points()[q]);
            let grads = el.gradients_at(q, &geo.grad_lambda);
            visit(x, rule.weights()[q] * geo.jac, el.values_at(q), &grads, dofs);
        }
    }
}

/// `b_i = ∫ f φ_i` over the whole space.
pub fn load_vector(space: &FeSpace, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; space.dofs()];
    for_each_point(space, |x, w, v, _, dofs| {
        let fx = w * f(x[0], x[1]);
        for (&d, vi) in dofs.iter().zip(v) {
            b[d] += fx * vi;
        }
    });
    b
}

/// `b_i = ∫ g · ∇φ_i` over the whole space.
pub fn gradient_load(space: &FeSpace, g: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let mut b = vec![0.0; space.dofs()];
    for_each_point(space, |x, w, _, grads, dofs| {
        let gx = g(x[0], x[1]);
        for (&d, gi) in dofs.iter().zip(grads) {
            b[d] += w * (gx[0] * gi[0] + gx[1] * gi[1]);
        }
    });
    b
}

/// Zeroes the masked entries of `v`.
pub fn apply_mask(v: &mut [f64], mask: &[bool]) {
    v.iter_mut().zip(mask).filter(|(_, &m)| m).for_each(|(x, _)| *x = 0.0);
}

/// Solves a system on the unmasked dofs, returning zero on masked ones.
pub fn solve_dirichlet(a: &SparseMatrix, rhs: &[f64], mask: &[bool], tol: f64) -> Result<Vec<f64>> {
    let reduced = a.eliminate(mask);
    let mut b = rhs.to_vec();
    apply_mask(&mut b, mask);
    let mut x = sparse_solve(&reduced, &b, tol)?;
    apply_mask(&mut x, mask);
    Ok(x)
}

/// Coefficients of the `H¹₀` projection `R_h v` given `∇v`.
pub fn ritz_projection(
    space: &FeSpace,
    ops: &Operators,
    grad_v: impl Fn(f64, f64) -> [f64; 2],
    tol: f64,
) -> Result<Vec<f64>> {
    let b = gradient_load(space, grad_v);
    solve_dirichlet(&ops.stiffness, &b, space.dirichlet_mask(), tol)
}

/// Coefficients of the `L²` projection of `v` onto the unconstrained space.
pub fn l2_projection(space: &FeSpace, ops: &Operators, v: impl Fn(f64, f64) -> f64, tol: f64) -> Result<Vec<f64>> {
    let b = load_vector(space, v);
    sparse_solve(&ops.mass, &b, tol)
}

/// `‖u_h − exact‖` in the chosen norm.
pub fn spatial_error(
    space: &FeSpace,
    coeffs: &[f64],
    exact: impl Fn(f64, f64) -> f64,
    exact_grad: impl Fn(f64, f64) -> [f64; 2],
    norm: Norm,
) -> f64 {
    let mut acc = 0.0;
    for_each_point(space, |x, w, v, grads, dofs| match norm {
        Norm::L2 => {
            let uh: f64 = dofs.iter().zip(v).map(|(&d, vi)| coeffs[d] * vi).sum();
            acc += w * (uh - exact(x[0], x[1])).powi(2);
        }
        Norm::H1Semi => {
            let mut g = [0.0; 2];
            for (&d, gi) in dofs.iter().zip(grads) {
                g[0] += coeffs[d] * gi[0];
                g[1] += coeffs[d] * gi[1];
            }
            let ge = exact_grad(x[0], x[1]);
            acc += w * ((g[0] - ge[0]).powi(2) + (g[1] - ge[1]).powi(2));
        }
    });
    acc.sqrt()
}

/// `vᵀ A v`
pub fn energy(a: &SparseMatrix, v: &[f64]) -> f64 {
    super::sparse::dot(v, &a.mul(v))
}
