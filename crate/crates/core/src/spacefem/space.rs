use std::sync::Arc;

use super::mesh::TriMesh;
use crate::error::{ensure_arg, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

pub const MAX_SPACE_DEGREE: usize = 4;

/// Points per direction of the collapsed triangle rule. Five gives exactness
/// through total degree 9.
const TRIANGLE_RULE_POINTS: usize = 5;

/// Quadrature on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
///
/// Built as a conical product: Gauss–Jacobi with weight `(1 − x)` in the
/// collapsed direction and Gauss–Legendre along the collapsed ray.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl TriangleRule {
    pub fn conical(k: usize) -> Result<Self> {
        let outer = gauss_jacobi(k, 1.0, 0.0)?;
        let inner = gauss_legendre(k)?;
        let mut points = Vec::with_capacity(k * k);
        let mut weights = Vec::with_capacity(k * k);
        for (x, wx) in outer.iter() {
            let u = 0.5 * (1.0 + x);
            for (v, wv) in inner.unit_interval() {
                points.push([u, v * (1.0 - u)]);
                weights.push(0.25 * wx * wv);
            }
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lagrange shape functions of degree `n` on a triangle, written in
/// barycentric coordinates, with values tabulated at a triangle rule.
#[derive(Debug, Clone)]
pub struct LocalElement {
    degree: usize,
    /// Barycentric multi-indices `(i₀, i₁, i₂)` summing to `degree`.
    indices: Vec<[usize; 3]>,
    rule: TriangleRule,
    /// `values[q][i]`
    values: Vec<Vec<f64>>,
    /// `dlambda[q][i][k] = ∂φ_i/∂λ_k`
    dlambda: Vec<Vec<[f64; 3]>>,
}

impl LocalElement {
    pub fn new(degree: usize) -> Result<Self> {
        ensure_arg!(
            (1..=MAX_SPACE_DEGREE).contains(&degree),
            "polynomial degree must be in 1..={MAX_SPACE_DEGREE}, got {degree}"
        );
        let mut indices = Vec::new();
        for i2 in 0..=degree {
            for i1 in 0..=degree - i2 {
                indices.push([degree - i1 - i2, i1, i2]);
            }
        }
        let rule = TriangleRule::conical(TRIANGLE_RULE_POINTS)?;
        let mut values = Vec::with_capacity(rule.len());
        let mut dlambda = Vec::with_capacity(rule.len());
        for p in rule.points() {
            let lam = [1.0 - p[0] - p[1], p[0], p[1]];
            let mut vq = Vec::with_capacity(indices.len());
            let mut dq = Vec::with_capacity(indices.len());
            for alpha in &indices {
                let (v, d) = shape(degree, alpha, lam);
                vq.push(v);
                dq.push(d);
            }
            values.push(vq);
            dlambda.push(dq);
        }
        Ok(Self { degree, indices, rule, values, dlambda })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn indices(&self) -> &[[usize; 3]] {
        &self.indices
    }

    pub fn rule(&self) -> &TriangleRule {
        &self.rule
    }

    pub fn dofs(&self) -> usize {
        self.indices.len()
    }

    /// Shape function values at quadrature point `q`.
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q]
    }

    /// Evaluates all shape functions at barycentric coordinates `lam`.
    pub fn eval(&self, lam: [f64; 3]) -> Vec<f64> {
        self.indices.iter().map(|a| shape(self.degree, a, lam).0).collect()
    }

    /// Physical gradients of every shape function at quadrature point `q`
    /// given the element's barycentric gradients.
    pub fn gradients_at(&self, q: usize, grad_lambda: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.dlambda[q]
            .iter()
            .map(|d| {
                let mut g = [0.0; 2];
                for k in 0..3 {
                    g[0] += d[k] * grad_lambda[k][0];
                    g[1] += d[k] * grad_lambda[k][1];
                }
                g
            })
            .collect()
    }

    /// Row-major local mass and stiffness matrices on the triangle `coords`.
    pub fn element_matrices(&self, coords: &[[f64; 2]; 3]) -> (Vec<f64>, Vec<f64>) {
        let geo = Geometry::new(coords);
        let nd = self.dofs();
        let mut mass = vec![0.0; nd * nd];
        let mut stiff = vec![0.0; nd * nd];
        for q in 0..self.rule.len() {
            let w = self.rule.weights()[q] * geo.jac;
            let v = &self.values[q];
            let g = self.gradients_at(q, &geo.grad_lambda);
            for i in 0..nd {
                for j in 0..nd {
                    mass[i * nd + j] += w * v[i] * v[j];
                    stiff[i * nd + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        (mass, stiff)
    }
}

/// Value and barycentric partial derivatives of the Lagrange function
/// `Π_k Π_{l<α_k} (nλ_k − l)/(l + 1)`.
fn shape(n: usize, alpha: &[usize; 3], lam: [f64; 3]) -> (f64, [f64; 3]) {
    let mut f = [0.0; 3];
    let mut df = [0.0; 3];
    for k in 0..3 {
        let x = n as f64 * lam[k];
        let mut val = 1.0;
        let mut der = 0.0;
        for l in 0..alpha[k] {
            let c = 1.0 / (l + 1) as f64;
            let factor = (x - l as f64) * c;
            der = der * factor + val * n as f64 * c;
            val *= factor;
        }
        f[k] = val;
        df[k] = der;
    }
    let v = f[0] * f[1] * f[2];
    (v, [df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]])
}

/// Affine map data for one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub origin: [f64; 2],
    pub axes: [[f64; 2]; 2],
    /// Twice the area. Reference weights sum to 1/2.
    pub jac: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl Geometry {
    pub fn new(c: &[[f64; 2]; 3]) -> Self {
        let e1 = [c[1][0] - c[0][0], c[1][1] - c[0][1]];
        let e2 = [c[2][0] - c[0][0], c[2][1] - c[0][1]];
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let g1 = [e2[1] / det, -e2[0] / det];
        let g2 = [-e1[1] / det, e1[0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Self { origin: c[0], axes: [e1, e2], jac: det.abs(), grad_lambda: [g0, g1, g2] }
    }

    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + p[0] * self.axes[0][0] + p[1] * self.axes[1][0],
            self.origin[1] + p[0] * self.axes[0][1] + p[1] * self.axes[1][1],
        ]
    }
}

/// Continuous piecewise polynomial Lagrange space on a [`TriMesh`].
///
/// Degrees of freedom live on the refined lattice with `nM + 1` points per
/// side; dof `(P, Q)` has index `Q(nM + 1) + P`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<TriMesh>,
    element: LocalElement,
    dof_coords: Vec<[f64; 2]>,
    elem_dofs: Vec<Vec<usize>>,
    dirichlet_mask: Vec<bool>,
}

pub fn build_fe_space(mesh: Arc<TriMesh>, n: usize) -> Result<FeSpace> {
    let element = LocalElement::new(n)?;
    let cells = mesh.cells();
    let side = n * cells + 1;
    let hf = 1.0 / (n * cells) as f64;
    let mut dof_coords = Vec::with_capacity(side * side);
    let mut dirichlet_mask = Vec::with_capacity(side * side);
    for q in 0..side {
        for p in 0..side {
            dof_coords.push([p as f64 * hf, q as f64 * hf]);
            dirichlet_mask.push(p == 0 || q == 0 || p + 1 == side || q + 1 == side);
        }
    }
    let lattice: Vec<[usize; 2]> = mesh
        .vertices()
        .iter()
        .map(|v| [(v[0] * (n * cells) as f64).round() as usize, (v[1] * (n * cells) as f64).round() as usize])
        .collect();
    let elem_dofs = mesh
        .triangles()
        .iter()
        .map(|tri| {
            let corners = tri.map(|v| lattice[v]);
            element
                .indices()
                .iter()
                .map(|alpha| {
                    let mut pq = [0usize; 2];
                    for d in 0..2 {
                        let s: usize = (0..3).map(|k| alpha[k] * corners[k][d]).sum();
                        pq[d] = s / n;
                    }
                    pq[1] * side + pq[0]
                })
                .collect()
        })
        .collect();
    Ok(FeSpace { mesh, element, dof_coords, elem_dofs, dirichlet_mask })
}

impl FeSpace {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn element(&self) -> &LocalElement {
        &self.element
    }

    pub fn dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    pub fn elem_dofs(&self) -> &[Vec<usize>] {
        &self.elem_dofs
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet_mask
    }

    pub fn free_dofs(&self) -> usize {
        self.dirichlet_mask.iter().filter(|&&b| !b).count()
    }

    pub fn geometry(&self, e: usize) -> Geometry {
        let tri = self.mesh.triangles()[e];
        Geometry::new(&tri.map(|v| self.mesh.vertices()[v]))
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.dof_coords.iter().map(|p| f(p[0], p[1])).collect()
    }

    /// Evaluates the finite element function `coeffs` at a point of the
    /// closed unit square.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> f64 {
        let cells = self.mesh.cells();
        let sx = (x * cells as f64).clamp(0.0, cells as f64 - 1e-12);
        let sy = (y * cells as f64).clamp(0.0, cells as f64 - 1e-12);
        let (p, q) = (sx.floor() as usize, sy.floor() as usize);
        let (fx, fy) = (sx - p as f64, sy - q as f64);
        let e = 2 * (q * cells + p) + usize::from(fy > fx);
        let geo = self.geometry(e);
        let lam = geo.grad_lambda;
        let d = [x - geo.origin[0], y - geo.origin[1]];
        let l1 = lam[1][0] * d[0] + lam[1][1] * d[1];
        let l2 = lam[2][0] * d[0] + lam[2][1] * d[1];
        let vals = self.element.eval([1.0 - l1 - l2, l1, l2]);
        self.elem_dofs[e].iter().zip(&vals).map(|(&i, v)| coeffs[i] * v).sum()
    }
}
