use std::collections::HashSet;

use crate::error::{ensure_arg, Result};

/// Structured triangulation of the unit square: `M × M` squares, each cut
/// along the diagonal from its lower-left to its upper-right corner.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    cells: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
}

pub fn build_unit_square_mesh(cells: usize) -> Result<TriMesh> {
    ensure_arg!(cells >= 1, "mesh needs at least one cell per side");
    let side = cells + 1;
    let h = 1.0 / cells as f64;
    let mut vertices = Vec::with_capacity(side * side);
    let mut boundary_vertex = Vec::with_capacity(side * side);
    for q in 0..side {
        for p in 0..side {
            vertices.push([p as f64 * h, q as f64 * h]);
            boundary_vertex.push(p == 0 || q == 0 || p == cells || q == cells);
        }
    }
    let id = |p: usize, q: usize| q * side + p;
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for q in 0..cells {
        for p in 0..cells {
            let (v0, v1, v2, v3) = (id(p, q), id(p + 1, q), id(p + 1, q + 1), id(p, q + 1));
            triangles.push([v0, v1, v2]);
            triangles.push([v0, v2, v3]);
        }
    }
    Ok(TriMesh { cells, vertices, triangles, boundary_vertex })
}

impl TriMesh {
    /// Squares per side.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_vertex(&self) -> &[bool] {
        &self.boundary_vertex
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.cells as f64
    }

    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_count(&self) -> usize {
        let mut edges = HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }
}
