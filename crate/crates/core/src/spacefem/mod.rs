//! Continuous Lagrange finite elements on the unit square.

mod assemble;
mod mesh;
mod space;
mod sparse;

pub use assemble::{
    apply_mask, assemble_operators, energy, gradient_load, l2_projection, load_vector, ritz_projection,
    solve_dirichlet, spatial_error, Norm, Operators,
};
pub use mesh::{build_unit_square_mesh, TriMesh};
pub use space::{build_fe_space, FeSpace, Geometry, LocalElement, TriangleRule, MAX_SPACE_DEGREE};
pub use sparse::{gmres, sparse_solve, sparse_solve_from, Ilu0, SparseMatrix};
