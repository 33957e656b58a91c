//! Lagrangian finite-element structure: reference elements, quadrature,
//! meshes and mass matrices.

pub mod mass;
pub mod mesh;
pub mod quadrature;
pub mod shape;

pub use mass::{Csr, MassMatrix, MassVariant};
pub use mesh::{BoundaryMesh, Configuration, FeMesh};
pub use quadrature::QuadratureRule;
pub use shape::{ElementKind, FacetKind, ShapeEval};

/// Row-major 2x2 matrix, `m[i][j]`.
pub type Mat2 = [[f64; 2]; 2];

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Inverse, or `None` when the determinant vanishes.
pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn matvec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}
