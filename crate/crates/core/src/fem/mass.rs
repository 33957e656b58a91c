//! Sparse mass matrices and their solves.

use serde::{Deserialize, Serialize};

use super::mesh::{BoundaryMesh, FeMesh};
use super::shape::{line_values, shape_values};
use crate::error::{Error, Result};

/// Relative residual targeted by [`MassMatrix::solve`].
pub const MASS_TOL: f64 = 1e-12;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Sums duplicate `(row, col, value)` entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col[row.clone()].binary_search(&c) {
            Ok(k) => self.val[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[r] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.val[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .all(|k| (self.val[k] - self.get(self.col[k], r)).abs() <= tol)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassVariant {
    #[default]
    Consistent,
    Lumped,
}

/// Nodal mass matrix `M_lm = int phi_l phi_m dX`.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    pub variant: MassVariant,
    matrix: Csr,
    diag: Vec<f64>,
}

impl MassMatrix {
    pub fn identity(n: usize) -> Self {
        let t = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_csr(Csr::from_triplets(n, t), MassVariant::Consistent)
    }

    fn from_csr(matrix: Csr, variant: MassVariant) -> Self {
        let diag = matrix.diagonal();
        Self {
            variant,
            matrix,
            diag,
        }
    }

    /// Assembles with the mesh's assembly quadrature. The lumped variant uses
    /// row-sum lumping and fails when a row sum is not positive, as happens
    /// for the vertices of quadratic triangles.
    pub fn assemble(mesh: &FeMesh, variant: MassVariant) -> Result<Self> {
        let rule = mesh.assembly_rule();
        let npe = mesh.kind().nodes_per_element();
        let mut t = Vec::with_capacity(mesh.n_elements() * npe * npe);
        for e in 0..mesh.n_elements() {
            let conn = mesh.element(e);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let s = shape_values(mesh.kind(), *p);
                let dx = mesh.reference_measure(e, *p);
                if !(dx > 0.0) {
                    return Err(Error::DegenerateElement {
                        element: e,
                        reason: "zero reference measure".into(),
                    });
                }
                for a in 0..npe {
                    for b in 0..npe {
                        t.push((conn[a], conn[b], w * dx * s.phi[a] * s.phi[b]));
                    }
                }
            }
        }
        let consistent = Csr::from_triplets(mesh.n_nodes(), t);
        match variant {
            MassVariant::Consistent => Ok(Self::from_csr(consistent, variant)),
            MassVariant::Lumped => lump(consistent),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    pub fn csr(&self) -> &Csr {
        &self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix.get(r, c)
    }

    /// Sum of all entries, the measure of the domain.
    pub fn total(&self) -> f64 {
        self.matrix.val.iter().sum()
    }

    pub fn apply(&self, x: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        self.check_len(x.len())?;
        let mut out = vec![[0.0; 2]; x.len()];
        let mut xs = vec![0.0; x.len()];
        let mut ys = vec![0.0; x.len()];
        for d in 0..2 {
            for (k, v) in x.iter().enumerate() {
                xs[k] = v[d];
            }
            self.matrix.matvec(&xs, &mut ys);
            for (k, o) in out.iter_mut().enumerate() {
                o[d] = ys[k];
            }
        }
        Ok(out)
    }

    /// Solves `M x = rhs` for each vector component.
    pub fn solve(&self, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        self.check_len(rhs.len())?;
        let mut out = vec![[0.0; 2]; rhs.len()];
        let mut b = vec![0.0; rhs.len()];
        for d in 0..2 {
            for (k, v) in rhs.iter().enumerate() {
                b[k] = v[d];
            }
            let x = self.solve_scalar(&b)?;
            for (k, o) in out.iter_mut().enumerate() {
                o[d] = x[k];
            }
        }
        Ok(out)
    }

    /// Jacobi-preconditioned conjugate gradients to relative residual
    /// [`MASS_TOL`]. Lumped matrices are inverted directly.
    pub fn solve_scalar(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let n = b.len();
        if self.variant == MassVariant::Lumped {
            return Ok(b.iter().zip(&self.diag).map(|(b, d)| b / d).collect());
        }
        let bnorm = norm(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut q = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let max_iter = 10 * n + 100;
        for _ in 0..max_iter {
            self.matrix.matvec(&p, &mut q);
            let alpha = rz / dot(&p, &q);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            if norm(&r) <= MASS_TOL * bnorm {
                return Ok(x);
            }
            for k in 0..n {
                z[k] = r[k] / self.diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::SolverFailure {
            solver: "mass conjugate gradient",
            iterations: max_iter,
            residual: norm(&r) / bnorm,
        })
    }

    /// `U^T M V` summed over both components.
    pub fn inner_product(&self, u: &[[f64; 2]], v: &[[f64; 2]]) -> Result<f64> {
        self.check_len(u.len())?;
        let mv = self.apply(v)?;
        Ok(u.iter()
            .zip(&mv)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "mass matrix has {} rows, vector has {n}",
                self.n()
            )));
        }
        Ok(())
    }
}

fn lump(consistent: Csr) -> Result<MassMatrix> {
    let sums = consistent.row_sums();
    if let Some((node, s)) = sums.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "row-sum lumping gives a non-positive mass {s:e} at node {node}; use the consistent mass matrix"
        )));
    }
    let t = sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i, i, s))
        .collect();
    Ok(MassMatrix::from_csr(
        Csr::from_triplets(consistent.n, t),
        MassVariant::Lumped,
    ))
}

/// Mass matrix of the boundary trace space, indexed by boundary node.
pub fn assemble_boundary_mass(mesh: &FeMesh, bm: &BoundaryMesh) -> Result<MassMatrix> {
    let rule = bm.rule();
    let mut t = Vec::new();
    for f in &bm.facets {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let s = line_values(bm.kind, p[0]);
            let (_, da) = mesh.facet_geometry(f.element, f.local_facet, p[0]);
            if !(da > 0.0) {
                return Err(Error::DegenerateElement {
                    element: f.element,
                    reason: format!("zero-length boundary facet {}", f.local_facet),
                });
            }
            for a in 0..s.n {
                for b in 0..s.n {
                    t.push((f.local[a], f.local[b], w * da * s.phi[a] * s.phi[b]));
                }
            }
        }
    }
    Ok(MassMatrix::from_csr(
        Csr::from_triplets(bm.n_nodes(), t),
        MassVariant::Consistent,
    ))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_disc_mesh, build_shell_mesh, Configuration};
    use crate::fem::shape::ElementKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_quad() -> FeMesh {
        FeMesh::new(
            ElementKind::Q1Quad,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![0, 1, 2, 3],
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_quad_entries() {
        let m = MassMatrix::assemble(&unit_quad(), MassVariant::Consistent).unwrap();
        for i in 0..4 {
            assert!((m.get(i, i) - 1.0 / 9.0).abs() < 1e-15);
            assert!((m.get(i, (i + 1) % 4) - 1.0 / 18.0).abs() < 1e-15);
            assert!((m.get(i, (i + 2) % 4) - 1.0 / 36.0).abs() < 1e-15);
        }
        assert!((m.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lumped_is_row_sums() {
        let mesh = unit_quad();
        let c = MassMatrix::assemble(&mesh, MassVariant::Consistent).unwrap();
        let l = MassMatrix::assemble(&mesh, MassVariant::Lumped).unwrap();
        let sums = c.csr().row_sums();
        for i in 0..4 {
            assert!((l.get(i, i) - sums[i]).abs() < 1e-15);
            assert_eq!(l.get(i, (i + 1) % 4), 0.0);
        }
        let x = l.solve(&[[1.0, 2.0]; 4]).unwrap();
        assert!((x[0][0] - 4.0).abs() < 1e-14 && (x[0][1] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn lumped_quadratic_triangles_rejected() {
        let mesh = build_disc_mesh(0.2, [0.0, 0.0], 0.05).unwrap();
        assert!(MassMatrix::assemble(&mesh, MassVariant::Lumped).is_err());
    }

    #[test]
    fn solve_round_trip() {
        let (mesh, _) = build_shell_mesh(0.25, 0.0625, 4, 0.0).unwrap();
        let m = MassMatrix::assemble(&mesh, MassVariant::Consistent).unwrap();
        assert!(m.csr().is_symmetric(1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<[f64; 2]> = (0..m.n())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let b = m.apply(&x).unwrap();
        let y = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        }
        let zero = m.solve(&vec![[0.0; 2]; m.n()]).unwrap();
        assert!(zero.iter().all(|v| *v == [0.0, 0.0]));
        assert!(m.solve(&[[1.0, 0.0]]).is_err());
    }

    #[test]
    fn disc_inner_product_is_area() {
        let mesh = build_disc_mesh(0.2, [0.6, 0.5], 1.0 / 64.0).unwrap();
        let m = MassMatrix::assemble(&mesh, MassVariant::Consistent).unwrap();
        let ones = vec![[1.0, 0.0]; m.n()];
        let a = m.inner_product(&ones, &ones).unwrap();
        let exact = std::f64::consts::PI * 0.04;
        assert!((a - exact).abs() / exact < 0.01);
        assert!((m.total() - mesh.reference_area()).abs() < 1e-12);
        let c = Configuration::identity(&mesh);
        let ab = m.inner_product(&c.chi, &ones).unwrap();
        let ba = m.inner_product(&ones, &c.chi).unwrap();
        assert!((ab - ba).abs() < 1e-14);
    }
}
