//! Direct solvers for `(a - b Lap_h) x = r` on one staggered component or on
//! cell centers, by diagonalizing the 1D second-difference operator along
//! each axis with a fast trigonometric transform.
//!
//! Each axis has one of the following closures (`T` is the 1D second
//! difference, `lambda_k` its eigenvalues):
//!
//! | basis | unknowns | forward | inverse | `lambda_k + 2` |
//! |---|---|---|---|---|
//! | periodic | `n` | FFT | IFFT / n | `2 cos(2 pi k / n)` |
//! | Dirichlet at both end nodes | `n - 1` interior nodes | DST-I | DST-I 2/n | `2 cos(pi (k+1) / n)` |
//! | Dirichlet at both half points | `n` | DST-II | DST-III 2/n | `2 cos(pi (k+1) / n)` |
//! | Neumann at both half points | `n` | DCT-II | DCT-III 2/n | `2 cos(pi k / n)` |
//! | Neumann half / Dirichlet half | `n` | DCT-IV | DCT-IV 2/n | `2 cos(pi (k+1/2) / n)` |
//! | Dirichlet node / Neumann node | `n` nodes `1..=n` | DST-III 2/n | DST-II | `2 cos(pi (k+1/2) / n)` |
//!
//! The last two also exist mirrored (`reversed`).

use std::sync::Arc;

use rustdct::{DctPlanner, Dst1, TransformType2And3, TransformType4};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Closure, GridSpec, Plane, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Periodic,
    DirichletNode,
    DirichletHalf,
    NeumannHalf,
    NeumannHalfDirichletHalf,
    DirichletNodeNeumannNode,
}

/// Basis along one axis of a stored line of `count` entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSpec {
    pub basis: Basis,
    /// Mirror the closure: the "low" condition applies at the high end.
    pub reversed: bool,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(basis: Basis, count: usize) -> Self {
        Self {
            basis,
            reversed: false,
            count,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = true;
        self
    }

    /// Index range of the unknowns within the stored line.
    pub fn unknowns(&self) -> std::ops::Range<usize> {
        match self.basis {
            Basis::DirichletNode => 1..self.count - 1,
            Basis::DirichletNodeNeumannNode if self.reversed => 0..self.count - 1,
            Basis::DirichletNodeNeumannNode => 1..self.count,
            _ => 0..self.count,
        }
    }

    fn n(&self) -> usize {
        match self.basis {
            Basis::DirichletNode | Basis::DirichletNodeNeumannNode => self.count - 1,
            _ => self.count,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        use std::f64::consts::PI;
        let n = self.n() as f64;
        let len = self.unknowns().len();
        (0..len)
            .map(|k| {
                let k = k as f64;
                let theta = match self.basis {
                    Basis::Periodic => 2.0 * PI * k / n,
                    Basis::DirichletNode | Basis::DirichletHalf => PI * (k + 1.0) / n,
                    Basis::NeumannHalf => PI * k / n,
                    Basis::NeumannHalfDirichletHalf | Basis::DirichletNodeNeumannNode => {
                        PI * (k + 0.5) / n
                    }
                };
                if k == 0.0 && matches!(self.basis, Basis::Periodic | Basis::NeumannHalf) {
                    0.0
                } else {
                    2.0 * theta.cos() - 2.0
                }
            })
            .collect()
    }
}

enum Plan {
    Fft(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    Dst1(Arc<dyn Dst1<f64>>),
    Type23(Arc<dyn TransformType2And3<f64>>),
    Type4(Arc<dyn TransformType4<f64>>),
}

struct AxisTransform {
    spec: AxisSpec,
    len: usize,
    lambda: Vec<f64>,
    plan: Plan,
}

impl AxisTransform {
    fn new(spec: AxisSpec, dct: &mut DctPlanner<f64>, fft: &mut FftPlanner<f64>) -> Result<Self> {
        let len = spec.unknowns().len();
        if len == 0 {
            return Err(Error::InvalidArgument("axis has no unknowns".into()));
        }
        let plan = match spec.basis {
            Basis::Periodic => Plan::Fft(fft.plan_fft_forward(len), fft.plan_fft_inverse(len)),
            Basis::DirichletNode => Plan::Dst1(dct.plan_dst1(len)),
            Basis::DirichletHalf | Basis::NeumannHalf | Basis::DirichletNodeNeumannNode => {
                Plan::Type23(dct.plan_dct2(len))
            }
            Basis::NeumannHalfDirichletHalf => Plan::Type4(dct.plan_dct4(len)),
        };
        Ok(Self {
            spec,
            len,
            lambda: spec.eigenvalues(),
            plan,
        })
    }

    fn forward_real(&self, x: &mut [f64]) {
        if self.spec.reversed {
            x.reverse();
        }
        let scale = 2.0 / self.spec.n() as f64;
        match (&self.plan, self.spec.basis) {
            (Plan::Dst1(p), _) => p.process_dst1(x),
            (Plan::Type23(p), Basis::DirichletHalf) => p.process_dst2(x),
            (Plan::Type23(p), Basis::NeumannHalf) => p.process_dct2(x),
            (Plan::Type23(p), _) => {
                p.process_dst3(x);
                x.iter_mut().for_each(|v| *v *= scale);
            }
            (Plan::Type4(p), _) => p.process_dct4(x),
            (Plan::Fft(..), _) => unreachable!("periodic axes use the complex path"),
        }
    }

    fn inverse_real(&self, x: &mut [f64]) {
        let scale = 2.0 / self.spec.n() as f64;
        match (&self.plan, self.spec.basis) {
            (Plan::Dst1(p), _) => {
                p.process_dst1(x);
                x.iter_mut().for_each(|v| *v *= scale);
            }
            (Plan::Type23(p), Basis::DirichletHalf) => {
                p.process_dst3(x);
                x.iter_mut().for_each(|v| *v *= scale);
            }
            (Plan::Type23(p), Basis::NeumannHalf) => {
                p.process_dct3(x);
                x.iter_mut().for_each(|v| *v *= scale);
            }
            (Plan::Type23(p), _) => p.process_dst2(x),
            (Plan::Type4(p), _) => {
                p.process_dct4(x);
                x.iter_mut().for_each(|v| *v *= scale);
            }
            (Plan::Fft(..), _) => unreachable!("periodic axes use the complex path"),
        }
        if self.spec.reversed {
            x.reverse();
        }
    }

    fn forward_complex(&self, x: &mut [Complex64], re: &mut [f64], im: &mut [f64]) {
        match &self.plan {
            Plan::Fft(f, _) => f.process(x),
            _ => self.real_parts(x, re, im, true),
        }
    }

    fn inverse_complex(&self, x: &mut [Complex64], re: &mut [f64], im: &mut [f64]) {
        match &self.plan {
            Plan::Fft(_, b) => {
                b.process(x);
                let s = 1.0 / self.len as f64;
                x.iter_mut().for_each(|v| *v *= s);
            }
            _ => self.real_parts(x, re, im, false),
        }
    }

    fn real_parts(&self, x: &mut [Complex64], re: &mut [f64], im: &mut [f64], forward: bool) {
        for (k, v) in x.iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        if forward {
            self.forward_real(re);
            self.forward_real(im);
        } else {
            self.inverse_real(re);
            self.inverse_real(im);
        }
        for (k, v) in x.iter_mut().enumerate() {
            *v = Complex64::new(re[k], im[k]);
        }
    }
}

/// Separable solver for one stored plane layout.
pub struct SeparableSolver {
    nx: usize,
    ny: usize,
    h: f64,
    x: AxisTransform,
    y: AxisTransform,
}

impl std::fmt::Debug for SeparableSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableSolver")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("x", &self.x.spec)
            .field("y", &self.y.spec)
            .finish()
    }
}

impl SeparableSolver {
    pub fn new(x: AxisSpec, y: AxisSpec, h: f64) -> Result<Self> {
        let mut dct = DctPlanner::new();
        let mut fft = FftPlanner::new();
        Ok(Self {
            nx: x.count,
            ny: y.count,
            h,
            x: AxisTransform::new(x, &mut dct, &mut fft)?,
            y: AxisTransform::new(y, &mut dct, &mut fft)?,
        })
    }

    /// Solver for velocity component `c` with homogeneous boundary data.
    pub fn for_component(grid: &GridSpec, c: usize) -> Result<Self> {
        let (nx, ny) = grid.component_dims(c);
        let ax = component_axis(grid, c, 0, nx)?;
        let ay = component_axis(grid, c, 1, ny)?;
        Self::new(ax, ay, grid.h)
    }

    /// Solver for cell-centered fields with the pressure closures implied
    /// by the velocity boundary conditions.
    pub fn for_cells(grid: &GridSpec) -> Result<Self> {
        let ax = cell_axis(grid, 0, grid.n1)?;
        let ay = cell_axis(grid, 1, grid.n2)?;
        Self::new(ax, ay, grid.h)
    }

    pub fn axes(&self) -> (AxisSpec, AxisSpec) {
        (self.x.spec, self.y.spec)
    }

    /// Solves `(a - b Lap_h) x = r` on the unknowns; other entries of the
    /// result are zero. Modes with a zero symbol are set to zero.
    pub fn solve(&self, r: &Plane, a: f64, b: f64) -> Plane {
        assert_eq!(
            (r.nx, r.ny),
            (self.nx, self.ny),
            "plane does not match solver layout"
        );
        let periodic = self.x.spec.basis == Basis::Periodic || self.y.spec.basis == Basis::Periodic;
        if periodic {
            self.solve_complex(r, a, b)
        } else {
            self.solve_real(r, a, b)
        }
    }

    fn symbol(&self, kx: usize, ky: usize, a: f64, b: f64) -> f64 {
        a - b * (self.x.lambda[kx] + self.y.lambda[ky]) / (self.h * self.h)
    }

    fn solve_real(&self, r: &Plane, a: f64, b: f64) -> Plane {
        let (rx, ry) = (self.x.spec.unknowns(), self.y.spec.unknowns());
        let (lx, ly) = (rx.len(), ry.len());
        let mut buf = vec![0.0; lx * ly];
        for (jj, j) in ry.clone().enumerate() {
            let row = &mut buf[jj * lx..(jj + 1) * lx];
            row.copy_from_slice(&r.data[j * r.nx + rx.start..j * r.nx + rx.end]);
            self.x.forward_real(row);
        }
        let mut col = vec![0.0; ly];
        for i in 0..lx {
            for (jj, v) in col.iter_mut().enumerate() {
                *v = buf[jj * lx + i];
            }
            self.y.forward_real(&mut col);
            for (jj, v) in col.iter_mut().enumerate() {
                let s = self.symbol(i, jj, a, b);
                *v = if s == 0.0 { 0.0 } else { *v / s };
            }
            self.y.inverse_real(&mut col);
            for (jj, v) in col.iter().enumerate() {
                buf[jj * lx + i] = *v;
            }
        }
        let mut out = Plane::zeros(self.nx, self.ny);
        for (jj, j) in ry.enumerate() {
            let row = &mut buf[jj * lx..(jj + 1) * lx];
            self.x.inverse_real(row);
            out.data[j * self.nx + rx.start..j * self.nx + rx.end].copy_from_slice(row);
        }
        out
    }

    fn solve_complex(&self, r: &Plane, a: f64, b: f64) -> Plane {
        let (rx, ry) = (self.x.spec.unknowns(), self.y.spec.unknowns());
        let (lx, ly) = (rx.len(), ry.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); lx * ly];
        let m = lx.max(ly);
        let (mut re, mut im) = (vec![0.0; m], vec![0.0; m]);
        for (jj, j) in ry.clone().enumerate() {
            let row = &mut buf[jj * lx..(jj + 1) * lx];
            for (k, i) in rx.clone().enumerate() {
                row[k] = Complex64::new(r.at(i, j), 0.0);
            }
            self.x.forward_complex(row, &mut re[..lx], &mut im[..lx]);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); ly];
        for i in 0..lx {
            for (jj, v) in col.iter_mut().enumerate() {
                *v = buf[jj * lx + i];
            }
            self.y
                .forward_complex(&mut col, &mut re[..ly], &mut im[..ly]);
            for (jj, v) in col.iter_mut().enumerate() {
                let s = self.symbol(i, jj, a, b);
                *v = if s == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    *v / s
                };
            }
            self.y
                .inverse_complex(&mut col, &mut re[..ly], &mut im[..ly]);
            for (jj, v) in col.iter().enumerate() {
                buf[jj * lx + i] = *v;
            }
        }
        let mut out = Plane::zeros(self.nx, self.ny);
        for (jj, j) in ry.enumerate() {
            let row = &mut buf[jj * lx..(jj + 1) * lx];
            self.x.inverse_complex(row, &mut re[..lx], &mut im[..lx]);
            for (k, i) in rx.clone().enumerate() {
                out.set(i, j, row[k].re);
            }
        }
        out
    }
}

fn sides(axis: usize) -> (Side, Side) {
    if axis == 0 {
        (Side::Left, Side::Right)
    } else {
        (Side::Bottom, Side::Top)
    }
}

fn unsupported(what: &str, lo: Closure, hi: Closure) -> Error {
    Error::InvalidArgument(format!(
        "no fast solver for {what} with closures {lo:?} / {hi:?}"
    ))
}

fn component_axis(grid: &GridSpec, c: usize, axis: usize, count: usize) -> Result<AxisSpec> {
    let (lo_side, hi_side) = sides(axis);
    let (lo, hi) = (grid.closure(c, lo_side), grid.closure(c, hi_side));
    use Closure::*;
    let spec = match (lo, hi) {
        (Periodic, Periodic) => AxisSpec::new(Basis::Periodic, count),
        (NormalFixed, NormalFixed) => AxisSpec::new(Basis::DirichletNode, count),
        (NormalFixed, NormalFree) => AxisSpec::new(Basis::DirichletNodeNeumannNode, count),
        (NormalFree, NormalFixed) => {
            AxisSpec::new(Basis::DirichletNodeNeumannNode, count).reversed()
        }
        (TangentialDirichlet(_), TangentialDirichlet(_)) => {
            AxisSpec::new(Basis::DirichletHalf, count)
        }
        (TangentialNeumann, TangentialNeumann) => AxisSpec::new(Basis::NeumannHalf, count),
        (TangentialNeumann, TangentialDirichlet(_)) => {
            AxisSpec::new(Basis::NeumannHalfDirichletHalf, count)
        }
        (TangentialDirichlet(_), TangentialNeumann) => {
            AxisSpec::new(Basis::NeumannHalfDirichletHalf, count).reversed()
        }
        _ => return Err(unsupported("a velocity component", lo, hi)),
    };
    Ok(spec)
}

fn cell_axis(grid: &GridSpec, axis: usize, count: usize) -> Result<AxisSpec> {
    let (lo_side, hi_side) = sides(axis);
    let (lo, hi) = (grid.closure(axis, lo_side), grid.closure(axis, hi_side));
    use Closure::*;
    let spec = match (lo, hi) {
        (Periodic, Periodic) => AxisSpec::new(Basis::Periodic, count),
        (NormalFixed, NormalFixed) => AxisSpec::new(Basis::NeumannHalf, count),
        (NormalFree, NormalFree) => AxisSpec::new(Basis::DirichletHalf, count),
        (NormalFixed, NormalFree) => AxisSpec::new(Basis::NeumannHalfDirichletHalf, count),
        (NormalFree, NormalFixed) => {
            AxisSpec::new(Basis::NeumannHalfDirichletHalf, count).reversed()
        }
        _ => return Err(unsupported("the pressure", lo, hi)),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryCondition, CellField, StaggeredField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explicit 1D second difference on the unknowns of `spec`, with the
    /// closure written out entry by entry.
    fn explicit_t(spec: AxisSpec, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut y = vec![0.0; n];
        let mut v: Vec<f64> = x.to_vec();
        if spec.reversed {
            v.reverse();
        }
        for i in 0..n {
            let (left, right) = match spec.basis {
                Basis::Periodic => (v[(i + n - 1) % n], v[(i + 1) % n]),
                Basis::DirichletNode => (
                    if i == 0 { 0.0 } else { v[i - 1] },
                    if i + 1 == n { 0.0 } else { v[i + 1] },
                ),
                Basis::DirichletHalf => (
                    if i == 0 { -v[0] } else { v[i - 1] },
                    if i + 1 == n { -v[n - 1] } else { v[i + 1] },
                ),
                Basis::NeumannHalf => (
                    if i == 0 { v[0] } else { v[i - 1] },
                    if i + 1 == n { v[n - 1] } else { v[i + 1] },
                ),
                Basis::NeumannHalfDirichletHalf => (
                    if i == 0 { v[0] } else { v[i - 1] },
                    if i + 1 == n { -v[n - 1] } else { v[i + 1] },
                ),
                Basis::DirichletNodeNeumannNode => (
                    if i == 0 { 0.0 } else { v[i - 1] },
                    if i + 1 == n { v[n - 2] } else { v[i + 1] },
                ),
            };
            y[i] = left + right - 2.0 * v[i];
        }
        if spec.reversed {
            y.reverse();
        }
        y
    }

    const ALL: [Basis; 6] = [
        Basis::Periodic,
        Basis::DirichletNode,
        Basis::DirichletHalf,
        Basis::NeumannHalf,
        Basis::NeumannHalfDirichletHalf,
        Basis::DirichletNodeNeumannNode,
    ];

    #[test]
    fn one_dimensional_bases_invert_their_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in ALL {
            for reversed in [false, true] {
                for count in [5usize, 8, 13] {
                    let mut sx = AxisSpec::new(basis, count);
                    if reversed {
                        sx = sx.reversed();
                    }
                    let sy = AxisSpec::new(Basis::DirichletHalf, 1);
                    let solver = SeparableSolver::new(sx, sy, 1.0).unwrap();
                    let len = sx.unknowns().len();
                    let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    // y axis of length one contributes lambda = 2 cos(pi) - 2 = -4
                    let tx = explicit_t(sx, &x);
                    let a = 0.7;
                    let mut r = Plane::zeros(count, 1);
                    for (k, i) in sx.unknowns().enumerate() {
                        r.data[i] = a * x[k] - (tx[k] - 4.0 * x[k]);
                    }
                    let sol = solver.solve(&r, a, 1.0);
                    for (k, i) in sx.unknowns().enumerate() {
                        assert!(
                            (sol.data[i] - x[k]).abs() < 1e-12,
                            "{basis:?} reversed={reversed} n={count}: {} vs {}",
                            sol.data[i],
                            x[k]
                        );
                    }
                }
            }
        }
    }

    fn grid_with(bc: [BoundaryCondition; 4], n1: usize, n2: usize) -> GridSpec {
        GridSpec::new(n1, n2, [0.0, 0.0], 1.0 / n1 as f64, bc).unwrap()
    }

    fn test_grids() -> Vec<GridSpec> {
        use BoundaryCondition::*;
        let wall = Velocity { u1: 0.0, u2: 0.0 };
        vec![
            GridSpec::periodic_unit(16).unwrap(),
            grid_with([wall; 4], 12, 12),
            grid_with([wall, Outflow, Slip, Slip], 16, 12),
            grid_with([Periodic, Periodic, wall, wall], 16, 8),
            grid_with([Outflow, wall, Slip, Slip], 10, 10),
        ]
    }

    #[test]
    fn helmholtz_matches_grid_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for grid in test_grids() {
            let mut u = grid.zero_velocity();
            for c in 0..2 {
                let p = u.component_mut(c);
                for v in p.data.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
            let mask = grid.fixed_mask();
            for c in 0..2 {
                let p = u.component_mut(c);
                for (v, m) in p.data.iter_mut().zip(&mask[c]) {
                    if *m {
                        *v = 0.0;
                    }
                }
            }
            let mut lap = grid.zero_velocity();
            grid.laplacian_into(&u, &mut lap, true);
            let (a, b) = (3.0, 0.25);
            let mut r = StaggeredField {
                c1: u.c1.clone(),
                c2: u.c2.clone(),
            };
            for c in 0..2 {
                let rp = r.component_mut(c);
                let lp = lap.component(c);
                for k in 0..rp.data.len() {
                    rp.data[k] = a * rp.data[k] - b * lp.data[k];
                }
            }
            for c in 0..2 {
                let solver = SeparableSolver::for_component(&grid, c).unwrap();
                let sol = solver.solve(r.component(c), a, b);
                let diff = sol
                    .data
                    .iter()
                    .zip(&u.component(c).data)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-11, "{:?} component {c}: {diff}", grid.bc);
            }
        }
    }

    #[test]
    fn poisson_matches_cell_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for grid in test_grids() {
            let mut p = grid.zero_cells();
            for v in p.values.data.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let solver = SeparableSolver::for_cells(&grid).unwrap();
            let singular =
                solver.axes().0.eigenvalues()[0] == 0.0 && solver.axes().1.eigenvalues()[0] == 0.0;
            if singular {
                p.remove_mean();
            }
            let lap = grid.cell_laplacian(&p).unwrap();
            let sol = solver.solve(&lap.values, 0.0, -1.0);
            let mut sol = CellField { values: sol };
            if singular {
                sol.remove_mean();
            }
            let diff = sol
                .values
                .data
                .iter()
                .zip(&p.values.data)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "{:?}: {diff}", grid.bc);
        }
    }
}
