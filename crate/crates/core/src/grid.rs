//! Staggered (MAC) Cartesian grid: storage, boundary closures and the
//! second-order divergence, gradient and Laplace operators.
//!
//! Layout: pressure lives at cell centers `(i + 1/2, j + 1/2) h`, the x1
//! velocity component on x1-faces `(i h, (j + 1/2) h)` and the x2 component
//! on x2-faces `((i + 1/2) h, j h)`, all relative to `origin`.
//!
//! Every component is a [`Plane`] stored row-major with `index = j * nx + i`.
//! Along a periodic axis a component has `n` entries (no duplicated face);
//! along a bounded axis the normal component has `n + 1` entries, the first
//! and last of which sit on the physical boundary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::AxisLayout;

/// Number of ghost layers produced by [`GridSpec::pad`].
pub const GHOSTS: usize = 3;

/// Physical boundary condition on one side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Periodic,
    /// Prescribed velocity vector.
    Velocity {
        u1: f64,
        u2: f64,
    },
    /// Zero normal traction and zero tangential velocity.
    Outflow,
    /// Zero normal velocity and zero tangential traction.
    Slip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

/// Closure applied to one component along one axis at one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    Periodic,
    /// Normal component, boundary face stored and prescribed.
    NormalFixed,
    /// Normal component, boundary face stored and solved for; even reflection.
    NormalFree,
    /// Tangential component, value prescribed half a cell outside the last row.
    TangentialDirichlet(f64),
    /// Tangential component, zero normal derivative.
    TangentialNeumann,
}

/// Dense 2D array, row-major with `index = j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] += v;
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }
}

/// Face-centered vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField {
    pub c1: Plane,
    pub c2: Plane,
}

impl StaggeredField {
    pub fn component(&self, c: usize) -> &Plane {
        if c == 0 {
            &self.c1
        } else {
            &self.c2
        }
    }

    pub fn component_mut(&mut self, c: usize) -> &mut Plane {
        if c == 0 {
            &mut self.c1
        } else {
            &mut self.c2
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.max_abs().max(self.c2.max_abs())
    }

    pub fn scale(&mut self, a: f64) {
        self.c1.data.iter_mut().for_each(|v| *v *= a);
        self.c2.data.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &StaggeredField) {
        for (x, y) in self.c1.data.iter_mut().zip(&other.c1.data) {
            *x += a * y;
        }
        for (x, y) in self.c2.data.iter_mut().zip(&other.c2.data) {
            *x += a * y;
        }
    }

    pub fn len(&self) -> usize {
        self.c1.data.len() + self.c2.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.c1
            .data
            .iter()
            .chain(&self.c2.data)
            .all(|v| v.is_finite())
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Plane,
}

impl CellField {
    pub fn max_abs(&self) -> f64 {
        self.values.max_abs()
    }

    pub fn mean(&self) -> f64 {
        self.values.data.iter().sum::<f64>() / self.values.data.len() as f64
    }

    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.data.iter_mut().for_each(|v| *v -= m);
    }
}

/// Uniform square-cell grid and its boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub origin: [f64; 2],
    pub h: f64,
    /// Left, right, bottom, top.
    pub bc: [BoundaryCondition; 4],
}

impl GridSpec {
    pub fn new(
        n1: usize,
        n2: usize,
        origin: [f64; 2],
        h: f64,
        bc: [BoundaryCondition; 4],
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        if n1 < 4 || n2 < 4 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 4 cells per direction, got {n1}x{n2}"
            )));
        }
        use BoundaryCondition::Periodic;
        let px = (bc[0] == Periodic, bc[1] == Periodic);
        let py = (bc[2] == Periodic, bc[3] == Periodic);
        if px.0 != px.1 || py.0 != py.1 {
            return Err(Error::InvalidArgument(
                "periodic boundaries must come in matching pairs".into(),
            ));
        }
        Ok(Self {
            n1,
            n2,
            origin,
            h,
            bc,
        })
    }

    /// Doubly periodic `n x n` grid on the unit square.
    pub fn periodic_unit(n: usize) -> Result<Self> {
        Self::new(
            n,
            n,
            [0.0, 0.0],
            1.0 / n as f64,
            [BoundaryCondition::Periodic; 4],
        )
    }

    pub fn periodic_x(&self) -> bool {
        self.bc[0] == BoundaryCondition::Periodic
    }

    pub fn periodic_y(&self) -> bool {
        self.bc[2] == BoundaryCondition::Periodic
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic_x() && self.periodic_y()
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.n1 as f64 * self.h, self.n2 as f64 * self.h]
    }

    pub fn area(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1]
    }

    /// Array dimensions of component `c` (0 = x1, 1 = x2).
    pub fn component_dims(&self, c: usize) -> (usize, usize) {
        if c == 0 {
            (
                if self.periodic_x() {
                    self.n1
                } else {
                    self.n1 + 1
                },
                self.n2,
            )
        } else {
            (
                self.n1,
                if self.periodic_y() {
                    self.n2
                } else {
                    self.n2 + 1
                },
            )
        }
    }

    pub fn zero_velocity(&self) -> StaggeredField {
        let (a, b) = self.component_dims(0);
        let (c, d) = self.component_dims(1);
        StaggeredField {
            c1: Plane::zeros(a, b),
            c2: Plane::zeros(c, d),
        }
    }

    pub fn zero_cells(&self) -> CellField {
        CellField {
            values: Plane::zeros(self.n1, self.n2),
        }
    }

    /// Physical position of entry `(i, j)` of component `c`.
    pub fn face_position(&self, c: usize, i: usize, j: usize) -> [f64; 2] {
        let h = self.h;
        if c == 0 {
            [
                self.origin[0] + i as f64 * h,
                self.origin[1] + (j as f64 + 0.5) * h,
            ]
        } else {
            [
                self.origin[0] + (i as f64 + 0.5) * h,
                self.origin[1] + j as f64 * h,
            ]
        }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Sample a vector function at the faces.
    pub fn sample_velocity(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> StaggeredField {
        let (a, b) = self.component_dims(0);
        let (c, d) = self.component_dims(1);
        StaggeredField {
            c1: Plane::from_fn(a, b, |i, j| f(self.face_position(0, i, j))[0]),
            c2: Plane::from_fn(c, d, |i, j| f(self.face_position(1, i, j))[1]),
        }
    }

    pub fn sample_cells(&self, f: impl Fn([f64; 2]) -> f64) -> CellField {
        CellField {
            values: Plane::from_fn(self.n1, self.n2, |i, j| f(self.cell_center(i, j))),
        }
    }

    /// Kernel layouts (x axis, y axis) for component `c`.
    pub fn component_axes(&self, c: usize) -> (AxisLayout, AxisLayout) {
        let (nx, ny) = self.component_dims(c);
        let (ox, oy) = if c == 0 { (0.0, 0.5) } else { (0.5, 0.0) };
        (
            AxisLayout {
                origin: self.origin[0],
                h: self.h,
                offset: ox,
                count: nx,
                periodic: self.periodic_x(),
            },
            AxisLayout {
                origin: self.origin[1],
                h: self.h,
                offset: oy,
                count: ny,
                periodic: self.periodic_y(),
            },
        )
    }

    /// Closure of component `c` on `side`.
    pub fn closure(&self, c: usize, side: Side) -> Closure {
        let bc = self.bc[side as usize];
        let normal_axis = match side {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        };
        match bc {
            BoundaryCondition::Periodic => Closure::Periodic,
            BoundaryCondition::Velocity { u1, u2 } => {
                if c == normal_axis {
                    Closure::NormalFixed
                } else {
                    Closure::TangentialDirichlet(if c == 0 { u1 } else { u2 })
                }
            }
            BoundaryCondition::Outflow => {
                if c == normal_axis {
                    Closure::NormalFree
                } else {
                    Closure::TangentialDirichlet(0.0)
                }
            }
            BoundaryCondition::Slip => {
                if c == normal_axis {
                    Closure::NormalFixed
                } else {
                    Closure::TangentialNeumann
                }
            }
        }
    }

    /// Prescribed value of the boundary face of component `c` on `side`,
    /// if that face is a fixed degree of freedom.
    pub fn fixed_normal_value(&self, side: Side) -> Option<f64> {
        match self.bc[side as usize] {
            BoundaryCondition::Velocity { u1, u2 } => match side {
                Side::Left | Side::Right => Some(u1),
                Side::Bottom | Side::Top => Some(u2),
            },
            BoundaryCondition::Slip => Some(0.0),
            _ => None,
        }
    }

    /// Whether entry `(i, j)` of component `c` is a prescribed boundary face.
    #[inline]
    pub fn is_fixed(&self, c: usize, i: usize, j: usize) -> bool {
        let (nx, ny) = self.component_dims(c);
        if c == 0 {
            (i == 0 && self.closure(0, Side::Left) == Closure::NormalFixed)
                || (i == nx - 1 && self.closure(0, Side::Right) == Closure::NormalFixed)
        } else {
            (j == 0 && self.closure(1, Side::Bottom) == Closure::NormalFixed)
                || (j == ny - 1 && self.closure(1, Side::Top) == Closure::NormalFixed)
        }
    }

    /// Mask of prescribed faces per component.
    pub fn fixed_mask(&self) -> [Vec<bool>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let (nx, ny) = self.component_dims(c);
            let mut m = vec![false; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    m[j * nx + i] = self.is_fixed(c, i, j);
                }
            }
            out[c] = m;
        }
        out
    }

    /// Overwrite prescribed boundary faces with their boundary values.
    pub fn apply_velocity_bc(&self, u: &mut StaggeredField) {
        if !self.periodic_x() {
            let nx = u.c1.nx;
            for (side, i) in [(Side::Left, 0), (Side::Right, nx - 1)] {
                if let Some(v) = self.fixed_normal_value(side) {
                    for j in 0..u.c1.ny {
                        u.c1.set(i, j, v);
                    }
                }
            }
        }
        if !self.periodic_y() {
            let ny = u.c2.ny;
            for (side, j) in [(Side::Bottom, 0), (Side::Top, ny - 1)] {
                if let Some(v) = self.fixed_normal_value(side) {
                    for i in 0..u.c2.nx {
                        u.c2.set(i, j, v);
                    }
                }
            }
        }
    }

    /// Inner-product weight of entry `(i, j)` of component `c`: one half on
    /// stored boundary faces, one elsewhere.
    #[inline]
    pub fn face_weight(&self, c: usize, i: usize, j: usize) -> f64 {
        let (nx, ny) = self.component_dims(c);
        let boundary = if c == 0 {
            !self.periodic_x() && (i == 0 || i == nx - 1)
        } else {
            !self.periodic_y() && (j == 0 || j == ny - 1)
        };
        if boundary {
            0.5
        } else {
            1.0
        }
    }

    fn check_velocity(&self, u: &StaggeredField) -> Result<()> {
        let d0 = self.component_dims(0);
        let d1 = self.component_dims(1);
        if (u.c1.nx, u.c1.ny) != d0 || (u.c2.nx, u.c2.ny) != d1 {
            return Err(Error::ShapeMismatch(format!(
                "velocity components {}x{} / {}x{} do not match grid {:?} / {:?}",
                u.c1.nx, u.c1.ny, u.c2.nx, u.c2.ny, d0, d1
            )));
        }
        Ok(())
    }

    fn check_cells(&self, p: &CellField) -> Result<()> {
        if p.values.nx != self.n1 || p.values.ny != self.n2 {
            return Err(Error::ShapeMismatch(format!(
                "cell field {}x{} does not match grid {}x{}",
                p.values.nx, p.values.ny, self.n1, self.n2
            )));
        }
        Ok(())
    }

    /// Discrete divergence at cell centers.
    pub fn divergence(&self, u: &StaggeredField) -> Result<CellField> {
        self.check_velocity(u)?;
        let mut out = self.zero_cells();
        self.divergence_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn divergence_into(&self, u: &StaggeredField, out: &mut CellField) {
        let (n1, n2) = (self.n1, self.n2);
        let inv_h = 1.0 / self.h;
        let (px, py) = (self.periodic_x(), self.periodic_y());
        let u1 = &u.c1;
        let u2 = &u.c2;
        for j in 0..n2 {
            let jp = if py && j + 1 == n2 { 0 } else { j + 1 };
            for i in 0..n1 {
                let ip = if px && i + 1 == n1 { 0 } else { i + 1 };
                let d = (u1.at(ip, j) - u1.at(i, j)) + (u2.at(i, jp) - u2.at(i, j));
                out.values.set(i, j, d * inv_h);
            }
        }
    }

    /// Discrete gradient on faces. Prescribed boundary faces receive zero;
    /// outflow faces use `p = 0` on the boundary.
    pub fn gradient(&self, p: &CellField) -> Result<StaggeredField> {
        self.check_cells(p)?;
        let mut out = self.zero_velocity();
        self.gradient_into(p, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, p: &CellField, out: &mut StaggeredField) {
        let (n1, n2) = (self.n1, self.n2);
        let inv_h = 1.0 / self.h;
        let pv = &p.values;
        let (nx1, ny1) = (out.c1.nx, out.c1.ny);
        for j in 0..ny1 {
            for i in 0..nx1 {
                let g = if self.periodic_x() {
                    let im = if i == 0 { n1 - 1 } else { i - 1 };
                    (pv.at(i, j) - pv.at(im, j)) * inv_h
                } else if i == 0 {
                    match self.closure(0, Side::Left) {
                        Closure::NormalFree => 2.0 * pv.at(0, j) * inv_h,
                        _ => 0.0,
                    }
                } else if i == n1 {
                    match self.closure(0, Side::Right) {
                        Closure::NormalFree => -2.0 * pv.at(n1 - 1, j) * inv_h,
                        _ => 0.0,
                    }
                } else {
                    (pv.at(i, j) - pv.at(i - 1, j)) * inv_h
                };
                out.c1.set(i, j, g);
            }
        }
        let (nx2, ny2) = (out.c2.nx, out.c2.ny);
        for j in 0..ny2 {
            for i in 0..nx2 {
                let g = if self.periodic_y() {
                    let jm = if j == 0 { n2 - 1 } else { j - 1 };
                    (pv.at(i, j) - pv.at(i, jm)) * inv_h
                } else if j == 0 {
                    match self.closure(1, Side::Bottom) {
                        Closure::NormalFree => 2.0 * pv.at(i, 0) * inv_h,
                        _ => 0.0,
                    }
                } else if j == n2 {
                    match self.closure(1, Side::Top) {
                        Closure::NormalFree => -2.0 * pv.at(i, n2 - 1) * inv_h,
                        _ => 0.0,
                    }
                } else {
                    (pv.at(i, j) - pv.at(i, j - 1)) * inv_h
                };
                out.c2.set(i, j, g);
            }
        }
    }

    /// Component `c` padded with [`GHOSTS`] ghost layers on every side.
    ///
    /// Ghost rules, with `b` the boundary and `k = 1, 2, 3` the ghost layer:
    /// * periodic: wrap;
    /// * normal, prescribed face `u_b`: `u(b - k) = 2 u_b - u(b + k)`;
    /// * normal, free (outflow) face: `u(b - k) = u(b + k)`;
    /// * tangential Dirichlet `g` at the half point: `u(-k) = 2 g - u(k - 1)`;
    /// * tangential Neumann: `u(-k) = u(k - 1)`.
    ///
    /// With `homogeneous` set, tangential Dirichlet data is taken as zero.
    pub fn pad(&self, c: usize, comp: &Plane, homogeneous: bool) -> Plane {
        let g = GHOSTS;
        let (nx, ny) = (comp.nx, comp.ny);
        let mut out = Plane::zeros(nx + 2 * g, ny + 2 * g);
        for j in 0..ny {
            let src = &comp.data[j * nx..(j + 1) * nx];
            let row = (j + g) * out.nx;
            out.data[row + g..row + g + nx].copy_from_slice(src);
        }
        let lo_x = self.closure(c, Side::Left);
        let hi_x = self.closure(c, Side::Right);
        let lo_y = self.closure(c, Side::Bottom);
        let hi_y = self.closure(c, Side::Top);
        let onx = out.nx;
        // x ghosts on interior rows
        for j in g..g + ny {
            let row = j * onx;
            for k in 1..=g {
                let lo = ghost_value(lo_x, &out.data[row..row + onx], g, nx, k, true, homogeneous);
                let hi = ghost_value(
                    hi_x,
                    &out.data[row..row + onx],
                    g,
                    nx,
                    k,
                    false,
                    homogeneous,
                );
                out.data[row + g - k] = lo;
                out.data[row + g + nx - 1 + k] = hi;
            }
        }
        // y ghosts on every column, including the x ghosts
        let mut col = vec![0.0; ny + 2 * g];
        for i in 0..onx {
            for (jj, v) in col.iter_mut().enumerate() {
                *v = out.data[jj * onx + i];
            }
            for k in 1..=g {
                let lo = ghost_value(lo_y, &col, g, ny, k, true, homogeneous);
                let hi = ghost_value(hi_y, &col, g, ny, k, false, homogeneous);
                out.data[(g - k) * onx + i] = lo;
                out.data[(g + ny - 1 + k) * onx + i] = hi;
            }
        }
        out
    }

    /// Componentwise 5-point Laplacian with boundary closures. Prescribed
    /// faces receive zero.
    pub fn laplacian(&self, u: &StaggeredField) -> Result<StaggeredField> {
        self.check_velocity(u)?;
        let mut out = self.zero_velocity();
        self.laplacian_into(u, &mut out, false);
        Ok(out)
    }

    pub(crate) fn laplacian_into(
        &self,
        u: &StaggeredField,
        out: &mut StaggeredField,
        homogeneous: bool,
    ) {
        let inv_h2 = 1.0 / (self.h * self.h);
        for c in 0..2 {
            let comp = u.component(c);
            let padded = self.pad(c, comp, homogeneous);
            let o = out.component_mut(c);
            let g = GHOSTS;
            let pnx = padded.nx;
            for j in 0..comp.ny {
                for i in 0..comp.nx {
                    if self.is_fixed(c, i, j) {
                        o.set(i, j, 0.0);
                        continue;
                    }
                    let k = (j + g) * pnx + i + g;
                    let d = &padded.data;
                    let v = d[k - 1] + d[k + 1] + d[k - pnx] + d[k + pnx] - 4.0 * d[k];
                    o.set(i, j, v * inv_h2);
                }
            }
        }
    }

    /// Cell-centered 5-point Laplacian consistent with `divergence(gradient(.))`.
    pub fn cell_laplacian(&self, p: &CellField) -> Result<CellField> {
        let g = self.gradient(p)?;
        self.divergence(&g)
    }

    /// Discrete Eulerian inner product `sum w u v h^2` with half weights on
    /// boundary faces of bounded axes.
    pub fn inner_product(&self, u: &StaggeredField, v: &StaggeredField) -> Result<f64> {
        self.check_velocity(u)?;
        self.check_velocity(v)?;
        let mut total = 0.0;
        for c in 0..2 {
            let a = u.component(c);
            let b = v.component(c);
            for j in 0..a.ny {
                let mut row = 0.0;
                for i in 0..a.nx {
                    row += self.face_weight(c, i, j) * a.at(i, j) * b.at(i, j);
                }
                total += row;
            }
        }
        Ok(total * self.h * self.h)
    }

    /// Cell inner product `sum p q h^2`.
    pub fn cell_inner_product(&self, p: &CellField, q: &CellField) -> Result<f64> {
        self.check_cells(p)?;
        self.check_cells(q)?;
        let s: f64 = p
            .values
            .data
            .iter()
            .zip(&q.values.data)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.h * self.h)
    }
}

fn ghost_value(
    closure: Closure,
    line: &[f64],
    g: usize,
    n: usize,
    k: usize,
    low: bool,
    homogeneous: bool,
) -> f64 {
    // interior occupies line[g..g+n]
    let first = g;
    let last = g + n - 1;
    let inward = |m: usize| if low { line[first + m] } else { line[last - m] };
    match closure {
        Closure::Periodic => {
            if low {
                line[last + 1 - k]
            } else {
                line[first + k - 1]
            }
        }
        Closure::NormalFixed => 2.0 * inward(0) - inward(k),
        Closure::NormalFree => inward(k),
        Closure::TangentialDirichlet(value) => {
            let gv = if homogeneous { 0.0 } else { value };
            2.0 * gv - inward(k - 1)
        }
        Closure::TangentialNeumann => inward(k - 1),
    }
}

/// Write one plane in the plain-text dump format: a header line
/// `field <name> n1 <nx> n2 <ny> h <h>` followed by one value per line in
/// row-major order with 17 significant digits.
pub fn write_plane<W: Write>(w: &mut W, name: &str, plane: &Plane, h: f64) -> std::io::Result<()> {
    writeln!(
        w,
        "field {name} n1 {} n2 {} h {:.17e}",
        plane.nx, plane.ny, h
    )?;
    for v in &plane.data {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Parse a dump written by [`write_plane`]. Returns `(name, plane, h)`.
pub fn read_plane(text: &str) -> Result<(String, Plane, f64)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty field dump".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != "field" || tok[2] != "n1" || tok[4] != "n2" || tok[6] != "h" {
        return Err(Error::InvalidArgument(format!(
            "bad dump header '{header}'"
        )));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::InvalidArgument(format!("bad dump header '{header}': {e}")))
    };
    let nx = parse_usize(tok[3])?;
    let ny = parse_usize(tok[5])?;
    let h: f64 = tok[7]
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad dump header '{header}': {e}")))?;
    let data: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad dump value '{l}': {e}")))
        })
        .collect::<Result<_>>()?;
    if data.len() != nx * ny {
        return Err(Error::ShapeMismatch(format!(
            "dump has {} values, header says {}x{}",
            data.len(),
            nx,
            ny
        )));
    }
    Ok((tok[1].to_string(), Plane { nx, ny, data }, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cavity(n: usize) -> GridSpec {
        let wall = BoundaryCondition::Velocity { u1: 0.0, u2: 0.0 };
        GridSpec::new(
            n,
            n,
            [0.0, 0.0],
            1.0 / n as f64,
            [
                wall,
                wall,
                wall,
                BoundaryCondition::Velocity { u1: 1.0, u2: 0.0 },
            ],
        )
        .unwrap()
    }

    fn channel(n: usize) -> GridSpec {
        GridSpec::new(
            2 * n,
            n,
            [-1.0, -0.5],
            1.0 / n as f64,
            [
                BoundaryCondition::Velocity { u1: 1.0, u2: 0.0 },
                BoundaryCondition::Outflow,
                BoundaryCondition::Slip,
                BoundaryCondition::Slip,
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(3, 8, [0.0; 2], 0.1, [BoundaryCondition::Periodic; 4]).is_err());
        assert!(GridSpec::new(8, 8, [0.0; 2], 0.0, [BoundaryCondition::Periodic; 4]).is_err());
        let mixed = [
            BoundaryCondition::Periodic,
            BoundaryCondition::Slip,
            BoundaryCondition::Periodic,
            BoundaryCondition::Periodic,
        ];
        assert!(GridSpec::new(8, 8, [0.0; 2], 0.1, mixed).is_err());
    }

    #[test]
    fn dimensions() {
        let g = GridSpec::periodic_unit(8).unwrap();
        assert_eq!(g.component_dims(0), (8, 8));
        assert_eq!(g.component_dims(1), (8, 8));
        let c = cavity(8);
        assert_eq!(c.component_dims(0), (9, 8));
        assert_eq!(c.component_dims(1), (8, 9));
    }

    #[test]
    fn divergence_of_simple_fields() {
        for grid in [GridSpec::periodic_unit(16).unwrap(), cavity(16), channel(8)] {
            let c = grid.sample_velocity(|_| [0.3, -0.7]);
            let d = grid.divergence(&c).unwrap();
            assert!(d.max_abs() < 1e-14);
        }
        for grid in [cavity(16), channel(8)] {
            let u = grid.sample_velocity(|x| [x[0], -x[1]]);
            assert!(grid.divergence(&u).unwrap().max_abs() < 1e-13);
            let u = grid.sample_velocity(|x| [x[0], 0.0]);
            let d = grid.divergence(&u).unwrap();
            assert!(d.values.data.iter().all(|v| (v - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn gradient_of_simple_fields() {
        let grid = GridSpec::periodic_unit(16).unwrap();
        let p = grid.sample_cells(|_| 2.5);
        assert!(grid.gradient(&p).unwrap().max_abs() < 1e-14);
        let p = grid.sample_cells(|x| x[0]);
        let g = grid.gradient(&p).unwrap();
        for j in 0..16 {
            for i in 1..16 {
                assert!((g.c1.at(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_of_linear_field_vanishes_inside() {
        let grid = cavity(16);
        let u = grid.sample_velocity(|x| [2.0 * x[0] - x[1], x[0] + 3.0 * x[1]]);
        let l = grid.laplacian(&u).unwrap();
        for c in 0..2 {
            let p = l.component(c);
            for j in 1..p.ny - 1 {
                for i in 1..p.nx - 1 {
                    assert!(p.at(i, j).abs() < 1e-10, "{c} {i} {j} {}", p.at(i, j));
                }
            }
        }
    }

    #[test]
    fn laplacian_of_sine_is_second_order() {
        let n = 64;
        let grid = GridSpec::periodic_unit(n).unwrap();
        let h = grid.h;
        let u = grid.sample_velocity(|x| [(2.0 * PI * x[0]).sin(), 0.0]);
        let l = grid.laplacian(&u).unwrap();
        let mut err: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let x = grid.face_position(0, i, j);
                let exact = -4.0 * PI * PI * (2.0 * PI * x[0]).sin();
                err = err.max((l.c1.at(i, j) - exact).abs());
            }
        }
        let bound = 4.0 * PI.powi(4) * h * h * 1.1;
        assert!(err <= bound, "{err} > {bound}");
    }

    #[test]
    fn dirichlet_closure_for_constant_field() {
        // u1 = 1 everywhere in a cavity whose lid moves with u1 = 1 and whose
        // other walls are at rest. Tangential ghost below the first row is
        // 2*0 - 1 = -1, so the bottom row sees (-1 - 1) / h^2 = -2 / h^2 and the
        // top row sees (2*1 - 1 - 1) / h^2 = 0.
        let n = 8;
        let grid = cavity(n);
        let mut u = grid.zero_velocity();
        u.c1.fill(1.0);
        grid.apply_velocity_bc(&mut u);
        let l = grid.laplacian(&u).unwrap();
        let h2 = grid.h * grid.h;
        // i = 1 sits next to the left wall face (value 0): extra -1/h^2.
        assert!((l.c1.at(4, 0) - (-2.0 / h2)).abs() < 1e-9);
        assert!(l.c1.at(4, n - 1).abs() < 1e-9);
        assert!((l.c1.at(1, 3) - (-1.0 / h2)).abs() < 1e-9);
        assert_eq!(l.c1.at(0, 3), 0.0);
    }

    #[test]
    fn inner_product_basics() {
        let grid = GridSpec::periodic_unit(16).unwrap();
        let one = grid.sample_velocity(|_| [1.0, 1.0]);
        assert!((grid.inner_product(&one, &one).unwrap() - 2.0).abs() < 1e-13);
        let c = cavity(16);
        let one = c.sample_velocity(|_| [1.0, 1.0]);
        assert!((c.inner_product(&one, &one).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn composition_is_cell_laplacian() {
        let n = 16;
        let grid = GridSpec::periodic_unit(n).unwrap();
        let p = grid.sample_cells(|x| (3.0 * x[0]).sin() * (x[1] * 7.0).cos() + x[0] * x[1]);
        let l = grid.cell_laplacian(&p).unwrap();
        let h2 = grid.h * grid.h;
        for j in 0..n {
            for i in 0..n {
                let v = p.values.at((i + 1) % n, j)
                    + p.values.at((i + n - 1) % n, j)
                    + p.values.at(i, (j + 1) % n)
                    + p.values.at(i, (j + n - 1) % n)
                    - 4.0 * p.values.at(i, j);
                assert!((l.values.at(i, j) - v / h2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dump_roundtrip() {
        let grid = GridSpec::periodic_unit(4).unwrap();
        let p = grid.sample_cells(|x| (x[0] * 10.0).exp() / 3.0);
        let mut buf = Vec::new();
        write_plane(&mut buf, "p", &p.values, grid.h).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("field p n1 4 n2 4 h "));
        let (name, plane, h) = read_plane(&text).unwrap();
        assert_eq!(name, "p");
        assert_eq!(plane, p.values);
        assert_eq!(h, grid.h);
    }
}
