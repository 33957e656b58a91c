//! Lagrangian-Eulerian interaction: interaction points, force spreading and
//! velocity restriction.
//!
//! Forces are spread from quadrature points inside the structure,
//! `f(x) = sum_Q F(X_Q) delta_h(x - chi(X_Q)) w_Q`, and velocities are
//! restricted with the adjoint operator `J = M^-1 S^T h^2`, so that
//! `(F, J u)_X = (S F, u)_x`.

use std::collections::BTreeMap;

use crate::elasticity::LagrangianForce;
use crate::error::{Error, Result};
use crate::fem::mesh::{BoundaryMesh, Configuration, FeMesh};
use crate::fem::quadrature::{
    line_rule, square_rule, triangle_rule_collapsed, QuadratureRule, MAX_GAUSS_POINTS,
};
use crate::fem::shape::{line_values, shape_values, ElementKind, ShapeEval};
use crate::fem::MassMatrix;
use crate::grid::{GridSpec, StaggeredField};
use crate::kernels::{stencil, KernelKind, Stencil};

/// Default interaction points per grid cell per direction.
pub const DEFAULT_DENSITY: f64 = 3.0;
/// Default relative growth of an element's extent that triggers a rebuild.
pub const DEFAULT_REBUILD_THRESHOLD: f64 = 0.1;

/// One interaction point: owning element, basis values and physical weight.
#[derive(Debug, Clone, Copy)]
struct Point {
    element: usize,
    shape: ShapeEval,
    weight: f64,
}

/// Per-element Gauss rules sized from the deformed element extents.
#[derive(Debug, Clone)]
pub struct InteractionRule {
    pub density: f64,
    pub threshold: f64,
    h: f64,
    counts: Vec<usize>,
    extents: Vec<f64>,
    facet_counts: Vec<usize>,
    points: Vec<Point>,
    facet_points: Vec<Point>,
}

/// Points per direction for an element of deformed extent `extent`.
pub fn points_per_direction(extent: f64, h: f64, density: f64) -> usize {
    ((density * extent / h).ceil() as usize).max(2)
}

fn reference_rule(kind: ElementKind, n: usize) -> QuadratureRule {
    match kind {
        ElementKind::Q1Quad => square_rule(n),
        ElementKind::P2Tri => triangle_rule_collapsed(n),
        ElementKind::P2Edge1D => line_rule(n),
    }
}

fn bbox_extent<'a>(pts: impl Iterator<Item = &'a [f64; 2]>) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

fn element_extent(mesh: &FeMesh, config: &Configuration, e: usize) -> f64 {
    bbox_extent(mesh.element(e).iter().map(|&n| &config.chi[n]))
}

impl InteractionRule {
    /// Builds rules for the volume elements and, when `boundary` is given,
    /// for the boundary facets.
    pub fn build(
        mesh: &FeMesh,
        boundary: Option<&BoundaryMesh>,
        config: &Configuration,
        h: f64,
        density: f64,
        threshold: f64,
    ) -> Result<Self> {
        if !(h > 0.0) || !(density > 0.0) || !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interaction rule needs h > 0, density > 0, threshold >= 0 (h = {h}, density = {density}, threshold = {threshold})"
            )));
        }
        if config.len() != mesh.n_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "configuration has {} nodes, mesh has {}",
                config.len(),
                mesh.n_nodes()
            )));
        }
        let mut rule = Self {
            density,
            threshold,
            h,
            counts: Vec::new(),
            extents: Vec::new(),
            facet_counts: Vec::new(),
            points: Vec::new(),
            facet_points: Vec::new(),
        };
        rule.rebuild(mesh, boundary, config)?;
        Ok(rule)
    }

    fn rebuild(
        &mut self,
        mesh: &FeMesh,
        boundary: Option<&BoundaryMesh>,
        config: &Configuration,
    ) -> Result<()> {
        let mut cache: BTreeMap<usize, (QuadratureRule, Vec<ShapeEval>)> = BTreeMap::new();
        self.counts.clear();
        self.extents.clear();
        self.points.clear();
        for e in 0..mesh.n_elements() {
            let extent = element_extent(mesh, config, e);
            let n = points_per_direction(extent, self.h, self.density);
            if n > MAX_GAUSS_POINTS {
                return Err(Error::QuadratureOrder {
                    element: e,
                    required: n,
                    max: MAX_GAUSS_POINTS,
                });
            }
            let (q, shapes) = cache.entry(n).or_insert_with(|| {
                let q = reference_rule(mesh.kind(), n);
                let s = q
                    .points
                    .iter()
                    .map(|p| shape_values(mesh.kind(), *p))
                    .collect();
                (q, s)
            });
            for ((p, w), s) in q.points.iter().zip(&q.weights).zip(shapes.iter()) {
                self.points.push(Point {
                    element: e,
                    shape: *s,
                    weight: w * mesh.reference_measure(e, *p),
                });
            }
            self.counts.push(n);
            self.extents.push(extent);
        }
        self.facet_counts.clear();
        self.facet_points.clear();
        if let Some(bm) = boundary {
            for (k, f) in bm.facets.iter().enumerate() {
                let extent = bbox_extent(f.nodes.iter().map(|&n| &config.chi[n]));
                let n = points_per_direction(extent, self.h, self.density);
                if n > MAX_GAUSS_POINTS {
                    return Err(Error::QuadratureOrder {
                        element: f.element,
                        required: n,
                        max: MAX_GAUSS_POINTS,
                    });
                }
                let q = line_rule(n);
                for (p, w) in q.points.iter().zip(&q.weights) {
                    let (_, da) = mesh.facet_geometry(f.element, f.local_facet, p[0]);
                    self.facet_points.push(Point {
                        element: k,
                        shape: line_values(bm.kind, p[0]),
                        weight: w * da,
                    });
                }
                self.facet_counts.push(n);
            }
        }
        Ok(())
    }

    /// Whether some element has grown by more than the threshold since the
    /// last build.
    pub fn needs_rebuild(&self, mesh: &FeMesh, config: &Configuration) -> bool {
        (0..mesh.n_elements())
            .any(|e| element_extent(mesh, config, e) > (1.0 + self.threshold) * self.extents[e])
    }

    /// Rebuilds if [`InteractionRule::needs_rebuild`]; returns whether it did.
    pub fn update(
        &mut self,
        mesh: &FeMesh,
        boundary: Option<&BoundaryMesh>,
        config: &Configuration,
    ) -> Result<bool> {
        if self.needs_rebuild(mesh, config) {
            self.rebuild(mesh, boundary, config)?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Unconditional rebuild against the current configuration.
    pub fn refresh(
        &mut self,
        mesh: &FeMesh,
        boundary: Option<&BoundaryMesh>,
        config: &Configuration,
    ) -> Result<()> {
        self.rebuild(mesh, boundary, config)
    }

    /// Gauss points per direction for each element.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Gauss points for each boundary facet.
    pub fn facet_counts(&self) -> &[usize] {
        &self.facet_counts
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_facet_points(&self) -> usize {
        self.facet_points.len()
    }

    /// Sum of the physical weights of the volume points.
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    /// Sum of the physical weights of the boundary points.
    pub fn total_facet_weight(&self) -> f64 {
        self.facet_points.iter().map(|p| p.weight).sum()
    }

    /// Physical positions of the volume interaction points.
    pub fn positions(&self, mesh: &FeMesh, config: &Configuration) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|p| mesh.interpolate(p.element, &p.shape, &config.chi))
            .collect()
    }

    /// `sum_Q v(X_Q) w_Q` for nodal values `v`.
    pub fn integrate(&self, mesh: &FeMesh, values: &[[f64; 2]]) -> [f64; 2] {
        let mut s = [0.0; 2];
        for p in &self.points {
            let v = mesh.interpolate(p.element, &p.shape, values);
            s[0] += v[0] * p.weight;
            s[1] += v[1] * p.weight;
        }
        s
    }
}

fn check_inside(grid: &GridSpec, x: [f64; 2], element: usize) -> Result<()> {
    let ext = grid.extent();
    let out_x = !grid.periodic_x() && (x[0] < grid.origin[0] || x[0] > grid.origin[0] + ext[0]);
    let out_y = !grid.periodic_y() && (x[1] < grid.origin[1] || x[1] > grid.origin[1] + ext[1]);
    if out_x || out_y || !x[0].is_finite() || !x[1].is_finite() {
        return Err(Error::OutsideDomain {
            element,
            x: x[0],
            y: x[1],
        });
    }
    Ok(())
}

fn stencils(grid: &GridSpec, kernel: KernelKind, x: [f64; 2]) -> [(Stencil, Stencil); 2] {
    let mut out = [
        (empty_stencil(), empty_stencil()),
        (empty_stencil(), empty_stencil()),
    ];
    for (c, o) in out.iter_mut().enumerate() {
        let (ax, ay) = grid.component_axes(c);
        *o = (stencil(kernel, x[0], &ax), stencil(kernel, x[1], &ay));
    }
    out
}

fn empty_stencil() -> Stencil {
    Stencil {
        index: [0; 4],
        weight: [0.0; 4],
        len: 0,
    }
}

fn spread_point(
    out: &mut StaggeredField,
    st: &[(Stencil, Stencil); 2],
    value: [f64; 2],
    scale: f64,
) {
    for c in 0..2 {
        let v = value[c] * scale;
        if v == 0.0 {
            continue;
        }
        let plane = out.component_mut(c);
        let (sx, sy) = &st[c];
        for (j, wy) in sy.iter() {
            let row = j * plane.nx;
            for (i, wx) in sx.iter() {
                plane.data[row + i] += v * wx * wy;
            }
        }
    }
}

fn gather_point(u: &StaggeredField, st: &[(Stencil, Stencil); 2]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let plane = u.component(c);
        let (sx, sy) = &st[c];
        let mut s = 0.0;
        for (j, wy) in sy.iter() {
            let row = j * plane.nx;
            for (i, wx) in sx.iter() {
                s += plane.data[row + i] * wx * wy;
            }
        }
        *o = s;
    }
    out
}

/// Spreads nodal force densities over the volume interaction points.
pub fn spread_volume(
    rule: &InteractionRule,
    mesh: &FeMesh,
    config: &Configuration,
    force: &[[f64; 2]],
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<StaggeredField> {
    let mut out = grid.zero_velocity();
    spread_volume_into(rule, mesh, config, force, grid, kernel, &mut out)?;
    Ok(out)
}

fn spread_volume_into(
    rule: &InteractionRule,
    mesh: &FeMesh,
    config: &Configuration,
    force: &[[f64; 2]],
    grid: &GridSpec,
    kernel: KernelKind,
    out: &mut StaggeredField,
) -> Result<()> {
    check_nodes(mesh, config, force.len())?;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    for p in &rule.points {
        let f = mesh.interpolate(p.element, &p.shape, force);
        if f == [0.0, 0.0] {
            continue;
        }
        let x = mesh.interpolate(p.element, &p.shape, &config.chi);
        check_inside(grid, x, p.element)?;
        let st = stencils(grid, kernel, x);
        spread_point(out, &st, f, p.weight * inv_h2);
    }
    Ok(())
}

/// Spreads boundary force densities (one per boundary node) over the
/// boundary interaction points.
pub fn spread_surface(
    rule: &InteractionRule,
    mesh: &FeMesh,
    boundary: &BoundaryMesh,
    config: &Configuration,
    force: &[[f64; 2]],
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<StaggeredField> {
    let mut out = grid.zero_velocity();
    spread_surface_into(rule, mesh, boundary, config, force, grid, kernel, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn spread_surface_into(
    rule: &InteractionRule,
    mesh: &FeMesh,
    boundary: &BoundaryMesh,
    config: &Configuration,
    force: &[[f64; 2]],
    grid: &GridSpec,
    kernel: KernelKind,
    out: &mut StaggeredField,
) -> Result<()> {
    if force.len() != boundary.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "boundary force has {} entries, boundary has {} nodes",
            force.len(),
            boundary.n_nodes()
        )));
    }
    check_nodes(mesh, config, mesh.n_nodes())?;
    if rule.facet_counts.len() != boundary.facets.len() {
        return Err(Error::InvalidArgument(
            "interaction rule was built without boundary points".into(),
        ));
    }
    let inv_h2 = 1.0 / (grid.h * grid.h);
    for p in &rule.facet_points {
        let facet = &boundary.facets[p.element];
        let mut t = [0.0; 2];
        let mut x = [0.0; 2];
        for k in 0..p.shape.n {
            let phi = p.shape.phi[k];
            let tv = force[facet.local[k]];
            let xv = config.chi[facet.nodes[k]];
            t[0] += phi * tv[0];
            t[1] += phi * tv[1];
            x[0] += phi * xv[0];
            x[1] += phi * xv[1];
        }
        if t == [0.0, 0.0] {
            continue;
        }
        check_inside(grid, x, facet.element)?;
        let st = stencils(grid, kernel, x);
        spread_point(out, &st, t, p.weight * inv_h2);
    }
    Ok(())
}

/// Spreads any Lagrangian force: volume part plus, for the partitioned form,
/// the transmission force.
pub fn spread_force(
    rule: &InteractionRule,
    mesh: &FeMesh,
    boundary: Option<&BoundaryMesh>,
    config: &Configuration,
    force: &LagrangianForce,
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<StaggeredField> {
    let mut out = grid.zero_velocity();
    spread_volume_into(rule, mesh, config, force.volume(), grid, kernel, &mut out)?;
    if let Some(t) = force.surface() {
        let bm = boundary.ok_or_else(|| {
            Error::InvalidArgument("transmission force without a boundary mesh".into())
        })?;
        spread_surface_into(rule, mesh, bm, config, t, grid, kernel, &mut out)?;
    }
    Ok(out)
}

/// `S^T u h^2`: the load `sum_Q phi_m(X_Q) U(chi(X_Q)) w_Q` for every node.
pub fn restrict_rhs(
    rule: &InteractionRule,
    mesh: &FeMesh,
    config: &Configuration,
    u: &StaggeredField,
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<Vec<[f64; 2]>> {
    check_nodes(mesh, config, mesh.n_nodes())?;
    let mut rhs = vec![[0.0; 2]; mesh.n_nodes()];
    for p in &rule.points {
        let x = mesh.interpolate(p.element, &p.shape, &config.chi);
        check_inside(grid, x, p.element)?;
        let st = stencils(grid, kernel, x);
        let v = gather_point(u, &st);
        let conn = mesh.element(p.element);
        for k in 0..p.shape.n {
            let w = p.shape.phi[k] * p.weight;
            rhs[conn[k]][0] += w * v[0];
            rhs[conn[k]][1] += w * v[1];
        }
    }
    Ok(rhs)
}

/// Nodal structure velocities `J u = M^-1 S^T u h^2`.
pub fn restrict_velocity(
    rule: &InteractionRule,
    mesh: &FeMesh,
    config: &Configuration,
    u: &StaggeredField,
    mass: &MassMatrix,
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<Vec<[f64; 2]>> {
    let rhs = restrict_rhs(rule, mesh, config, u, grid, kernel)?;
    mass.solve(&rhs)
}

/// Classical point spreading: each node carries a point force
/// `forces[l]` located at `positions[l]`. Kept for comparisons with the
/// quadrature-based operator.
pub fn spread_nodal(
    positions: &[[f64; 2]],
    forces: &[[f64; 2]],
    grid: &GridSpec,
    kernel: KernelKind,
) -> Result<StaggeredField> {
    if positions.len() != forces.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} positions but {} forces",
            positions.len(),
            forces.len()
        )));
    }
    let mut out = grid.zero_velocity();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    for (l, (x, f)) in positions.iter().zip(forces).enumerate() {
        check_inside(grid, *x, l)?;
        let st = stencils(grid, kernel, *x);
        spread_point(&mut out, &st, *f, inv_h2);
    }
    Ok(out)
}

fn check_nodes(mesh: &FeMesh, config: &Configuration, n: usize) -> Result<()> {
    if config.len() != mesh.n_nodes() || n != mesh.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "mesh has {} nodes; configuration {} and values {}",
            mesh.n_nodes(),
            config.len(),
            n
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_disc_mesh, build_shell_mesh};
    use crate::fem::MassVariant;

    fn face_sum(grid: &GridSpec, f: &StaggeredField) -> [f64; 2] {
        let h2 = grid.h * grid.h;
        [
            f.c1.data.iter().sum::<f64>() * h2,
            f.c2.data.iter().sum::<f64>() * h2,
        ]
    }

    #[test]
    fn policy_arithmetic() {
        let h = 0.01;
        assert_eq!(points_per_direction(4.0 * h, h, 3.0), 12);
        assert_eq!(points_per_direction(0.5 * h, h, 3.0), 2);
        assert_eq!(points_per_direction(2.0 * h, h, 3.0), 6);
    }

    #[test]
    fn single_element_rule() {
        let h = 1.0 / 64.0;
        let mesh = FeMesh::new(
            ElementKind::Q1Quad,
            vec![
                [0.4, 0.4],
                [0.4 + 4.0 * h, 0.4],
                [0.4 + 4.0 * h, 0.4 + 4.0 * h],
                [0.4, 0.4 + 4.0 * h],
            ],
            vec![0, 1, 2, 3],
            None,
        )
        .unwrap();
        let c = Configuration::identity(&mesh);
        let rule = InteractionRule::build(&mesh, None, &c, h, 3.0, 0.1).unwrap();
        assert_eq!(rule.counts(), &[12]);
        assert_eq!(rule.n_points(), 144);
        let grid = GridSpec::periodic_unit(64).unwrap();
        let f = spread_volume(
            &rule,
            &mesh,
            &c,
            &[[1.0, 0.0]; 4],
            &grid,
            KernelKind::Peskin4pt,
        )
        .unwrap();
        let s = face_sum(&grid, &f);
        assert!((s[0] - 16.0 * h * h).abs() < 1e-12 && s[1].abs() < 1e-15);
        let z = spread_volume(
            &rule,
            &mesh,
            &c,
            &[[0.0; 2]; 4],
            &grid,
            KernelKind::Peskin4pt,
        )
        .unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn refining_the_mesh_halves_counts() {
        let h = 1.0 / 128.0;
        let (coarse, cc) = build_shell_mesh(0.25, 0.0625, 2, 0.0).unwrap();
        let (fine, cf) = build_shell_mesh(0.25, 0.0625, 4, 0.0).unwrap();
        let rc = InteractionRule::build(&coarse, None, &cc, h, 3.0, 0.1).unwrap();
        let rf = InteractionRule::build(&fine, None, &cf, h, 3.0, 0.1).unwrap();
        let mc = *rc.counts().iter().max().unwrap() as f64;
        let mf = *rf.counts().iter().max().unwrap() as f64;
        assert!((mc / mf - 2.0).abs() < 0.3, "{mc} {mf}");
    }

    #[test]
    fn translation_shifts_by_one_face() {
        let grid = GridSpec::periodic_unit(32).unwrap();
        let h = grid.h;
        let mesh = build_disc_mesh(0.1, [0.5, 0.5], h).unwrap();
        let c = Configuration::identity(&mesh);
        let shifted = Configuration::from_map(&mesh, |x| [x[0] + h, x[1]]);
        let rule = InteractionRule::build(&mesh, None, &c, h, 3.0, 0.1).unwrap();
        let force: Vec<[f64; 2]> = mesh.nodes().iter().map(|x| [x[1], 1.0 + x[0]]).collect();
        let a = spread_volume(&rule, &mesh, &c, &force, &grid, KernelKind::Peskin4pt).unwrap();
        let b =
            spread_volume(&rule, &mesh, &shifted, &force, &grid, KernelKind::Peskin4pt).unwrap();
        for comp in 0..2 {
            let (pa, pb) = (a.component(comp), b.component(comp));
            for j in 0..pa.ny {
                for i in 0..pa.nx {
                    assert!((pa.at(i, j) - pb.at((i + 1) % pa.nx, j)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn constant_velocity_is_reproduced() {
        let grid = GridSpec::periodic_unit(32).unwrap();
        let (mesh, c) = build_shell_mesh(0.25, 0.0625, 2, 0.15).unwrap();
        let m = MassMatrix::assemble(&mesh, MassVariant::Consistent).unwrap();
        let rule = InteractionRule::build(&mesh, None, &c, grid.h, 3.0, 0.1).unwrap();
        let u = grid.sample_velocity(|_| [0.3, -1.7]);
        let v = restrict_velocity(&rule, &mesh, &c, &u, &m, &grid, KernelKind::Peskin4pt).unwrap();
        for w in v {
            assert!((w[0] - 0.3).abs() < 1e-10 && (w[1] + 1.7).abs() < 1e-10);
        }
    }

    #[test]
    fn surface_total_force() {
        let grid = GridSpec::periodic_unit(64).unwrap();
        let mesh = build_disc_mesh(0.2, [0.5, 0.5], grid.h).unwrap();
        let bm = BoundaryMesh::new(&mesh).unwrap();
        let c = Configuration::identity(&mesh);
        let rule = InteractionRule::build(&mesh, Some(&bm), &c, grid.h, 3.0, 0.1).unwrap();
        let t = vec![[0.5, -2.0]; bm.n_nodes()];
        let f = spread_surface(&rule, &mesh, &bm, &c, &t, &grid, KernelKind::Smooth3pt).unwrap();
        let s = face_sum(&grid, &f);
        let len = rule.total_facet_weight();
        assert!((s[0] - 0.5 * len).abs() < 1e-12 && (s[1] + 2.0 * len).abs() < 1e-12);
    }

    #[test]
    fn rebuild_on_growth() {
        let h = 1.0 / 64.0;
        let (mesh, c) = build_shell_mesh(0.25, 0.0625, 2, 0.0).unwrap();
        let mut rule = InteractionRule::build(&mesh, None, &c, h, 3.0, 0.1).unwrap();
        let grown = Configuration::from_positions(
            c.chi
                .iter()
                .map(|x| [0.5 + 1.05 * (x[0] - 0.5), 0.5 + 1.05 * (x[1] - 0.5)])
                .collect(),
        );
        assert!(!rule.update(&mesh, None, &grown).unwrap());
        let big = Configuration::from_positions(
            c.chi
                .iter()
                .map(|x| [0.5 + 1.2 * (x[0] - 0.5), 0.5 + 1.2 * (x[1] - 0.5)])
                .collect(),
        );
        assert!(rule.update(&mesh, None, &big).unwrap());
    }

    #[test]
    fn points_outside_bounded_domain_fail() {
        let mut grid = GridSpec::periodic_unit(32).unwrap();
        grid.bc = [crate::grid::BoundaryCondition::Velocity { u1: 0.0, u2: 0.0 }; 4];
        let mesh = build_disc_mesh(0.2, [0.95, 0.5], 0.05).unwrap();
        let c = Configuration::identity(&mesh);
        let rule = InteractionRule::build(&mesh, None, &c, grid.h, 3.0, 0.1).unwrap();
        let f = vec![[1.0, 0.0]; mesh.n_nodes()];
        let r = spread_volume(&rule, &mesh, &c, &f, &grid, KernelKind::Peskin4pt);
        assert!(matches!(r, Err(Error::OutsideDomain { .. })));
    }
}
