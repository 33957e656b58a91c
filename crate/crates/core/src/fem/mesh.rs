//! Reference meshes, nodal configurations and the mesh generators used by the
//! benchmarks.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use super::mass::{assemble_boundary_mass, MassMatrix};
use super::quadrature::{line_rule, square_rule, triangle_rule_degree4, QuadratureRule};
use super::shape::{line_values, reference_nodes, shape_values, ElementKind, FacetKind, ShapeEval};
use super::{det, inverse, matmul, Mat2};
use crate::error::{Error, Result};

/// Largest node count accepted by the generators.
const MAX_NODES: usize = 4_000_000;

/// Lagrangian reference mesh of a single element kind.
///
/// Each element keeps its own copy of the reference coordinates of its nodes.
/// For meshes whose reference domain is periodic (the shell), nodes are shared
/// across the seam while the element coordinates are unwrapped, so every
/// element sees a contiguous piece of the reference domain.
#[derive(Debug, Clone)]
pub struct FeMesh {
    kind: ElementKind,
    nodes: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    coords: Vec<[f64; 2]>,
    boundary_facets: Vec<(usize, usize)>,
    periodic_shift: Option<[f64; 2]>,
}

impl FeMesh {
    /// Builds and validates a mesh. `connectivity` is flat with
    /// `kind.nodes_per_element()` entries per element. When `coords` is
    /// `None` the element coordinates are copied from `nodes`.
    pub fn new(
        kind: ElementKind,
        nodes: Vec<[f64; 2]>,
        connectivity: Vec<usize>,
        coords: Option<Vec<[f64; 2]>>,
    ) -> Result<Self> {
        let npe = kind.nodes_per_element();
        if connectivity.is_empty() || !connectivity.len().is_multiple_of(npe) {
            return Err(Error::InvalidArgument(format!(
                "connectivity length {} is not a positive multiple of {npe}",
                connectivity.len()
            )));
        }
        if let Some(&bad) = connectivity.iter().find(|&&n| n >= nodes.len()) {
            return Err(Error::InvalidArgument(format!(
                "node index {bad} out of range ({} nodes)",
                nodes.len()
            )));
        }
        let coords = match coords {
            Some(c) => {
                if c.len() != connectivity.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "element coordinates: expected {}, got {}",
                        connectivity.len(),
                        c.len()
                    )));
                }
                c
            }
            None => connectivity.iter().map(|&n| nodes[n]).collect(),
        };
        let mut mesh = Self {
            kind,
            nodes,
            connectivity,
            coords,
            boundary_facets: Vec::new(),
            periodic_shift: None,
        };
        mesh.validate()?;
        mesh.boundary_facets = mesh.find_boundary_facets();
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let rule = self.assembly_rule();
        for e in 0..self.n_elements() {
            for p in &rule.points {
                let m = self.reference_measure_signed(e, *p);
                if !m.is_finite() || m.abs() < 1e-300 {
                    return Err(Error::DegenerateElement {
                        element: e,
                        reason: "zero reference Jacobian".into(),
                    });
                }
                if m < 0.0 {
                    return Err(Error::InvertedElement {
                        element: e,
                        jacobian: m,
                    });
                }
            }
        }
        Ok(())
    }

    fn find_boundary_facets(&self) -> Vec<(usize, usize)> {
        let facets = self.kind.facets();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            for f in facets {
                let (a, b) = (conn[f[0]], conn[f[1]]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut out = Vec::new();
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            for (k, f) in facets.iter().enumerate() {
                let (a, b) = (conn[f[0]], conn[f[1]]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    out.push((e, k));
                }
            }
        }
        out
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.kind.nodes_per_element()
    }

    /// Reference coordinates `X_l` of every node.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Global node indices of element `e`.
    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.kind.nodes_per_element();
        &self.connectivity[e * npe..(e + 1) * npe]
    }

    /// Reference coordinates of the nodes of element `e` (unwrapped).
    pub fn element_coords(&self, e: usize) -> &[[f64; 2]] {
        let npe = self.kind.nodes_per_element();
        &self.coords[e * npe..(e + 1) * npe]
    }

    /// `(element, local facet)` pairs tiling the reference boundary.
    pub fn boundary_facets(&self) -> &[(usize, usize)] {
        &self.boundary_facets
    }

    /// Translation identifying the two sides of a periodic reference domain.
    pub fn periodic_shift(&self) -> Option<[f64; 2]> {
        self.periodic_shift
    }

    /// Quadrature used for mass and force assembly.
    pub fn assembly_rule(&self) -> QuadratureRule {
        match self.kind {
            ElementKind::Q1Quad => square_rule(2),
            ElementKind::P2Tri => triangle_rule_degree4(),
            ElementKind::P2Edge1D => line_rule(3),
        }
    }

    /// Sums `values[l] * phi_l` over the nodes of element `e`.
    pub fn interpolate(&self, e: usize, s: &ShapeEval, values: &[[f64; 2]]) -> [f64; 2] {
        let conn = self.element(e);
        let mut out = [0.0; 2];
        for k in 0..s.n {
            let v = values[conn[k]];
            out[0] += s.phi[k] * v[0];
            out[1] += s.phi[k] * v[1];
        }
        out
    }

    /// `dX/dxi` of a two-dimensional element.
    pub fn reference_jacobian(&self, e: usize, s: &ShapeEval) -> Mat2 {
        gradient_of(self.element_coords(e), s)
    }

    fn reference_measure_signed(&self, e: usize, xi: [f64; 2]) -> f64 {
        let s = shape_values(self.kind, xi);
        match self.kind.dim() {
            2 => det(&self.reference_jacobian(e, &s)),
            _ => {
                let t = tangent_of(self.element_coords(e), &s);
                t[0].hypot(t[1])
            }
        }
    }

    /// Reference measure density `|dX/dxi|` at a reference point.
    pub fn reference_measure(&self, e: usize, xi: [f64; 2]) -> f64 {
        self.reference_measure_signed(e, xi).abs()
    }

    /// Total measure of the reference domain (area, or length for curves).
    pub fn reference_area(&self) -> f64 {
        let rule = self.assembly_rule();
        let mut total = 0.0;
        for e in 0..self.n_elements() {
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                total += w * self.reference_measure(e, *p);
            }
        }
        total
    }

    /// Deformation gradient `F = d chi / dX` and `J = det F` at a reference
    /// point of a two-dimensional element.
    pub fn deformation_gradient(
        &self,
        config: &Configuration,
        e: usize,
        xi: [f64; 2],
    ) -> Result<(Mat2, f64)> {
        let s = shape_values(self.kind, xi);
        self.deformation_gradient_with(config, e, &s)
    }

    /// As [`FeMesh::deformation_gradient`] with precomputed basis values.
    pub fn deformation_gradient_with(
        &self,
        config: &Configuration,
        e: usize,
        s: &ShapeEval,
    ) -> Result<(Mat2, f64)> {
        if self.kind.dim() != 2 {
            return Err(Error::InvalidArgument(
                "deformation gradient needs a two-dimensional element".into(),
            ));
        }
        let dx = self.reference_jacobian(e, s);
        let conn = self.element(e);
        let mut dchi = [[0.0; 2]; 2];
        for k in 0..s.n {
            let c = config.chi[conn[k]];
            for i in 0..2 {
                for j in 0..2 {
                    dchi[i][j] += c[i] * s.dphi[k][j];
                }
            }
        }
        let inv = inverse(&dx).ok_or_else(|| Error::DegenerateElement {
            element: e,
            reason: "singular reference Jacobian".into(),
        })?;
        let f = matmul(&dchi, &inv);
        Ok((f, det(&f)))
    }

    /// Physical gradients `dphi/dX` of the element basis at a point, and the
    /// reference measure density.
    pub fn physical_gradients(&self, e: usize, s: &ShapeEval) -> Result<([[f64; 2]; 6], f64)> {
        let dx = self.reference_jacobian(e, s);
        let inv = inverse(&dx).ok_or_else(|| Error::DegenerateElement {
            element: e,
            reason: "singular reference Jacobian".into(),
        })?;
        let mut g = [[0.0; 2]; 6];
        for k in 0..s.n {
            for j in 0..2 {
                g[k][j] = s.dphi[k][0] * inv[0][j] + s.dphi[k][1] * inv[1][j];
            }
        }
        Ok((g, det(&dx).abs()))
    }

    /// Reference point inside the element for facet parameter `t in [-1, 1]`.
    pub fn facet_point(&self, facet: usize, t: f64) -> [f64; 2] {
        let f = self.kind.facets()[facet];
        let refs = reference_nodes(self.kind);
        let (a, b) = (refs[f[0]], refs[f[1]]);
        let (wa, wb) = (0.5 * (1.0 - t), 0.5 * (1.0 + t));
        [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1]]
    }

    /// Outward unit reference normal and line-measure density of a facet at
    /// parameter `t`.
    pub fn facet_geometry(&self, e: usize, facet: usize, t: f64) -> ([f64; 2], f64) {
        let f = self.kind.facets()[facet];
        let coords = self.element_coords(e);
        let fk = self.kind.facet_kind().expect("element kind has facets");
        let s = line_values(fk, t);
        let mut tan = [0.0; 2];
        for k in 0..s.n {
            let x = coords[f[k]];
            tan[0] += s.dphi[k][0] * x[0];
            tan[1] += s.dphi[k][0] * x[1];
        }
        let len = tan[0].hypot(tan[1]);
        ([tan[1] / len, -tan[0] / len], len)
    }

    /// Writes the reference mesh, and optionally a configuration, as text.
    ///
    /// Layout: a header `mesh <kind> nodes <n> elements <m> npe <k>`, then
    /// one `X1 X2` line per node (followed by `chi1 chi2` when a
    /// configuration is given), then one line of node indices per element.
    pub fn write_dump<W: Write>(
        &self,
        w: &mut W,
        config: Option<&Configuration>,
    ) -> std::io::Result<()> {
        writeln!(
            w,
            "mesh {:?} nodes {} elements {} npe {}",
            self.kind,
            self.n_nodes(),
            self.n_elements(),
            self.kind.nodes_per_element()
        )?;
        for (l, x) in self.nodes.iter().enumerate() {
            match config {
                Some(c) => writeln!(
                    w,
                    "{:.17e} {:.17e} {:.17e} {:.17e}",
                    x[0], x[1], c.chi[l][0], c.chi[l][1]
                )?,
                None => writeln!(w, "{:.17e} {:.17e}", x[0], x[1])?,
            }
        }
        for e in 0..self.n_elements() {
            let line: Vec<String> = self.element(e).iter().map(|n| n.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn gradient_of(coords: &[[f64; 2]], s: &ShapeEval) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    for k in 0..s.n {
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += coords[k][i] * s.dphi[k][j];
            }
        }
    }
    m
}

fn tangent_of(coords: &[[f64; 2]], s: &ShapeEval) -> [f64; 2] {
    let mut t = [0.0; 2];
    for k in 0..s.n {
        t[0] += coords[k][0] * s.dphi[k][0];
        t[1] += coords[k][1] * s.dphi[k][0];
    }
    t
}

/// Nodal deformed positions and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub chi: Vec<[f64; 2]>,
    pub dchi_dt: Vec<[f64; 2]>,
}

impl Configuration {
    /// `chi = X`, at rest.
    pub fn identity(mesh: &FeMesh) -> Self {
        Self::from_positions(mesh.nodes().to_vec())
    }

    pub fn from_positions(chi: Vec<[f64; 2]>) -> Self {
        let n = chi.len();
        Self {
            chi,
            dchi_dt: vec![[0.0; 2]; n],
        }
    }

    /// `chi_l = f(X_l)`, at rest.
    pub fn from_map(mesh: &FeMesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self::from_positions(mesh.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.chi
            .iter()
            .chain(&self.dchi_dt)
            .all(|v| v[0].is_finite() && v[1].is_finite())
    }
}

/// One boundary facet with its global nodes in facet order.
#[derive(Debug, Clone)]
pub struct BoundaryFacet {
    pub element: usize,
    pub local_facet: usize,
    /// Global node indices, ordered as the facet basis.
    pub nodes: Vec<usize>,
    /// Positions of `nodes` within the boundary node list.
    pub local: Vec<usize>,
}

/// Trace space on the reference boundary: boundary nodes, facets and the
/// boundary mass matrix used to represent transmission forces.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    pub kind: FacetKind,
    pub facets: Vec<BoundaryFacet>,
    /// Global indices of the boundary nodes.
    pub nodes: Vec<usize>,
    pub mass: MassMatrix,
}

impl BoundaryMesh {
    pub fn new(mesh: &FeMesh) -> Result<Self> {
        let kind = mesh
            .kind()
            .facet_kind()
            .ok_or_else(|| Error::InvalidArgument("curve meshes have no boundary facets".into()))?;
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut facets = Vec::new();
        for &(e, f) in mesh.boundary_facets() {
            let conn = mesh.element(e);
            let fnodes: Vec<usize> = mesh.kind().facets()[f].iter().map(|&k| conn[k]).collect();
            let local = fnodes
                .iter()
                .map(|&g| {
                    *index.entry(g).or_insert_with(|| {
                        nodes.push(g);
                        nodes.len() - 1
                    })
                })
                .collect();
            facets.push(BoundaryFacet {
                element: e,
                local_facet: f,
                nodes: fnodes,
                local,
            });
        }
        let mut bm = Self {
            kind,
            facets,
            nodes,
            mass: MassMatrix::identity(0),
        };
        bm.mass = assemble_boundary_mass(mesh, &bm)?;
        Ok(bm)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Quadrature on `[-1, 1]` used for boundary assembly.
    pub fn rule(&self) -> QuadratureRule {
        match self.kind {
            FacetKind::Line2 => line_rule(2),
            FacetKind::Line3 => line_rule(3),
        }
    }

    /// Total reference boundary length.
    pub fn length(&self, mesh: &FeMesh) -> f64 {
        let rule = self.rule();
        let mut total = 0.0;
        for f in &self.facets {
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                total += w * mesh.facet_geometry(f.element, f.local_facet, p[0]).1;
            }
        }
        total
    }
}

/// Thick shell: `28 m x m` bilinear elements on `[0, 2 pi R] x [0, w]`,
/// periodic in `s1`, with the initial configuration
/// `chi = (cos(s1/R)(R+s2) + 0.5, sin(s1/R)(R+gamma+s2) + 0.5)`.
///
/// The initial map reverses orientation, so `det F < 0` throughout.
pub fn build_shell_mesh(r: f64, w: f64, m: usize, gamma: f64) -> Result<(FeMesh, Configuration)> {
    if !(r > 0.0) || !(w > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shell radius and thickness must be positive (R = {r}, w = {w})"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "shell needs at least one element through the thickness".into(),
        ));
    }
    let n1 = 28 * m;
    if n1 * (m + 1) > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "shell mesh with m = {m} is too large"
        )));
    }
    let period = 2.0 * PI * r;
    let (d1, d2) = (period / n1 as f64, w / m as f64);
    let node = |i: usize, j: usize| j * n1 + (i % n1);
    let mut nodes = Vec::with_capacity(n1 * (m + 1));
    for j in 0..=m {
        for i in 0..n1 {
            nodes.push([i as f64 * d1, j as f64 * d2]);
        }
    }
    let mut conn = Vec::with_capacity(4 * n1 * m);
    let mut coords = Vec::with_capacity(4 * n1 * m);
    for j in 0..m {
        for i in 0..n1 {
            conn.extend_from_slice(&[
                node(i, j),
                node(i + 1, j),
                node(i + 1, j + 1),
                node(i, j + 1),
            ]);
            let (s0, s1) = (i as f64 * d1, (i + 1) as f64 * d1);
            let (t0, t1) = (j as f64 * d2, (j + 1) as f64 * d2);
            coords.extend_from_slice(&[[s0, t0], [s1, t0], [s1, t1], [s0, t1]]);
        }
    }
    let mut mesh = FeMesh::new(ElementKind::Q1Quad, nodes, conn, Some(coords))?;
    mesh.periodic_shift = Some([period, 0.0]);
    let config = Configuration::from_map(&mesh, |s| {
        let a = s[0] / r;
        [
            a.cos() * (r + s[1]) + 0.5,
            a.sin() * (r + gamma + s[1]) + 0.5,
        ]
    });
    Ok((mesh, config))
}

/// Quadratic triangle mesh of a disc with nodes roughly `spacing` apart.
///
/// Vertices sit on concentric rings joined by a central fan and an
/// angle-merge between neighbouring rings, followed by one Lloyd smoothing
/// pass. Midside nodes of boundary edges are placed on the circle.
pub fn build_disc_mesh(radius: f64, center: [f64; 2], spacing: f64) -> Result<FeMesh> {
    if !(radius > 0.0) || !(spacing > 0.0) || !center[0].is_finite() || !center[1].is_finite() {
        return Err(Error::InvalidArgument(format!(
            "disc radius and spacing must be positive (radius = {radius}, spacing = {spacing})"
        )));
    }
    let edge = 2.0 * spacing;
    if edge > radius {
        return Err(Error::InvalidArgument(format!(
            "spacing {spacing} is too coarse for a disc of radius {radius}"
        )));
    }
    let rings = (radius / edge).round().max(1.0) as usize;
    let counts: Vec<usize> = (0..=rings)
        .map(|k| {
            if k == 0 {
                1
            } else {
                let rk = radius * k as f64 / rings as f64;
                ((2.0 * PI * rk / edge).round() as usize).max(6)
            }
        })
        .collect();
    let total: usize = counts.iter().sum();
    if 4 * total > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "spacing {spacing} gives too many nodes for radius {radius}"
        )));
    }

    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(total);
    let mut start = Vec::with_capacity(rings + 1);
    let offset = |k: usize| if k % 2 == 1 { 0.5 } else { 0.0 };
    let angle = |k: usize, j: f64| 2.0 * PI * (j + offset(k)) / counts[k] as f64;
    for k in 0..=rings {
        start.push(pts.len());
        if k == 0 {
            pts.push(center);
            continue;
        }
        let rk = radius * k as f64 / rings as f64;
        for j in 0..counts[k] {
            let a = angle(k, j as f64);
            pts.push([center[0] + rk * a.cos(), center[1] + rk * a.sin()]);
        }
    }

    let mut tris: Vec<[usize; 3]> = Vec::new();
    for j in 0..counts[1] {
        tris.push([0, start[1] + j, start[1] + (j + 1) % counts[1]]);
    }
    for k in 1..rings {
        let (a, b) = (counts[k], counts[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        let inner = |i: usize| start[k] + i % a;
        let outer = |j: usize| start[k + 1] + j % b;
        while i < a || j < b {
            let advance_inner = if i == a {
                false
            } else if j == b {
                true
            } else {
                angle(k, (i + 1) as f64) <= angle(k + 1, (j + 1) as f64)
            };
            if advance_inner {
                tris.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            } else {
                tris.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            }
        }
    }
    for t in tris.iter_mut() {
        if signed_area(&pts, t) < 0.0 {
            t.swap(1, 2);
        }
    }

    lloyd_pass(&mut pts, &tris, start[rings]);

    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut conn = Vec::with_capacity(6 * tris.len());
    for t in &tris {
        let mut el = [t[0], t[1], t[2], 0, 0, 0];
        for (m, (a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
            .into_iter()
            .enumerate()
        {
            let key = (a.min(b), a.max(b));
            let id = *mids.entry(key).or_insert_with(|| {
                let (pa, pb) = (pts[a], pts[b]);
                let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if edge_count[&key] == 1 {
                    let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                    let s = radius / dx.hypot(dy);
                    p = [center[0] + s * dx, center[1] + s * dy];
                }
                pts.push(p);
                pts.len() - 1
            });
            el[3 + m] = id;
        }
        conn.extend_from_slice(&el);
    }
    FeMesh::new(ElementKind::P2Tri, pts, conn, None)
}

fn signed_area(p: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Moves each node below `fixed_from` to the area-weighted mean of the
/// centroids of its triangles. Skipped if it would invert a triangle.
fn lloyd_pass(pts: &mut [[f64; 2]], tris: &[[usize; 3]], fixed_from: usize) {
    let mut acc = vec![[0.0; 3]; fixed_from];
    for t in tris {
        let a = signed_area(pts, t);
        let c = [
            (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0,
            (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0,
        ];
        for &n in t {
            if n < fixed_from {
                acc[n][0] += a * c[0];
                acc[n][1] += a * c[1];
                acc[n][2] += a;
            }
        }
    }
    let old: Vec<[f64; 2]> = pts.to_vec();
    for (n, a) in acc.iter().enumerate() {
        if a[2] > 0.0 {
            pts[n] = [a[0] / a[2], a[1] / a[2]];
        }
    }
    if tris.iter().any(|t| signed_area(pts, t) <= 0.0) {
        pts.copy_from_slice(&old);
    }
}

/// Closed curve of quadratic line elements on a circle, nodes evenly spaced
/// in angle roughly `spacing` apart.
pub fn build_circle_mesh(radius: f64, center: [f64; 2], spacing: f64) -> Result<FeMesh> {
    if !(radius > 0.0) || !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "circle radius and spacing must be positive (radius = {radius}, spacing = {spacing})"
        )));
    }
    let n_el = ((PI * radius / spacing).round() as usize).max(3);
    if 2 * n_el > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "spacing {spacing} gives too many nodes for radius {radius}"
        )));
    }
    let nodes: Vec<[f64; 2]> = (0..2 * n_el)
        .map(|k| {
            let a = PI * k as f64 / n_el as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect();
    let mut conn = Vec::with_capacity(3 * n_el);
    for k in 0..n_el {
        conn.extend_from_slice(&[2 * k, (2 * k + 2) % (2 * n_el), 2 * k + 1]);
    }
    FeMesh::new(ElementKind::P2Edge1D, nodes, conn, None)
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn rejects_bad_meshes() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(FeMesh::new(ElementKind::Q1Quad, nodes.clone(), vec![0, 1, 2, 7], None).is_err());
        assert!(FeMesh::new(ElementKind::Q1Quad, nodes.clone(), vec![0, 1, 2], None).is_err());
        let inverted = FeMesh::new(ElementKind::Q1Quad, nodes.clone(), vec![0, 3, 2, 1], None);
        assert!(matches!(
            inverted,
            Err(Error::InvertedElement { element: 0, .. })
        ));
        let flat = FeMesh::new(ElementKind::Q1Quad, nodes, vec![0, 1, 1, 0], None);
        assert!(matches!(
            flat,
            Err(Error::DegenerateElement { element: 0, .. })
        ));
    }

    #[test]
    fn deformation_gradient_of_simple_maps() {
        let mesh = unit_quad();
        let id = Configuration::identity(&mesh);
        let (f, j) = mesh.deformation_gradient(&id, 0, [0.3, -0.2]).unwrap();
        assert!((f[0][0] - 1.0).abs() < 1e-15 && f[0][1].abs() < 1e-15);
        assert!((j - 1.0).abs() < 1e-15);
        let dil = Configuration::from_map(&mesh, |x| [2.0 * x[0], 2.0 * x[1]]);
        let (f, j) = mesh.deformation_gradient(&dil, 0, [0.0, 0.0]).unwrap();
        assert!((f[0][0] - 2.0).abs() < 1e-15 && (f[1][1] - 2.0).abs() < 1e-15);
        assert!((j - 4.0).abs() < 1e-14);
    }

    #[test]
    fn unit_quad_boundary() {
        let mesh = unit_quad();
        assert_eq!(mesh.boundary_facets().len(), 4);
        let (n, len) = mesh.facet_geometry(0, 0, 0.0);
        assert_eq!(n, [0.0, -1.0]);
        assert!((len - 0.5).abs() < 1e-15);
        let (n, _) = mesh.facet_geometry(0, 1, 0.3);
        assert_eq!(n, [1.0, 0.0]);
        let bm = BoundaryMesh::new(&mesh).unwrap();
        assert_eq!(bm.n_nodes(), 4);
        assert!((bm.length(&mesh) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn shell_annulus() {
        let (r, w) = (0.25, 0.0625);
        let (mesh, config) = build_shell_mesh(r, w, 2, 0.0).unwrap();
        assert_eq!(mesh.n_elements(), 56 * 2);
        assert_eq!(mesh.n_nodes(), 56 * 3);
        for c in &config.chi {
            let d = (c[0] - 0.5).hypot(c[1] - 0.5);
            assert!(d >= r - 1e-14 && d <= r + w + 1e-14);
        }
        for &(e, f) in mesh.boundary_facets() {
            assert!(f == 0 || f == 2, "element {e} facet {f}");
        }
        assert_eq!(mesh.boundary_facets().len(), 2 * 56);
        assert!((mesh.reference_area() - 2.0 * PI * r * w).abs() < 1e-12);
        let (f, j) = mesh.deformation_gradient(&config, 3, [0.0, 0.0]).unwrap();
        assert!(j < 0.0, "{f:?}");
        assert!(build_shell_mesh(r, w, 0, 0.0).is_err());
        let (coarse, _) = build_shell_mesh(r, w, 1, 0.0).unwrap();
        assert_eq!(coarse.n_elements(), 28);
    }

    #[test]
    fn shell_ellipse_extent() {
        let (r, w, g) = (0.25, 0.0625, 0.15);
        let (_, config) = build_shell_mesh(r, w, 4, g).unwrap();
        let max_y = config
            .chi
            .iter()
            .map(|c| c[1] - 0.5)
            .fold(f64::MIN, f64::max);
        assert!((max_y - (r + g + w)).abs() < 1e-14);
    }

    #[test]
    fn disc_mesh_geometry() {
        let (r, c) = (0.2, [0.6, 0.5]);
        let mesh = build_disc_mesh(r, c, r / 8.0).unwrap();
        let area = mesh.reference_area();
        assert!(
            (area - PI * r * r).abs() / (PI * r * r) < 5e-3,
            "area {area}"
        );
        let bm = BoundaryMesh::new(&mesh).unwrap();
        for &g in &bm.nodes {
            let x = mesh.nodes()[g];
            assert!(((x[0] - c[0]).hypot(x[1] - c[1]) - r).abs() < 1e-12);
        }
        for f in &bm.facets {
            let mid = mesh.nodes()[f.nodes[2]];
            let (n, _) = mesh.facet_geometry(f.element, f.local_facet, 0.0);
            let radial = [(mid[0] - c[0]) / r, (mid[1] - c[1]) / r];
            let cos = n[0] * radial[0] + n[1] * radial[1];
            assert!(cos > (2.0f64).to_radians().cos(), "normal deviates: {cos}");
        }
    }

    #[test]
    fn disc_spacing_scales() {
        for s in [0.05, 0.02, 0.01] {
            let mesh = build_disc_mesh(0.2, [0.0, 0.0], s).unwrap();
            let bm = BoundaryMesh::new(&mesh).unwrap();
            let mean = bm.length(&mesh) / (2 * bm.facets.len()) as f64;
            assert!(mean > 0.7 * s && mean < 1.3 * s, "spacing {s}: {mean}");
        }
        assert!(build_disc_mesh(0.2, [0.0, 0.0], 0.5).is_err());
        assert!(build_disc_mesh(0.2, [0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn circle_mesh_length() {
        let mesh = build_circle_mesh(0.5, [0.0, 0.0], 0.05).unwrap();
        assert_eq!(mesh.kind(), ElementKind::P2Edge1D);
        assert!((mesh.reference_area() - PI).abs() < 1e-4);
        assert!(mesh.boundary_facets().is_empty());
    }

    #[test]
    fn dump_has_header() {
        let mesh = unit_quad();
        let mut buf = Vec::new();
        mesh.write_dump(&mut buf, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mesh Q1Quad nodes 4 elements 1 npe 4\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
