//! Nodal basis functions on the reference elements.
//!
//! * `Q1Quad`: `[-1,1]^2`, nodes counter-clockwise from `(-1,-1)`.
//! * `P2Tri`: triangle `(0,0), (1,0), (0,1)`; nodes 3, 4, 5 are the midpoints
//!   of edges 0-1, 1-2 and 2-0.
//! * `P2Edge1D` / `Line3`: `[-1,1]`, nodes at -1, +1 and the midpoint 0.
//! * `Line2`: `[-1,1]`, nodes at -1 and +1.

use serde::{Deserialize, Serialize};

/// Volume (or, for 1D meshes, curve) element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    Q1Quad,
    P2Tri,
    P2Edge1D,
}

/// Boundary facet type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    Line2,
    Line3,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Q1Quad => 4,
            ElementKind::P2Tri => 6,
            ElementKind::P2Edge1D => 3,
        }
    }

    /// Topological dimension of the reference element.
    pub fn dim(self) -> usize {
        match self {
            ElementKind::P2Edge1D => 1,
            _ => 2,
        }
    }

    /// Measure of the reference element.
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Q1Quad => 4.0,
            ElementKind::P2Tri => 0.5,
            ElementKind::P2Edge1D => 2.0,
        }
    }

    /// Facet kind and local node lists of each facet, ordered so that the
    /// element interior lies to the left when walking from the first to the
    /// second node.
    pub fn facets(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Q1Quad => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            ElementKind::P2Tri => &[&[0, 1, 3], &[1, 2, 4], &[2, 0, 5]],
            ElementKind::P2Edge1D => &[],
        }
    }

    pub fn facet_kind(self) -> Option<FacetKind> {
        match self {
            ElementKind::Q1Quad => Some(FacetKind::Line2),
            ElementKind::P2Tri => Some(FacetKind::Line3),
            ElementKind::P2Edge1D => None,
        }
    }
}

impl FacetKind {
    pub fn nodes(self) -> usize {
        match self {
            FacetKind::Line2 => 2,
            FacetKind::Line3 => 3,
        }
    }
}

/// Basis values and reference gradients at one point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeEval {
    pub n: usize,
    pub phi: [f64; 6],
    pub dphi: [[f64; 2]; 6],
}

impl ShapeEval {
    fn new(n: usize) -> Self {
        Self {
            n,
            phi: [0.0; 6],
            dphi: [[0.0; 2]; 6],
        }
    }
}

/// Basis values and gradients with respect to the reference coordinates.
pub fn shape_values(kind: ElementKind, xi: [f64; 2]) -> ShapeEval {
    match kind {
        ElementKind::Q1Quad => {
            let mut s = ShapeEval::new(4);
            let (x, y) = (xi[0], xi[1]);
            let sx = [-1.0, 1.0, 1.0, -1.0];
            let sy = [-1.0, -1.0, 1.0, 1.0];
            for k in 0..4 {
                s.phi[k] = 0.25 * (1.0 + sx[k] * x) * (1.0 + sy[k] * y);
                s.dphi[k] = [
                    0.25 * sx[k] * (1.0 + sy[k] * y),
                    0.25 * sy[k] * (1.0 + sx[k] * x),
                ];
            }
            s
        }
        ElementKind::P2Tri => {
            let mut s = ShapeEval::new(6);
            let (x, y) = (xi[0], xi[1]);
            let l0 = 1.0 - x - y;
            let l = [l0, x, y];
            // gradients of barycentrics
            let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
            for k in 0..3 {
                s.phi[k] = l[k] * (2.0 * l[k] - 1.0);
                let f = 4.0 * l[k] - 1.0;
                s.dphi[k] = [f * dl[k][0], f * dl[k][1]];
            }
            let edges = [(0, 1), (1, 2), (2, 0)];
            for (m, &(a, b)) in edges.iter().enumerate() {
                s.phi[3 + m] = 4.0 * l[a] * l[b];
                s.dphi[3 + m] = [
                    4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                    4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                ];
            }
            s
        }
        ElementKind::P2Edge1D => line_values(FacetKind::Line3, xi[0]),
    }
}

/// 1D basis on `[-1, 1]`; gradients in the first slot.
pub fn line_values(kind: FacetKind, t: f64) -> ShapeEval {
    match kind {
        FacetKind::Line2 => {
            let mut s = ShapeEval::new(2);
            s.phi[0] = 0.5 * (1.0 - t);
            s.phi[1] = 0.5 * (1.0 + t);
            s.dphi[0] = [-0.5, 0.0];
            s.dphi[1] = [0.5, 0.0];
            s
        }
        FacetKind::Line3 => {
            let mut s = ShapeEval::new(3);
            s.phi[0] = 0.5 * t * (t - 1.0);
            s.phi[1] = 0.5 * t * (t + 1.0);
            s.phi[2] = 1.0 - t * t;
            s.dphi[0] = [t - 0.5, 0.0];
            s.dphi[1] = [t + 0.5, 0.0];
            s.dphi[2] = [-2.0 * t, 0.0];
            s
        }
    }
}

/// Reference coordinates of the element nodes.
pub fn reference_nodes(kind: ElementKind) -> &'static [[f64; 2]] {
    match kind {
        ElementKind::Q1Quad => &[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        ElementKind::P2Tri => &[
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
        ],
        ElementKind::P2Edge1D => &[[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ElementKind; 3] = [
        ElementKind::Q1Quad,
        ElementKind::P2Tri,
        ElementKind::P2Edge1D,
    ];

    #[test]
    fn partition_of_unity_and_gradients() {
        let pts = [[0.1, 0.2], [0.3, 0.05], [-0.4, 0.6], [0.25, 0.25]];
        for kind in KINDS {
            for p in pts {
                let s = shape_values(kind, p);
                let sum: f64 = s.phi[..s.n].iter().sum();
                assert!((sum - 1.0).abs() < 1e-14);
                for d in 0..2 {
                    let g: f64 = s.dphi[..s.n].iter().map(|g| g[d]).sum();
                    assert!(g.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn nodal_interpolation() {
        for kind in KINDS {
            for (a, x) in reference_nodes(kind).iter().enumerate() {
                let s = shape_values(kind, *x);
                for b in 0..s.n {
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((s.phi[b] - expected).abs() < 1e-14, "{kind:?} {a} {b}");
                }
            }
        }
        let s = shape_values(ElementKind::Q1Quad, [0.0, 0.0]);
        assert!(s.phi[..4].iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let s = shape_values(ElementKind::P2Edge1D, [0.0, 0.0]);
        assert_eq!(&s.phi[..3], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let eps = 1e-6;
        for kind in KINDS {
            let p = [0.21, 0.33];
            let s = shape_values(kind, p);
            for d in 0..kind.dim() {
                let mut a = p;
                let mut b = p;
                a[d] += eps;
                b[d] -= eps;
                let sa = shape_values(kind, a);
                let sb = shape_values(kind, b);
                for k in 0..s.n {
                    let fd = (sa.phi[k] - sb.phi[k]) / (2.0 * eps);
                    assert!((fd - s.dphi[k][d]).abs() < 1e-8);
                }
            }
        }
    }
}
