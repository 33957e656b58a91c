//! One-dimensional regularized delta functions and their grid stencils.
//!
//! All kernels are written in grid units: `phi(r)` with `r = (x - x_k) / h`.
//! The two-dimensional kernel is the tensor product
//! `delta_h(x, y) = phi(x / h) * phi(y / h) / h^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regularized delta function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// Piecewise-linear hat, support radius 1.
    #[serde(rename = "ib2")]
    PiecewiseLinear2pt,
    /// Three-point kernel of Roma, Peskin and Berger, support radius 1.5.
    #[serde(rename = "ib3")]
    Smooth3pt,
    /// Standard four-point kernel of Peskin, support radius 2.
    #[serde(rename = "ib4")]
    Peskin4pt,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [
        KernelKind::PiecewiseLinear2pt,
        KernelKind::Smooth3pt,
        KernelKind::Peskin4pt,
    ];

    /// Support radius in grid cells.
    pub fn support_radius(self) -> f64 {
        match self {
            KernelKind::PiecewiseLinear2pt => 1.0,
            KernelKind::Smooth3pt => 1.5,
            KernelKind::Peskin4pt => 2.0,
        }
    }

    /// Number of grid points touched along one axis.
    pub fn width(self) -> usize {
        match self {
            KernelKind::PiecewiseLinear2pt => 2,
            KernelKind::Smooth3pt => 3,
            KernelKind::Peskin4pt => 4,
        }
    }

    pub fn config_name(self) -> &'static str {
        match self {
            KernelKind::PiecewiseLinear2pt => "ib2",
            KernelKind::Smooth3pt => "ib3",
            KernelKind::Peskin4pt => "ib4",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.config_name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ib2" => Ok(KernelKind::PiecewiseLinear2pt),
            "ib3" => Ok(KernelKind::Smooth3pt),
            "ib4" => Ok(KernelKind::Peskin4pt),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel '{other}' (expected ib2, ib3 or ib4)"
            ))),
        }
    }
}

/// `phi(r)` for a grid-relative offset `r`. Zero outside the support.
pub fn evaluate_1d(kind: KernelKind, r: f64) -> f64 {
    let a = r.abs();
    match kind {
        KernelKind::PiecewiseLinear2pt => {
            if a < 1.0 {
                1.0 - a
            } else {
                0.0
            }
        }
        KernelKind::Smooth3pt => {
            if a <= 0.5 {
                (1.0 + (1.0 - 3.0 * a * a).sqrt()) / 3.0
            } else if a < 1.5 {
                let b = 1.0 - a;
                (5.0 - 3.0 * a - (1.0 - 3.0 * b * b).max(0.0).sqrt()) / 6.0
            } else {
                0.0
            }
        }
        KernelKind::Peskin4pt => {
            if a < 1.0 {
                (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt()) / 8.0
            } else if a < 2.0 {
                (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).max(0.0).sqrt()) / 8.0
            } else {
                0.0
            }
        }
    }
}

/// Tensor-product kernel density `phi(dx/h) phi(dy/h) / h^2`.
pub fn evaluate_2d(kind: KernelKind, dx: f64, dy: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    Ok(evaluate_1d(kind, dx / h) * evaluate_1d(kind, dy / h) / (h * h))
}

/// How grid points are laid out along one axis.
///
/// Point `k` sits at `origin + (k + offset) h` for `k` in `0..count`.
/// Faces use `offset = 0`, cell centers `offset = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLayout {
    pub origin: f64,
    pub h: f64,
    pub offset: f64,
    pub count: usize,
    /// Periodic axes wrap indices modulo `count`.
    pub periodic: bool,
}

/// Kernel weights along one axis; at most four entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub index: [usize; 4],
    pub weight: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.index[k], self.weight[k]))
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight[..self.len].iter().sum()
    }
}

/// Unclipped stencil: signed grid indices and weights covering the support
/// of `phi` around the grid coordinate `s = (x - origin)/h - offset`.
pub fn raw_stencil(kind: KernelKind, s: f64) -> ([i64; 4], [f64; 4], usize) {
    let width = kind.width();
    let first = match kind {
        KernelKind::PiecewiseLinear2pt => s.floor() as i64,
        KernelKind::Smooth3pt => s.round() as i64 - 1,
        KernelKind::Peskin4pt => s.floor() as i64 - 1,
    };
    let mut idx = [0i64; 4];
    let mut w = [0.0; 4];
    for k in 0..width {
        let i = first + k as i64;
        idx[k] = i;
        w[k] = evaluate_1d(kind, s - i as f64);
    }
    (idx, w, width)
}

/// Stencil of grid indices and weights around the physical coordinate `x`.
///
/// On periodic axes indices wrap. On bounded axes, weights that fall outside
/// `0..count` are dropped and the remaining weights are rescaled to keep their
/// sum equal to the unclipped sum.
pub fn stencil(kind: KernelKind, x: f64, axis: &AxisLayout) -> Stencil {
    let s = (x - axis.origin) / axis.h - axis.offset;
    let (idx, w, width) = raw_stencil(kind, s);
    let n = axis.count as i64;
    let mut out = Stencil {
        index: [0; 4],
        weight: [0.0; 4],
        len: 0,
    };
    if axis.periodic {
        for k in 0..width {
            out.index[k] = idx[k].rem_euclid(n) as usize;
            out.weight[k] = w[k];
        }
        out.len = width;
        return out;
    }
    let total: f64 = w[..width].iter().sum();
    let mut kept = 0.0;
    for k in 0..width {
        if idx[k] >= 0 && idx[k] < n {
            out.index[out.len] = idx[k] as usize;
            out.weight[out.len] = w[k];
            out.len += 1;
            kept += w[k];
        }
    }
    if out.len < width && kept > 0.0 {
        let scale = total / kept;
        for k in 0..out.len {
            out.weight[k] *= scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(evaluate_1d(KernelKind::Peskin4pt, 0.0), 0.5);
        for kind in KernelKind::ALL {
            assert_eq!(evaluate_1d(kind, 10.0), 0.0);
            assert_eq!(evaluate_1d(kind, -10.0), 0.0);
        }
        assert_eq!(evaluate_1d(KernelKind::PiecewiseLinear2pt, 0.25), 0.75);
        assert!((evaluate_1d(KernelKind::Smooth3pt, 0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_product() {
        let k = KernelKind::Peskin4pt;
        assert_eq!(evaluate_2d(k, 0.0, 0.0, 1.0).unwrap(), 0.25);
        assert_eq!(evaluate_2d(k, 0.0, 0.0, 0.5).unwrap(), 1.0);
        let h = 0.1;
        assert_eq!(
            evaluate_2d(KernelKind::Smooth3pt, 2.0 * h, 0.0, h).unwrap(),
            0.0
        );
        assert!(evaluate_2d(k, 0.0, 0.0, 0.0).is_err());
        assert!(evaluate_2d(k, 0.0, 0.0, -1.0).is_err());
    }

    fn unit_axis(periodic: bool) -> AxisLayout {
        AxisLayout {
            origin: 0.0,
            h: 0.125,
            offset: 0.0,
            count: 10,
            periodic,
        }
    }

    #[test]
    fn four_point_on_a_face() {
        let st = stencil(KernelKind::Peskin4pt, 0.5, &unit_axis(true));
        assert_eq!(st.len, 4);
        // offsets r = 1, 0, -1, -2
        let expected = [0.25, 0.5, 0.25, 0.0];
        assert_eq!(&st.index, &[3, 4, 5, 6]);
        for k in 0..4 {
            assert!((st.weight[k] - expected[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_on_a_face() {
        let st = stencil(KernelKind::PiecewiseLinear2pt, 0.375, &unit_axis(false));
        let w: Vec<(usize, f64)> = st.iter().filter(|(_, w)| *w != 0.0).collect();
        assert_eq!(w.len(), 1);
        assert!((w[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_wrap() {
        let st = stencil(KernelKind::Peskin4pt, 0.01, &unit_axis(true));
        assert_eq!(st.index, [9, 0, 1, 2]);
        assert!((st.weight_sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clipped_stencil_renormalizes() {
        let st = stencil(KernelKind::Peskin4pt, 0.02, &unit_axis(false));
        assert_eq!(st.len, 3);
        assert!(st.iter().all(|(i, _)| i < 10));
        assert!((st.weight_sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stencil_partition_of_unity() {
        let axis = AxisLayout {
            origin: -0.3,
            h: 0.07,
            offset: 0.5,
            count: 40,
            periodic: false,
        };
        for kind in KernelKind::ALL {
            for i in 0..200 {
                let x = -0.3 + 0.2 + i as f64 * 0.0123;
                let st = stencil(kind, x, &axis);
                assert!((st.weight_sum() - 1.0).abs() < 1e-14, "{kind} {x}");
            }
        }
    }

    #[test]
    fn parse_names() {
        for kind in KernelKind::ALL {
            assert_eq!(kind.config_name().parse::<KernelKind>().unwrap(), kind);
        }
        assert!("ib6".parse::<KernelKind>().is_err());
    }
}
