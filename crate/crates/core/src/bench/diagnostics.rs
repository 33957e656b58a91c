//! Error norms, convergence orders and the force, volume and frequency
//! diagnostics reported by the benchmarks.

use std::f64::consts::PI;

use log::warn;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coupling::InteractionRule;
use crate::elasticity::LagrangianForce;
use crate::error::{Error, Result};
use crate::fem::mesh::{Configuration, FeMesh};
use crate::fem::shape::shape_values;
use crate::grid::{CellField, GridSpec, Plane, StaggeredField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellKind {
    Anisotropic,
    Orthotropic,
}

/// Reference pressure level `p0` of the static shell solutions.
pub fn shell_p0(kind: ShellKind, r: f64, w: f64, mu_e: f64) -> f64 {
    let c = PI * mu_e / (3.0 * w);
    let outer = (r + w).powi(3) / r;
    match kind {
        ShellKind::Anisotropic => c * (r * r - outer),
        ShellKind::Orthotropic => c * (3.0 * w * r + r * r - outer),
    }
}

/// Static (`gamma = 0`) shell pressure at `x` for a shell centered at
/// `(0.5, 0.5)`.
pub fn shell_exact_pressure(kind: ShellKind, r: f64, w: f64, mu_e: f64, x: [f64; 2]) -> f64 {
    let p0 = shell_p0(kind, r, w, mu_e);
    let rho = (x[0] - 0.5).hypot(x[1] - 0.5);
    match kind {
        ShellKind::Anisotropic => {
            if rho <= r {
                p0 + mu_e / r
            } else if rho <= r + w {
                p0 + mu_e / w / r * (r + w - rho)
            } else {
                p0
            }
        }
        ShellKind::Orthotropic => {
            if rho <= r {
                p0 + mu_e * (1.0 / r - 1.0 / (r + w))
            } else if rho <= r + w {
                p0 + mu_e / w * ((r + w - rho) / r + r / (r + w))
            } else {
                p0
            }
        }
    }
}

/// Discrete `L1`, `L2` and max norms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl Norms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.linf]
    }
}

/// Norms of a cell-centered field with `h^2` weights.
pub fn cell_norms(grid: &GridSpec, e: &CellField) -> Result<Norms> {
    if (e.values.nx, e.values.ny) != (grid.n1, grid.n2) {
        return Err(Error::ShapeMismatch(format!(
            "cell field {}x{} does not match grid {}x{}",
            e.values.nx, e.values.ny, grid.n1, grid.n2
        )));
    }
    let h2 = grid.h * grid.h;
    let mut n = Norms::default();
    for v in &e.values.data {
        n.l1 += v.abs() * h2;
        n.l2 += v * v * h2;
        n.linf = n.linf.max(v.abs());
    }
    n.l2 = n.l2.sqrt();
    Ok(n)
}

/// Norms of a staggered field: component norms with the Eulerian face
/// weights, combined as `l1 = sum`, `l2 = sqrt(sum of squares)`, `linf = max`.
pub fn velocity_norms(grid: &GridSpec, e: &StaggeredField) -> Result<Norms> {
    for c in 0..2 {
        let (nx, ny) = grid.component_dims(c);
        let p = e.component(c);
        if (p.nx, p.ny) != (nx, ny) {
            return Err(Error::ShapeMismatch(format!(
                "component {c} is {}x{}, grid expects {nx}x{ny}",
                p.nx, p.ny
            )));
        }
    }
    let h2 = grid.h * grid.h;
    let mut n = Norms::default();
    for c in 0..2 {
        let p = e.component(c);
        for j in 0..p.ny {
            for i in 0..p.nx {
                let w = grid.face_weight(c, i, j) * h2;
                let v = p.at(i, j);
                n.l1 += w * v.abs();
                n.l2 += w * v * v;
                n.linf = n.linf.max(v.abs());
            }
        }
    }
    n.l2 = n.l2.sqrt();
    Ok(n)
}

/// Error norms of a cell field against an exact function sampled at cell
/// centers. With `gauge` set, both fields are shifted to zero mean first.
pub fn cell_error_norms(
    grid: &GridSpec,
    computed: &CellField,
    exact: impl Fn([f64; 2]) -> f64,
    gauge: bool,
) -> Result<Norms> {
    let mut reference = grid.sample_cells(exact);
    let mut c = computed.clone();
    if gauge {
        reference.remove_mean();
        c.remove_mean();
    }
    for (v, r) in c.values.data.iter_mut().zip(&reference.values.data) {
        *v -= r;
    }
    cell_norms(grid, &c)
}

/// Error norms of a staggered field against an exact velocity.
pub fn velocity_error_norms(
    grid: &GridSpec,
    computed: &StaggeredField,
    exact: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<Norms> {
    let mut e = computed.clone();
    e.axpy(-1.0, &grid.sample_velocity(exact));
    velocity_norms(grid, &e)
}

fn check_nested(coarse: &GridSpec, fine: &GridSpec) -> Result<()> {
    let ok = fine.n1 == 2 * coarse.n1
        && fine.n2 == 2 * coarse.n2
        && (coarse.h - 2.0 * fine.h).abs() <= 1e-12 * coarse.h
        && coarse.origin == fine.origin
        && coarse.bc == fine.bc;
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "grids {}x{} and {}x{} are not nested by a factor of two",
            coarse.n1, coarse.n2, fine.n1, fine.n2
        )))
    }
}

/// Average of the four fine cells covering each coarse cell.
pub fn coarsen_cells(coarse: &GridSpec, fine: &GridSpec, f: &CellField) -> Result<CellField> {
    check_nested(coarse, fine)?;
    let v = &f.values;
    Ok(CellField {
        values: Plane::from_fn(coarse.n1, coarse.n2, |i, j| {
            0.25 * (v.at(2 * i, 2 * j)
                + v.at(2 * i + 1, 2 * j)
                + v.at(2 * i, 2 * j + 1)
                + v.at(2 * i + 1, 2 * j + 1))
        }),
    })
}

/// Average of the two fine faces covering each coarse face.
pub fn coarsen_velocity(
    coarse: &GridSpec,
    fine: &GridSpec,
    u: &StaggeredField,
) -> Result<StaggeredField> {
    check_nested(coarse, fine)?;
    let (a, b) = coarse.component_dims(0);
    let (c, d) = coarse.component_dims(1);
    Ok(StaggeredField {
        c1: Plane::from_fn(a, b, |i, j| {
            0.5 * (u.c1.at(2 * i, 2 * j) + u.c1.at(2 * i, 2 * j + 1))
        }),
        c2: Plane::from_fn(c, d, |i, j| {
            0.5 * (u.c2.at(2 * i, 2 * j) + u.c2.at(2 * i + 1, 2 * j))
        }),
    })
}

/// `log2(e_coarse / e_fine)` per norm, `NaN` where either error vanishes.
pub fn order_from_errors(coarse: Norms, fine: Norms) -> [f64; 3] {
    let mut out = [f64::NAN; 3];
    for (k, (a, b)) in coarse.as_array().iter().zip(fine.as_array()).enumerate() {
        if *a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            out[k] = (a / b).log2();
        } else {
            warn!("convergence order undefined: errors {a:e} and {b:e}");
        }
    }
    out
}

/// Cell fields at three nested resolutions.
pub struct CellLevels<'a> {
    pub grids: [&'a GridSpec; 3],
    pub fields: [&'a CellField; 3],
}

/// Richardson estimate of the convergence order of a cell field from
/// solutions at `N`, `2N` and `4N`.
pub fn richardson_order_cells(levels: &CellLevels, gauge: bool) -> Result<[f64; 3]> {
    let [g0, g1, g2] = levels.grids;
    let [f0, f1, f2] = levels.fields;
    let mut d0 = coarsen_cells(g0, g1, f1)?;
    let mut d1 = coarsen_cells(g1, g2, f2)?;
    let (mut a, mut b) = (f0.clone(), f1.clone());
    if gauge {
        for f in [&mut d0, &mut d1, &mut a, &mut b] {
            f.remove_mean();
        }
    }
    for (x, y) in d0.values.data.iter_mut().zip(&a.values.data) {
        *x -= y;
    }
    for (x, y) in d1.values.data.iter_mut().zip(&b.values.data) {
        *x -= y;
    }
    Ok(order_from_errors(cell_norms(g0, &d0)?, cell_norms(g1, &d1)?))
}

/// Richardson estimate of the convergence order of a velocity field.
pub fn richardson_order_velocity(
    grids: [&GridSpec; 3],
    fields: [&StaggeredField; 3],
) -> Result<[f64; 3]> {
    let mut d0 = coarsen_velocity(grids[0], grids[1], fields[1])?;
    let mut d1 = coarsen_velocity(grids[1], grids[2], fields[2])?;
    d0.axpy(-1.0, fields[0]);
    d1.axpy(-1.0, fields[1]);
    Ok(order_from_errors(
        velocity_norms(grids[0], &d0)?,
        velocity_norms(grids[1], &d1)?,
    ))
}

/// Richardson order of nodal structure positions from three runs on the
/// same mesh (time-step refinement).
pub fn richardson_order_positions(runs: [&[[f64; 2]]; 3]) -> f64 {
    let diff = |a: &[[f64; 2]], b: &[[f64; 2]]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1]))
            .fold(0.0, f64::max)
    };
    let e0 = diff(runs[0], runs[1]);
    let e1 = diff(runs[1], runs[2]);
    if e0 > 0.0 && e1 > 0.0 {
        (e0 / e1).log2()
    } else {
        warn!("convergence order undefined: differences {e0:e} and {e1:e}");
        f64::NAN
    }
}

/// Least-squares slope of `log2(error)` against `-log2(h)`.
pub fn fitted_order(h: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(h, e)| (-h.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

/// Area of the deformed body, `|sum_e sum_q J w_q|` over the assembly rule.
///
/// A reference map may reverse orientation (the shell meshes do); elements
/// whose Jacobian sign differs from the first one are reported as inverted.
pub fn structure_volume(mesh: &FeMesh, config: &Configuration) -> Result<f64> {
    if mesh.kind().dim() != 2 {
        return Err(Error::InvalidArgument(
            "structure volume needs a two-dimensional mesh".into(),
        ));
    }
    let rule = mesh.assembly_rule();
    let mut total = 0.0;
    let mut sign = 0.0;
    for e in 0..mesh.n_elements() {
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let s = shape_values(mesh.kind(), *xi);
            let (_, j) = mesh.deformation_gradient_with(config, e, &s)?;
            if sign == 0.0 {
                sign = j.signum();
            }
            if j == 0.0 || j.signum() != sign {
                return Err(Error::InvertedElement {
                    element: e,
                    jacobian: j,
                });
            }
            total += j * w * mesh.reference_measure(e, *xi);
        }
    }
    Ok(total.abs())
}

/// Net force on a rigid body and its coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftDrag {
    pub fx: f64,
    pub fy: f64,
    pub cd: f64,
    pub cl: f64,
}

/// Fluid force on a tethered body, `-integral of the tether force`, and
/// `C = F / (rho u^2 d / 2)`.
pub fn lift_drag(
    rule: &InteractionRule,
    mesh: &FeMesh,
    force: &LagrangianForce,
    rho: f64,
    u_inf: f64,
    d: f64,
) -> Result<LiftDrag> {
    let f = match force {
        LagrangianForce::Nodal { f } => f,
        _ => {
            return Err(Error::InvalidArgument(
                "lift and drag need a penalty (rigid) force".into(),
            ))
        }
    };
    let s = rule.integrate(mesh, f);
    let (fx, fy) = (-s[0], -s[1]);
    let q = 0.5 * rho * u_inf * u_inf * d;
    Ok(LiftDrag {
        fx,
        fy,
        cd: fx / q,
        cl: fy / q,
    })
}

/// Options for [`strouhal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Fraction of the series discarded as transient.
    pub discard: f64,
    /// Relative amplitude below which the signal counts as steady.
    pub noise_floor: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            discard: 0.5,
            noise_floor: 1e-6,
        }
    }
}

/// Dominant frequency of a uniformly sampled signal: Hann-windowed,
/// zero-padded periodogram with parabolic peak refinement. `None` if the
/// signal has no oscillation above the noise floor.
pub fn dominant_frequency(t: &[f64], y: &[f64], opts: SpectrumOptions) -> Option<f64> {
    if t.len() != y.len() || t.len() < 8 {
        return None;
    }
    let start = ((t.len() as f64) * opts.discard).floor() as usize;
    let (t, y) = (&t[start..], &y[start..]);
    let n = y.len();
    if n < 8 {
        return None;
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return None;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let amp = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if amp <= opts.noise_floor * scale {
        return None;
    }
    let m = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m)
        .map(|k| {
            if k < n {
                let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
                Complex64::new((y[k] - mean) * hann, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let power: Vec<f64> = buf[..m / 2].iter().map(|c| c.norm_sqr()).collect();
    let (k, _) = power
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, f64::NEG_INFINITY), |(bk, bv), (k, v)| {
            if *v > bv {
                (k, *v)
            } else {
                (bk, bv)
            }
        });
    let shift = if k + 1 < power.len() {
        let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            0.5 * (a - c) / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some((k as f64 + shift) / (m as f64 * dt))
}

/// Strouhal number `f d / u_inf` of a lift series.
pub fn strouhal(t: &[f64], cl: &[f64], d: f64, u_inf: f64, opts: SpectrumOptions) -> Option<f64> {
    dominant_frequency(t, cl, opts).map(|f| f * d / u_inf)
}

/// Mean of the samples after the transient cutoff.
pub fn tail_mean(y: &[f64], discard: f64) -> f64 {
    let start = ((y.len() as f64) * discard).floor() as usize;
    let tail = &y[start.min(y.len())..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}
