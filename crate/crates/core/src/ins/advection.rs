//! Upwind PPM approximation of `u . grad_h u` on the staggered grid.
//!
//! Each component is advected in conservative form over its own control
//! volume, `div(a q) - q div(a)`, with the advecting velocity `a` averaged
//! onto the control-volume faces. Face values of `q` come from a fourth-order
//! interface interpolant and the extremum-preserving limiter of Colella and
//! Sekora.

use crate::grid::{GridSpec, Plane, StaggeredField, GHOSTS};

const LIMITER_C: f64 = 1.25;

/// Limited left and right face values of every cell of a padded line.
///
/// `q` holds `n + 2 GHOSTS` values; the result covers cells `-1..=n`, stored
/// at offset one (`out[k + 1]` is cell `k`).
fn reconstruct(q: &[f64], n: usize, left: &mut Vec<f64>, right: &mut Vec<f64>) {
    let g = GHOSTS;
    // interfaces between padded m and m+1 for m = g-2 ..= g+n
    let m0 = g - 2;
    let count = n + 3;
    let mut face = vec![0.0; count];
    for (k, f) in face.iter_mut().enumerate() {
        let m = m0 + k;
        let (qm, q0, q1, q2) = (q[m - 1], q[m], q[m + 1], q[m + 2]);
        let mut v = 7.0 / 12.0 * (q0 + q1) - 1.0 / 12.0 * (qm + q2);
        if (v - q0) * (q1 - v) < 0.0 {
            let d2 = 3.0 * (q0 - 2.0 * v + q1);
            let d2l = qm - 2.0 * q0 + q1;
            let d2r = q0 - 2.0 * q1 + q2;
            let lim = limited(d2, &[d2l, d2r]);
            v = 0.5 * (q0 + q1) - lim / 6.0;
        }
        *f = v;
    }
    left.clear();
    right.clear();
    // cell padded index p = g-1 ..= g+n; its left face is face[p - 1 - m0]
    for p in g - 1..=g + n {
        let c = q[p];
        let mut ql = face[p - 1 - m0];
        let mut qr = face[p - m0];
        if (qr - c) * (c - ql) <= 0.0 || (q[p - 1] - c) * (c - q[p + 1]) <= 0.0 {
            let d2 = 6.0 * (ql + qr - 2.0 * c);
            let d2c = q[p - 1] - 2.0 * c + q[p + 1];
            let d2l = q[p - 2] - 2.0 * q[p - 1] + c;
            let d2r = c - 2.0 * q[p + 1] + q[p + 2];
            if d2 != 0.0 {
                let lim = limited(d2, &[d2c, d2l, d2r]);
                ql = c + (ql - c) * lim / d2;
                qr = c + (qr - c) * lim / d2;
            } else {
                ql = c;
                qr = c;
            }
        } else {
            if (qr - c).abs() >= 2.0 * (ql - c).abs() {
                qr = c - 2.0 * (ql - c);
            }
            if (ql - c).abs() >= 2.0 * (qr - c).abs() {
                ql = c - 2.0 * (qr - c);
            }
        }
        left.push(ql);
        right.push(qr);
    }
}

fn limited(d2: f64, others: &[f64]) -> f64 {
    let s = d2.signum();
    if d2 == 0.0 || others.iter().any(|o| o.signum() != s || *o == 0.0) {
        return 0.0;
    }
    others
        .iter()
        .fold(d2.abs(), |m, o| m.min(LIMITER_C * o.abs()))
        * s
}

fn upwind(a: f64, from_left: f64, from_right: f64) -> f64 {
    if a > 0.0 {
        from_left
    } else if a < 0.0 {
        from_right
    } else {
        0.5 * (from_left + from_right)
    }
}

/// Accumulates `(div(a q) - q div a)` along one line into `out`.
///
/// `a[k]` is the advecting velocity on the face between cells `k - 1` and
/// `k` for `k = 0..=n`.
fn line_term(
    q: &[f64],
    n: usize,
    a: &[f64],
    inv_h: f64,
    out: &mut [f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) {
    let (left, right) = scratch;
    reconstruct(q, n, left, right);
    let g = GHOSTS;
    let mut flux_lo = a[0] * upwind(a[0], right[0], left[1]);
    for k in 0..n {
        let ahi = a[k + 1];
        let flux_hi = ahi * upwind(ahi, right[k + 1], left[k + 2]);
        let qk = q[g + k];
        out[k] += ((flux_hi - flux_lo) - qk * (ahi - a[k])) * inv_h;
        flux_lo = flux_hi;
    }
}

/// Discrete advective term `u . grad_h u`. Prescribed boundary faces receive
/// zero.
pub fn advect(u: &StaggeredField, grid: &GridSpec) -> StaggeredField {
    let g = GHOSTS;
    let inv_h = 1.0 / grid.h;
    let padded = [grid.pad(0, &u.c1, false), grid.pad(1, &u.c2, false)];
    let mut out = grid.zero_velocity();
    let mut scratch = (Vec::new(), Vec::new());
    for c in 0..2 {
        let q = &padded[c];
        let (nx, ny) = grid.component_dims(c);
        let mut acc = Plane::zeros(nx, ny);
        let mut a = vec![0.0; nx.max(ny) + 1];
        // x direction
        for j in 0..ny {
            let pj = j + g;
            for (k, ak) in a.iter_mut().take(nx + 1).enumerate() {
                // face between cells k-1 and k, padded cells pk-1 and pk
                let pk = k + g;
                *ak = if c == 0 {
                    0.5 * (q.at(pk - 1, pj) + q.at(pk, pj))
                } else {
                    let u1 = &padded[0];
                    0.5 * (u1.at(pk, pj - 1) + u1.at(pk, pj))
                };
            }
            let line = &q.data[pj * q.nx..(pj + 1) * q.nx];
            let row = &mut acc.data[j * nx..(j + 1) * nx];
            line_term(line, nx, &a[..nx + 1], inv_h, row, &mut scratch);
        }
        // y direction
        let mut col = vec![0.0; ny + 2 * g];
        let mut out_col = vec![0.0; ny];
        for i in 0..nx {
            let pi = i + g;
            for (jj, v) in col.iter_mut().enumerate() {
                *v = q.at(pi, jj);
            }
            for (k, ak) in a.iter_mut().take(ny + 1).enumerate() {
                let pk = k + g;
                *ak = if c == 1 {
                    0.5 * (q.at(pi, pk - 1) + q.at(pi, pk))
                } else {
                    let u2 = &padded[1];
                    0.5 * (u2.at(pi - 1, pk) + u2.at(pi, pk))
                };
            }
            out_col.iter_mut().for_each(|v| *v = 0.0);
            line_term(&col, ny, &a[..ny + 1], inv_h, &mut out_col, &mut scratch);
            for (j, v) in out_col.iter().enumerate() {
                acc.add(i, j, *v);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                if grid.is_fixed(c, i, j) {
                    acc.set(i, j, 0.0);
                }
            }
        }
        *out.component_mut(c) = acc;
    }
    out
}
