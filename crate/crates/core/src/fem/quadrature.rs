//! Gauss rules on the reference interval, square and triangle.

use std::f64::consts::PI;

/// Points and weights on a reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Largest Gauss-Legendre point count handed out by [`gauss_legendre`].
pub const MAX_GAUSS_POINTS: usize = 64;

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, exact for degree `2n - 1`.
///
/// Nodes are the roots of `P_n`, found by Newton iteration from the
/// Chebyshev-like initial guess `cos(pi (i + 3/4) / (n + 1/2))`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(
        (1..=MAX_GAUSS_POINTS).contains(&n),
        "gauss_legendre: n = {n} out of range"
    );
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` via the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule on the reference interval `[-1, 1]` (second coordinate unused).
pub fn line_rule(n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        points: x.iter().map(|&t| [t, 0.0]).collect(),
        weights: w,
    }
}

/// Tensor `n x n` Gauss rule on the reference square `[-1, 1]^2`.
pub fn square_rule(n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            points.push([x[a], x[b]]);
            weights.push(w[a] * w[b]);
        }
    }
    QuadratureRule { points, weights }
}

/// Six-point degree-4 rule on the reference triangle `(0,0), (1,0), (0,1)`.
pub fn triangle_rule_degree4() -> QuadratureRule {
    const A: f64 = 0.445_948_490_915_965;
    const B: f64 = 0.091_576_213_509_771;
    const WA: f64 = 0.223_381_589_678_011 / 2.0;
    const WB: f64 = 0.109_951_743_655_322 / 2.0;
    QuadratureRule {
        points: vec![
            [A, A],
            [1.0 - 2.0 * A, A],
            [A, 1.0 - 2.0 * A],
            [B, B],
            [1.0 - 2.0 * B, B],
            [B, 1.0 - 2.0 * B],
        ],
        weights: vec![WA, WA, WA, WB, WB, WB],
    }
}

/// Collapsed (Duffy) `n x n` Gauss rule on the reference triangle.
///
/// Maps `(a, b)` in `[0,1]^2` to `(a (1 - b), b)` with Jacobian `1 - b`;
/// exact for total degree `2n - 2`. All weights are positive.
pub fn triangle_rule_collapsed(n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for bi in 0..n {
        let b = 0.5 * (x[bi] + 1.0);
        for ai in 0..n {
            let a = 0.5 * (x[ai] + 1.0);
            points.push([a * (1.0 - b), b]);
            weights.push(0.25 * w[ai] * w[bi] * (1.0 - b));
        }
    }
    QuadratureRule { points, weights }
}
