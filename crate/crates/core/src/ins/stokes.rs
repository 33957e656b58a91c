//! Solver for the time-discrete Stokes system
//!
//! ```text
//!  alpha u - beta Lap_h u + grad_h p = r_u
//!                       -div_h u     = r_p
//! ```
//!
//! On doubly periodic grids the system is diagonalized exactly. Otherwise it
//! is solved by restarted flexible GMRES, preconditioned by one projection
//! step built from the fast separable solvers.

use log::debug;

use super::fastsolve::{Basis, SeparableSolver};
use crate::error::{Error, Result};
use crate::grid::{CellField, GridSpec, StaggeredField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 300,
            restart: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolveReport {
    pub iterations: usize,
    pub residual: f64,
    /// `max |div_h u|`
    pub divergence: f64,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: StaggeredField,
    pub p: CellField,
    pub report: SaddleSolveReport,
}

#[derive(Debug)]
pub struct SaddleSolver {
    grid: GridSpec,
    alpha: f64,
    beta: f64,
    options: SaddleOptions,
    velocity: [SeparableSolver; 2],
    cells: SeparableSolver,
    fixed: [Vec<bool>; 2],
    /// Pressure is defined up to a constant.
    gauge: bool,
    lift: StaggeredField,
    lift_lap: StaggeredField,
    lift_div: CellField,
}

impl SaddleSolver {
    pub fn new(grid: &GridSpec, alpha: f64, beta: f64, options: SaddleOptions) -> Result<Self> {
        if !(options.tol > 0.0 && options.tol <= 1e-4) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must lie in (0, 1e-4], got {}",
                options.tol
            )));
        }
        if !(alpha >= 0.0 && beta > 0.0) || options.restart == 0 {
            return Err(Error::InvalidArgument(format!(
                "saddle solver needs alpha >= 0, beta > 0 and restart > 0 (alpha {alpha}, beta {beta})"
            )));
        }
        let velocity = [
            SeparableSolver::for_component(grid, 0)?,
            SeparableSolver::for_component(grid, 1)?,
        ];
        let cells = SeparableSolver::for_cells(grid)?;
        let (bx, by) = cells.axes();
        let singular = |b: Basis| matches!(b, Basis::Periodic | Basis::NeumannHalf);
        let gauge = singular(bx.basis) && singular(by.basis);

        let mut lift = grid.zero_velocity();
        grid.apply_velocity_bc(&mut lift);
        let mut lift_lap = grid.zero_velocity();
        grid.laplacian_into(&lift, &mut lift_lap, false);
        lift_lap.scale(beta);
        let lift_div = grid.divergence(&lift)?;
        Ok(Self {
            grid: grid.clone(),
            alpha,
            beta,
            options,
            velocity,
            cells,
            fixed: grid.fixed_mask(),
            gauge,
            lift,
            lift_lap,
            lift_div,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn options(&self) -> SaddleOptions {
        self.options
    }

    /// Solves the system. `rhs_p` defaults to zero; `guess` seeds the
    /// iterative path.
    pub fn solve(
        &self,
        rhs_u: &StaggeredField,
        rhs_p: Option<&CellField>,
        guess: Option<(&StaggeredField, &CellField)>,
    ) -> Result<SaddleSolution> {
        let zero_p;
        let rhs_p = match rhs_p {
            Some(r) => r,
            None => {
                zero_p = self.grid.zero_cells();
                &zero_p
            }
        };
        if self.grid.periodic_x() && self.grid.periodic_y() {
            self.solve_periodic(rhs_u, rhs_p)
        } else {
            self.solve_iterative(rhs_u, rhs_p, guess)
        }
    }

    fn divergence_ok(&self, u: &StaggeredField) -> (f64, bool) {
        let div = self
            .grid
            .divergence(u)
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY);
        let bound = 10.0 * self.options.tol * u.max_abs() / self.grid.h;
        (div, div <= bound)
    }

    fn solve_periodic(&self, rhs_u: &StaggeredField, rhs_p: &CellField) -> Result<SaddleSolution> {
        let g = &self.grid;
        let mut d = g.divergence(rhs_u)?;
        if rhs_p.max_abs() > 0.0 {
            let lap = g.cell_laplacian(rhs_p)?;
            for ((v, r), l) in d
                .values
                .data
                .iter_mut()
                .zip(&rhs_p.values.data)
                .zip(&lap.values.data)
            {
                *v += self.alpha * r - self.beta * l;
            }
        }
        let mut p = CellField {
            values: self.cells.solve(&d.values, 0.0, -1.0),
        };
        p.remove_mean();
        let mut r = rhs_u.clone();
        r.axpy(-1.0, &g.gradient(&p)?);
        let u = StaggeredField {
            c1: self.velocity[0].solve(&r.c1, self.alpha, self.beta),
            c2: self.velocity[1].solve(&r.c2, self.alpha, self.beta),
        };
        let residual = self.relative_residual(&u, &p, rhs_u, rhs_p)?;
        let (divergence, _) = self.divergence_ok(&u);
        Ok(SaddleSolution {
            u,
            p,
            report: SaddleSolveReport {
                iterations: 1,
                residual,
                divergence,
            },
        })
    }

    fn relative_residual(
        &self,
        u: &StaggeredField,
        p: &CellField,
        rhs_u: &StaggeredField,
        rhs_p: &CellField,
    ) -> Result<f64> {
        let g = &self.grid;
        let mut au = g.laplacian(u)?;
        au.scale(-self.beta);
        au.axpy(self.alpha, u);
        au.axpy(1.0, &g.gradient(p)?);
        au.axpy(-1.0, rhs_u);
        let du = g.divergence(u)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for c in 0..2 {
            for (k, (a, r)) in au
                .component(c)
                .data
                .iter()
                .zip(&rhs_u.component(c).data)
                .enumerate()
            {
                if !self.fixed[c][k] {
                    num += a * a;
                    den += r * r;
                }
            }
        }
        for (d, r) in du.values.data.iter().zip(&rhs_p.values.data) {
            num += (d + r) * (d + r);
            den += r * r;
        }
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }

    fn layout(&self) -> [usize; 3] {
        [
            self.lift.c1.data.len(),
            self.lift.c2.data.len(),
            self.grid.n1 * self.grid.n2,
        ]
    }

    fn pack(&self, u: &StaggeredField, p: &CellField, out: &mut [f64]) {
        let [a, b, _] = self.layout();
        out[..a].copy_from_slice(&u.c1.data);
        out[a..a + b].copy_from_slice(&u.c2.data);
        out[a + b..].copy_from_slice(&p.values.data);
    }

    fn unpack(&self, x: &[f64]) -> (StaggeredField, CellField) {
        let [a, b, _] = self.layout();
        let mut u = self.grid.zero_velocity();
        let mut p = self.grid.zero_cells();
        u.c1.data.copy_from_slice(&x[..a]);
        u.c2.data.copy_from_slice(&x[a..a + b]);
        p.values.data.copy_from_slice(&x[a + b..]);
        (u, p)
    }

    fn apply_operator(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (u, p) = self.unpack(x);
        let mut au = g.zero_velocity();
        g.laplacian_into(&u, &mut au, true);
        au.scale(-self.beta);
        au.axpy(self.alpha, &u);
        let mut gp = g.zero_velocity();
        g.gradient_into(&p, &mut gp);
        au.axpy(1.0, &gp);
        for c in 0..2 {
            let (dst, src) = (au.component_mut(c), u.component(c));
            for (k, f) in self.fixed[c].iter().enumerate() {
                if *f {
                    dst.data[k] = src.data[k];
                }
            }
        }
        let mut du = g.zero_cells();
        g.divergence_into(&u, &mut du);
        du.values.data.iter_mut().for_each(|v| *v = -*v);
        self.pack(&au, &du, out);
    }

    fn apply_preconditioner(&self, r: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (ru, rp) = self.unpack(r);
        let mut ut = StaggeredField {
            c1: self.velocity[0].solve(&ru.c1, self.alpha, self.beta),
            c2: self.velocity[1].solve(&ru.c2, self.alpha, self.beta),
        };
        let mut s = g.zero_cells();
        g.divergence_into(&ut, &mut s);
        for (v, r) in s.values.data.iter_mut().zip(&rp.values.data) {
            *v += r;
        }
        let phi = CellField {
            values: self.cells.solve(&s.values, 0.0, -1.0),
        };
        let mut gphi = g.zero_velocity();
        g.gradient_into(&phi, &mut gphi);
        ut.axpy(-1.0, &gphi);
        for c in 0..2 {
            let (dst, src) = (ut.component_mut(c), ru.component(c));
            for (k, f) in self.fixed[c].iter().enumerate() {
                if *f {
                    dst.data[k] = src.data[k];
                }
            }
        }
        let mut p = phi;
        for (v, sv) in p.values.data.iter_mut().zip(&s.values.data) {
            *v = self.alpha * *v - self.beta * sv;
        }
        self.pack(&ut, &p, out);
    }

    fn solve_iterative(
        &self,
        rhs_u: &StaggeredField,
        rhs_p: &CellField,
        guess: Option<(&StaggeredField, &CellField)>,
    ) -> Result<SaddleSolution> {
        let g = &self.grid;
        let n: usize = self.layout().iter().sum();

        let mut bu = rhs_u.clone();
        bu.axpy(1.0, &self.lift_lap);
        for c in 0..2 {
            let dst = bu.component_mut(c);
            for (k, f) in self.fixed[c].iter().enumerate() {
                if *f {
                    dst.data[k] = 0.0;
                }
            }
        }
        let mut bp = rhs_p.clone();
        for (v, d) in bp.values.data.iter_mut().zip(&self.lift_div.values.data) {
            *v += d;
        }
        let mut b = vec![0.0; n];
        self.pack(&bu, &bp, &mut b);
        let bnorm = norm(&b);

        let mut x = vec![0.0; n];
        if let Some((u0, p0)) = guess {
            let mut uf = u0.clone();
            uf.axpy(-1.0, &self.lift);
            for c in 0..2 {
                let dst = uf.component_mut(c);
                for (k, f) in self.fixed[c].iter().enumerate() {
                    if *f {
                        dst.data[k] = 0.0;
                    }
                }
            }
            self.pack(&uf, p0, &mut x);
        }

        let finish = |x: &[f64], iterations: usize, rnorm: f64| {
            let (mut u, mut p) = self.unpack(x);
            u.axpy(1.0, &self.lift);
            g.apply_velocity_bc(&mut u);
            if self.gauge {
                p.remove_mean();
            }
            let (divergence, ok) = self.divergence_ok(&u);
            let residual = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
            (
                SaddleSolution {
                    u,
                    p,
                    report: SaddleSolveReport {
                        iterations,
                        residual,
                        divergence,
                    },
                },
                ok,
            )
        };

        if bnorm == 0.0 {
            let (sol, _) = finish(&vec![0.0; n], 0, 0.0);
            return Ok(sol);
        }

        let tol = self.options.tol;
        let mut target = tol * bnorm;
        let mut used = 0;
        loop {
            let budget = self.options.max_iterations - used;
            let (it, rnorm) = fgmres(
                |v, o| self.apply_operator(v, o),
                |v, o| self.apply_preconditioner(v, o),
                &b,
                &mut x,
                target,
                self.options.restart,
                budget,
            );
            used += it;
            let (sol, div_ok) = finish(&x, used, rnorm);
            debug!(
                "saddle solve: {} iterations, residual {:e}, divergence {:e}",
                used, sol.report.residual, sol.report.divergence
            );
            if rnorm <= tol * bnorm && div_ok {
                return Ok(sol);
            }
            if used >= self.options.max_iterations || it == 0 && rnorm > target {
                return Err(Error::SolverFailure {
                    solver: "saddle FGMRES",
                    iterations: used,
                    residual: sol.report.residual,
                });
            }
            if rnorm <= target {
                target = rnorm * 0.1;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted right-preconditioned flexible GMRES. Returns the number of
/// iterations performed and the final residual norm.
fn fgmres(
    apply_a: impl Fn(&[f64], &mut [f64]),
    apply_m: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    target: f64,
    restart: usize,
    max_iterations: usize,
) -> (usize, f64) {
    let n = b.len();
    let mut total = 0;
    let mut r = vec![0.0; n];
    loop {
        apply_a(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta <= target || total >= max_iterations {
            return (total, beta);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut gvec = vec![0.0; restart + 1];
        gvec[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let mut zk = vec![0.0; n];
            apply_m(&v[k], &mut zk);
            let mut w = vec![0.0; n];
            apply_a(&zk, &mut w);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hnext = norm(&w);
            hess[k + 1][k] = hnext;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let den = a.hypot(bb);
            let (c, s) = if den == 0.0 {
                (1.0, 0.0)
            } else {
                (a / den, bb / den)
            };
            cs[k] = c;
            sn[k] = s;
            hess[k][k] = c * a + s * bb;
            hess[k + 1][k] = 0.0;
            gvec[k + 1] = -s * gvec[k];
            gvec[k] *= c;
            total += 1;
            k_used = k + 1;
            if gvec[k + 1].abs() <= target || total >= max_iterations || hnext == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / hnext).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = gvec[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 {
                s / hess[i][i]
            } else {
                0.0
            };
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryCondition;
    use std::f64::consts::PI;

    fn cavity(n: usize) -> GridSpec {
        use BoundaryCondition::*;
        let wall = Velocity { u1: 0.0, u2: 0.0 };
        GridSpec::new(
            n,
            n,
            [0.0, 0.0],
            1.0 / n as f64,
            [wall, wall, wall, Velocity { u1: 1.0, u2: 0.0 }],
        )
        .unwrap()
    }

    fn channel(n: usize) -> GridSpec {
        use BoundaryCondition::*;
        let wall = Velocity { u1: 0.0, u2: 0.0 };
        GridSpec::new(
            n,
            n,
            [0.0, 0.0],
            1.0 / n as f64,
            [Periodic, Periodic, wall, wall],
        )
        .unwrap()
    }

    fn open(n: usize) -> GridSpec {
        use BoundaryCondition::*;
        GridSpec::new(
            2 * n,
            n,
            [0.0, 0.0],
            1.0 / n as f64,
            [Velocity { u1: 1.0, u2: 0.0 }, Outflow, Slip, Slip],
        )
        .unwrap()
    }

    #[test]
    fn zero_forcing_gives_zero() {
        for grid in [GridSpec::periodic_unit(16).unwrap(), channel(16)] {
            let s = SaddleSolver::new(&grid, 10.0, 0.5, SaddleOptions::default()).unwrap();
            let sol = s.solve(&grid.zero_velocity(), None, None).unwrap();
            assert_eq!(sol.u.max_abs(), 0.0);
            assert_eq!(sol.p.max_abs(), 0.0);
        }
    }

    #[test]
    fn rejects_loose_tolerance() {
        let grid = channel(8);
        let opts = SaddleOptions {
            tol: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            SaddleSolver::new(&grid, 1.0, 1.0, opts),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn solutions_satisfy_the_system() {
        let grids = [
            GridSpec::periodic_unit(16).unwrap(),
            cavity(16),
            channel(16),
            open(8),
        ];
        for grid in grids {
            let s = SaddleSolver::new(&grid, 20.0, 0.3, SaddleOptions::default()).unwrap();
            let r =
                grid.sample_velocity(|x| [(3.0 * x[0]).sin() + x[1], (2.0 * x[1]).cos() * x[0]]);
            let sol = s.solve(&r, None, None).unwrap();
            assert!(
                sol.report.residual <= 1e-9,
                "{:?}: {:?}",
                grid.bc,
                sol.report
            );
            let bound = 10.0 * 1e-9 * sol.u.max_abs() / grid.h;
            assert!(
                sol.report.divergence <= bound,
                "{:?}: {:?}",
                grid.bc,
                sol.report
            );
            let direct = s
                .relative_residual(&sol.u, &sol.p, &r, &grid.zero_cells())
                .unwrap();
            assert!(direct < 1e-8, "{:?}: {direct}", grid.bc);
        }
    }

    #[test]
    fn cavity_pressure_has_zero_mean() {
        let grid = cavity(16);
        let s = SaddleSolver::new(&grid, 5.0, 0.05, SaddleOptions::default()).unwrap();
        let sol = s.solve(&grid.zero_velocity(), None, None).unwrap();
        assert!(sol.p.mean().abs() < 1e-12);
        assert!(sol.u.max_abs() > 0.1);
        assert!(sol.report.iterations < 40, "{:?}", sol.report);
    }

    #[test]
    fn guess_does_not_change_the_answer() {
        let grid = cavity(16);
        let s = SaddleSolver::new(&grid, 5.0, 0.05, SaddleOptions::default()).unwrap();
        let r = grid.sample_velocity(|x| [x[1], -x[0]]);
        let a = s.solve(&r, None, None).unwrap();
        let bad_p = grid.sample_cells(|x| 100.0 * x[0]);
        let b = s
            .solve(&r, None, Some((&grid.zero_velocity(), &bad_p)))
            .unwrap();
        let mut d = a.u.clone();
        d.axpy(-1.0, &b.u);
        assert!(d.max_abs() < 1e-7 * a.u.max_abs().max(1.0));
    }

    fn poiseuille_error(n: usize) -> f64 {
        let grid = channel(n);
        let mu = 0.1;
        let f = 1.0;
        let s = SaddleSolver::new(&grid, 0.0, mu, SaddleOptions::default()).unwrap();
        let r = grid.sample_velocity(|_| [f, 0.0]);
        let sol = s.solve(&r, None, None).unwrap();
        let mut err: f64 = 0.0;
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let y = grid.face_position(0, i, j)[1];
                let want = f / (2.0 * mu) * y * (1.0 - y);
                err = err.max((sol.u.c1.at(i, j) - want).abs());
            }
        }
        assert!(sol.u.c2.max_abs() < 1e-10);
        err
    }

    #[test]
    fn steady_poiseuille_profile() {
        let e16 = poiseuille_error(16);
        let e32 = poiseuille_error(32);
        // second-order closure at the half-point walls
        assert!(e32 <= 1.0 / 32.0_f64.powi(2) * 2.0, "{e32}");
        assert!(e16 / e32 > 3.5 || e32 < 1e-12, "{e16} {e32}");
    }

    #[test]
    fn periodic_solve_is_exact_for_a_mode() {
        let grid = GridSpec::periodic_unit(32).unwrap();
        let (alpha, beta) = (4.0, 0.2);
        let k = 2.0 * PI;
        let u = grid.sample_velocity(|x| [(k * x[1]).sin(), 0.0]);
        let lap = grid.laplacian(&u).unwrap();
        let mut r = u.clone();
        r.scale(alpha);
        r.axpy(-beta, &lap);
        let s = SaddleSolver::new(&grid, alpha, beta, SaddleOptions::default()).unwrap();
        let sol = s.solve(&r, None, None).unwrap();
        let mut d = sol.u.clone();
        d.axpy(-1.0, &u);
        assert!(d.max_abs() < 1e-12);
        assert!(sol.p.max_abs() < 1e-12);
    }
}
