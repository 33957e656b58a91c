//! Constitutive models, elastic force assembly and rigid tether forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::mesh::{BoundaryMesh, Configuration, FeMesh};
use crate::fem::shape::{line_values, shape_values};
use crate::fem::{det, inverse, transpose, MassMatrix, Mat2};

/// First Piola-Kirchhoff stress models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstitutiveModel {
    /// Fibers along the first reference direction:
    /// `W = mu_e / (2 w) |F e1|^2`.
    AnisotropicShell { mu_e: f64, w: f64 },
    /// `W = mu_e / (2 w) tr(F^T F)`.
    OrthotropicShellNeoHookean { mu_e: f64, w: f64 },
    /// `P = mu_e F - p0 F^-T`, with `W = mu_e / 2 tr(F^T F) - p0 log J`.
    NeoHookeanDisc { mu_e: f64, p0: f64 },
}

impl ConstitutiveModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ConstitutiveModel::AnisotropicShell { mu_e, w }
            | ConstitutiveModel::OrthotropicShellNeoHookean { mu_e, w } => mu_e > 0.0 && w > 0.0,
            ConstitutiveModel::NeoHookeanDisc { mu_e, p0 } => mu_e > 0.0 && p0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid material parameters: {self:?}"
            )))
        }
    }

    /// Characteristic stiffness, used to scale relative stress errors.
    pub fn stiffness(&self) -> f64 {
        match *self {
            ConstitutiveModel::AnisotropicShell { mu_e, w }
            | ConstitutiveModel::OrthotropicShellNeoHookean { mu_e, w } => mu_e / w,
            ConstitutiveModel::NeoHookeanDisc { mu_e, p0 } => mu_e.max(p0.abs()),
        }
    }

    /// Whether the stress needs `F^-1` (and so `J != 0`).
    pub fn needs_inverse(&self) -> bool {
        matches!(self, ConstitutiveModel::NeoHookeanDisc { p0, .. } if *p0 != 0.0)
    }

    pub fn pk1(&self, f: &Mat2) -> Result<Mat2> {
        match *self {
            ConstitutiveModel::AnisotropicShell { mu_e, w } => {
                let k = mu_e / w;
                Ok([[k * f[0][0], 0.0], [k * f[1][0], 0.0]])
            }
            ConstitutiveModel::OrthotropicShellNeoHookean { mu_e, w } => {
                let k = mu_e / w;
                Ok([[k * f[0][0], k * f[0][1]], [k * f[1][0], k * f[1][1]]])
            }
            ConstitutiveModel::NeoHookeanDisc { mu_e, p0 } => {
                let mut p = [
                    [mu_e * f[0][0], mu_e * f[0][1]],
                    [mu_e * f[1][0], mu_e * f[1][1]],
                ];
                if p0 != 0.0 {
                    let j = det(f);
                    if !(j > 0.0) {
                        return Err(Error::InvertedElement {
                            element: usize::MAX,
                            jacobian: j,
                        });
                    }
                    let fit = transpose(&inverse(f).expect("J > 0"));
                    for i in 0..2 {
                        for k in 0..2 {
                            p[i][k] -= p0 * fit[i][k];
                        }
                    }
                }
                Ok(p)
            }
        }
    }

    pub fn strain_energy(&self, f: &Mat2) -> Result<f64> {
        let frob = f[0][0] * f[0][0] + f[0][1] * f[0][1] + f[1][0] * f[1][0] + f[1][1] * f[1][1];
        match *self {
            ConstitutiveModel::AnisotropicShell { mu_e, w } => {
                Ok(0.5 * mu_e / w * (f[0][0] * f[0][0] + f[1][0] * f[1][0]))
            }
            ConstitutiveModel::OrthotropicShellNeoHookean { mu_e, w } => Ok(0.5 * mu_e / w * frob),
            ConstitutiveModel::NeoHookeanDisc { mu_e, p0 } => {
                let j = det(f);
                if p0 != 0.0 && !(j > 0.0) {
                    return Err(Error::InvertedElement {
                        element: usize::MAX,
                        jacobian: j,
                    });
                }
                let log_j = if p0 != 0.0 { j.ln() } else { 0.0 };
                Ok(0.5 * mu_e * frob - p0 * log_j)
            }
        }
    }
}

/// Largest deviation between `pk1` and central differences of the strain
/// energy (step `1e-6`), relative to `max(|P|_max, stiffness)`.
pub fn pk1_gradient_check(model: &ConstitutiveModel, f: &Mat2) -> Result<f64> {
    let eps = 1e-6;
    let p = model.pk1(f)?;
    let mut scale = model.stiffness();
    for row in &p {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut a = *f;
            let mut b = *f;
            a[i][j] += eps;
            b[i][j] -= eps;
            let fd = (model.strain_energy(&a)? - model.strain_energy(&b)?) / (2.0 * eps);
            worst = worst.max((fd - p[i][j]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Which weak form turns stresses into Eulerian forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Single volumetric force `G`.
    Unified,
    /// Interior force `F` plus transmission force `T` on the boundary.
    #[default]
    Partitioned,
}

/// Nodal Lagrangian force coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianForce {
    /// Interior force per node and transmission force per boundary node.
    Partitioned {
        f: Vec<[f64; 2]>,
        t: Vec<[f64; 2]>,
    },
    Unified {
        g: Vec<[f64; 2]>,
    },
    /// Force density defined directly at the nodes (rigid tethers).
    Nodal {
        f: Vec<[f64; 2]>,
    },
}

impl LagrangianForce {
    /// The force that is spread over the structure's volume.
    pub fn volume(&self) -> &[[f64; 2]] {
        match self {
            LagrangianForce::Partitioned { f, .. } | LagrangianForce::Nodal { f } => f,
            LagrangianForce::Unified { g } => g,
        }
    }

    /// The force that is spread over the reference boundary, if any.
    pub fn surface(&self) -> Option<&[[f64; 2]]> {
        match self {
            LagrangianForce::Partitioned { t, .. } => Some(t),
            _ => None,
        }
    }

    pub fn all_finite(&self) -> bool {
        let ok = |v: &[[f64; 2]]| v.iter().all(|x| x[0].is_finite() && x[1].is_finite());
        ok(self.volume()) && self.surface().is_none_or(ok)
    }
}

fn tag_element(err: Error, e: usize) -> Error {
    match err {
        Error::InvertedElement { jacobian, .. } => Error::InvertedElement {
            element: e,
            jacobian,
        },
        other => other,
    }
}

/// Stress of `model` under `config` at a reference point of element `e`.
pub fn element_stress(
    mesh: &FeMesh,
    config: &Configuration,
    model: &ConstitutiveModel,
    e: usize,
    xi: [f64; 2],
) -> Result<Mat2> {
    let (f, _) = mesh.deformation_gradient(config, e, xi)?;
    model.pk1(&f).map_err(|err| tag_element(err, e))
}

/// Volume load `B_m = -int P grad(phi_m) dX` for a stress given per element
/// and reference point.
pub fn volume_rhs_with(
    mesh: &FeMesh,
    stress: impl Fn(usize, [f64; 2]) -> Result<Mat2>,
) -> Result<Vec<[f64; 2]>> {
    let rule = mesh.assembly_rule();
    let mut b = vec![[0.0; 2]; mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        let conn = mesh.element(e);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let s = shape_values(mesh.kind(), *p);
            let (g, dx) = mesh.physical_gradients(e, &s)?;
            let pk = stress(e, *p)?;
            for k in 0..s.n {
                for i in 0..2 {
                    b[conn[k]][i] -= w * dx * (pk[i][0] * g[k][0] + pk[i][1] * g[k][1]);
                }
            }
        }
    }
    Ok(b)
}

/// Boundary traction load `int (P N) phi_m dA`, per global node.
pub fn surface_rhs_with(
    mesh: &FeMesh,
    bm: &BoundaryMesh,
    stress: impl Fn(usize, [f64; 2]) -> Result<Mat2>,
) -> Result<Vec<[f64; 2]>> {
    let mut b = vec![[0.0; 2]; mesh.n_nodes()];
    let rule = bm.rule();
    for fc in &bm.facets {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let s = line_values(bm.kind, p[0]);
            let (n, da) = mesh.facet_geometry(fc.element, fc.local_facet, p[0]);
            let pk = stress(fc.element, mesh.facet_point(fc.local_facet, p[0]))?;
            let pn = [
                pk[0][0] * n[0] + pk[0][1] * n[1],
                pk[1][0] * n[0] + pk[1][1] * n[1],
            ];
            for k in 0..s.n {
                for i in 0..2 {
                    b[fc.nodes[k]][i] += w * da * pn[i] * s.phi[k];
                }
            }
        }
    }
    Ok(b)
}

/// Boundary L2 projection of the transmission force `T = -P N`, per
/// boundary node.
pub fn transmission_with(
    mesh: &FeMesh,
    bm: &BoundaryMesh,
    stress: impl Fn(usize, [f64; 2]) -> Result<Mat2>,
) -> Result<Vec<[f64; 2]>> {
    let mut b = vec![[0.0; 2]; bm.n_nodes()];
    let rule = bm.rule();
    for fc in &bm.facets {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let s = line_values(bm.kind, p[0]);
            let (n, da) = mesh.facet_geometry(fc.element, fc.local_facet, p[0]);
            let pk = stress(fc.element, mesh.facet_point(fc.local_facet, p[0]))?;
            let pn = [
                pk[0][0] * n[0] + pk[0][1] * n[1],
                pk[1][0] * n[0] + pk[1][1] * n[1],
            ];
            for k in 0..s.n {
                for i in 0..2 {
                    b[fc.local[k]][i] -= w * da * pn[i] * s.phi[k];
                }
            }
        }
    }
    bm.mass.solve(&b)
}

/// Partitioned form: `M F = -int P grad(phi) dX + int (P N) phi dA` and the
/// projected transmission force.
pub fn assemble_partitioned(
    mesh: &FeMesh,
    bm: &BoundaryMesh,
    config: &Configuration,
    model: &ConstitutiveModel,
    mass: &MassMatrix,
) -> Result<LagrangianForce> {
    let stress = |e, xi| element_stress(mesh, config, model, e, xi);
    let mut b = volume_rhs_with(mesh, stress)?;
    let s = surface_rhs_with(mesh, bm, stress)?;
    for (bv, sv) in b.iter_mut().zip(&s) {
        bv[0] += sv[0];
        bv[1] += sv[1];
    }
    let f = mass.solve(&b)?;
    let t = transmission_with(mesh, bm, stress)?;
    Ok(LagrangianForce::Partitioned { f, t })
}

/// Unified form: `M G = -int P grad(phi) dX`.
pub fn assemble_unified(
    mesh: &FeMesh,
    config: &Configuration,
    model: &ConstitutiveModel,
    mass: &MassMatrix,
) -> Result<LagrangianForce> {
    let b = volume_rhs_with(mesh, |e, xi| element_stress(mesh, config, model, e, xi))?;
    Ok(LagrangianForce::Unified { g: mass.solve(&b)? })
}

/// Tether force `kappa (chi(0) - chi) - eta dchi/dt` toward an anchor
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidPenalty {
    pub kappa: f64,
    pub eta: f64,
    pub anchor: Vec<[f64; 2]>,
}

impl RigidPenalty {
    pub fn new(kappa: f64, eta: f64, anchor: Vec<[f64; 2]>) -> Result<Self> {
        if !(kappa >= 0.0) || !(eta >= 0.0) || !kappa.is_finite() || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty parameters must be non-negative (kappa = {kappa}, eta = {eta})"
            )));
        }
        Ok(Self { kappa, eta, anchor })
    }

    /// Defaults scaled to the explicit stability limit of the tether:
    /// `kappa = 0.25 rho h / dt^2 * 0.5`, `eta = 0.25 rho h / dt * 0.5`.
    pub fn default_parameters(rho: f64, h: f64, dt: f64) -> (f64, f64) {
        (0.125 * rho * h / (dt * dt), 0.125 * rho * h / dt)
    }
}

pub fn rigid_force(penalty: &RigidPenalty, config: &Configuration) -> Result<LagrangianForce> {
    if penalty.anchor.len() != config.len() {
        return Err(Error::ShapeMismatch(format!(
            "penalty anchor has {} nodes, configuration has {}",
            penalty.anchor.len(),
            config.len()
        )));
    }
    let f = penalty
        .anchor
        .iter()
        .zip(config.chi.iter().zip(&config.dchi_dt))
        .map(|(a, (x, v))| {
            [
                penalty.kappa * (a[0] - x[0]) - penalty.eta * v[0],
                penalty.kappa * (a[1] - x[1]) - penalty.eta * v[1],
            ]
        })
        .collect();
    Ok(LagrangianForce::Nodal { f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_disc_mesh, build_shell_mesh};
    use crate::fem::MassVariant;

    const I: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn pk1_at_identity() {
        let a = ConstitutiveModel::AnisotropicShell {
            mu_e: 1.0,
            w: 0.0625,
        };
        assert_eq!(a.pk1(&I).unwrap(), [[16.0, 0.0], [0.0, 0.0]]);
        let o = ConstitutiveModel::OrthotropicShellNeoHookean {
            mu_e: 1.0,
            w: 0.0625,
        };
        assert_eq!(o.pk1(&I).unwrap(), [[16.0, 0.0], [0.0, 16.0]]);
        let d = ConstitutiveModel::NeoHookeanDisc { mu_e: 0.2, p0: 0.2 };
        let p = d.pk1(&I).unwrap();
        assert!(p.iter().flatten().all(|v| v.abs() < 1e-16));
    }

    #[test]
    fn neo_hookean_rejects_inversion() {
        let d = ConstitutiveModel::NeoHookeanDisc { mu_e: 0.2, p0: 0.2 };
        assert!(d.pk1(&[[1.0, 0.0], [0.0, -1.0]]).is_err());
        let d0 = ConstitutiveModel::NeoHookeanDisc { mu_e: 0.2, p0: 0.0 };
        assert!(d0.pk1(&[[1.0, 0.0], [0.0, -1.0]]).is_ok());
    }

    #[test]
    fn gradient_check_at_identity() {
        let a = ConstitutiveModel::AnisotropicShell {
            mu_e: 1.0,
            w: 0.0625,
        };
        assert!(pk1_gradient_check(&a, &I).unwrap() <= 1e-8);
        let f = [[1.1, 0.2], [-0.1, 0.9]];
        let d = ConstitutiveModel::NeoHookeanDisc { mu_e: 0.2, p0: 0.2 };
        assert!(pk1_gradient_check(&d, &f).unwrap() <= 1e-6);
    }

    #[test]
    fn constant_stress_gives_no_interior_force() {
        let mesh = build_disc_mesh(0.2, [0.5, 0.5], 0.025).unwrap();
        let bm = BoundaryMesh::new(&mesh).unwrap();
        let stress = |_: usize, _: [f64; 2]| Ok([[1.3, -0.4], [0.7, 2.1]]);
        let v = volume_rhs_with(&mesh, stress).unwrap();
        let s = surface_rhs_with(&mesh, &bm, stress).unwrap();
        let worst = v
            .iter()
            .zip(&s)
            .map(|(a, b)| (a[0] + b[0]).abs().max((a[1] + b[1]).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn shell_equilibrium_has_no_transmission() {
        let (mesh, config) = build_shell_mesh(0.25, 0.0625, 2, 0.0).unwrap();
        let bm = BoundaryMesh::new(&mesh).unwrap();
        let m = MassMatrix::assemble(&mesh, MassVariant::Consistent).unwrap();
        let a = ConstitutiveModel::AnisotropicShell {
            mu_e: 1.0,
            w: 0.0625,
        };
        let force = assemble_partitioned(&mesh, &bm, &config, &a, &m).unwrap();
        let t = force.surface().unwrap();
        assert!(t.iter().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));
        let g = assemble_unified(&mesh, &config, &a, &m).unwrap();
        for (x, y) in force.volume().iter().zip(g.volume()) {
            assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn rigid_force_cases() {
        let anchor = vec![[0.0, 0.0], [1.0, 0.0]];
        let p = RigidPenalty::new(10.0, 0.0, anchor.clone()).unwrap();
        let c = Configuration::from_positions(anchor.clone());
        assert_eq!(rigid_force(&p, &c).unwrap().volume(), &[[0.0, 0.0]; 2]);
        let moved = Configuration::from_positions(vec![[0.1, -0.2], [1.1, -0.2]]);
        for v in rigid_force(&p, &moved).unwrap().volume() {
            assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14);
        }
        let damp = RigidPenalty::new(0.0, 2.0, anchor.clone()).unwrap();
        let mut c = Configuration::from_positions(anchor);
        c.dchi_dt = vec![[0.5, 1.0]; 2];
        assert_eq!(rigid_force(&damp, &c).unwrap().volume(), &[[-1.0, -2.0]; 2]);
        assert!(RigidPenalty::new(-1.0, 0.0, vec![]).is_err());
    }
}
