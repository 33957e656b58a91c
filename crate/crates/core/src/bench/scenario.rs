//! Benchmark set-ups and the single-run driver.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{Resolved, ScenarioKind};
use super::diagnostics::{
    cell_error_norms, lift_drag, shell_exact_pressure, strouhal, structure_volume, tail_mean,
    velocity_norms, Norms, ShellKind, SpectrumOptions,
};
use crate::elasticity::{ConstitutiveModel, RigidPenalty};
use crate::error::{Error, Result};
use crate::fem::mesh::{build_circle_mesh, build_disc_mesh, build_shell_mesh};
use crate::fem::{Configuration, MassMatrix};
use crate::grid::{write_plane, BoundaryCondition, GridSpec, StaggeredField};
use crate::ins::{FluidParams, SaddleOptions, Simulation, Structure, StructureModel};

pub const SHELL_RADIUS: f64 = 0.25;
pub const SHELL_WIDTH: f64 = 0.0625;
pub const DISC_RADIUS: f64 = 0.2;
pub const DISC_CENTER: [f64; 2] = [0.6, 0.5];
pub const CYLINDER_DIAMETER: f64 = 1.0;
/// Reduced cylinder domain `[-8, 24] x [-16, 16]`.
pub const CYLINDER_DOMAIN: ([f64; 2], [f64; 2]) = ([-8.0, -16.0], [24.0, 16.0]);

fn shell_kind(kind: ScenarioKind) -> Option<ShellKind> {
    match kind {
        ScenarioKind::ShellAnisotropic => Some(ShellKind::Anisotropic),
        ScenarioKind::ShellOrthotropic => Some(ShellKind::Orthotropic),
        _ => None,
    }
}

/// Taylor-Green vortex velocity on the unit square.
pub fn taylor_green(x: [f64; 2]) -> [f64; 2] {
    let (a, b) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
    [a.sin() * b.cos(), -a.cos() * b.sin()]
}

/// Eulerian grid of a scenario.
pub fn build_grid(r: &Resolved) -> Result<GridSpec> {
    let h = 1.0 / r.n as f64;
    match r.scenario {
        ScenarioKind::ShellAnisotropic
        | ScenarioKind::ShellOrthotropic
        | ScenarioKind::TaylorGreen => GridSpec::periodic_unit(r.n),
        ScenarioKind::SoftDiscCavity => {
            let wall = BoundaryCondition::Velocity { u1: 0.0, u2: 0.0 };
            let lid = BoundaryCondition::Velocity { u1: 1.0, u2: 0.0 };
            GridSpec::new(r.n, r.n, [0.0, 0.0], h, [wall, wall, wall, lid])
        }
        ScenarioKind::CylinderFlow => {
            let (lo, hi) = CYLINDER_DOMAIN;
            let n1 = ((hi[0] - lo[0]) / h).round() as usize;
            let n2 = ((hi[1] - lo[1]) / h).round() as usize;
            GridSpec::new(
                n1,
                n2,
                lo,
                h,
                [
                    BoundaryCondition::Velocity { u1: 1.0, u2: 0.0 },
                    BoundaryCondition::Outflow,
                    BoundaryCondition::Slip,
                    BoundaryCondition::Slip,
                ],
            )
        }
    }
}

/// Builds the grid, bodies and initial state of a scenario.
pub fn build(r: &Resolved) -> Result<Simulation> {
    let grid = build_grid(r)?;
    let fluid = FluidParams::new(r.rho, r.mu)?;
    let options = SaddleOptions {
        tol: r.solver_tol,
        ..SaddleOptions::default()
    };
    let h = 1.0 / r.n as f64;
    let elastic = |mesh, config, model| -> Result<Structure> {
        let mass = MassMatrix::assemble(&mesh, r.mass)?;
        Structure::new(
            mesh,
            config,
            StructureModel::Elastic {
                model,
                formulation: r.formulation,
            },
            mass,
            h,
            r.interaction_density,
            r.quad_rebuild_threshold,
        )
    };
    let (u0, structures) = match r.scenario {
        ScenarioKind::ShellAnisotropic | ScenarioKind::ShellOrthotropic => {
            let m = r.n / (16 * r.m_fac);
            let (mesh, config) = build_shell_mesh(SHELL_RADIUS, SHELL_WIDTH, m, r.gamma)?;
            let model = if r.scenario == ScenarioKind::ShellAnisotropic {
                ConstitutiveModel::AnisotropicShell {
                    mu_e: r.mu_e,
                    w: SHELL_WIDTH,
                }
            } else {
                ConstitutiveModel::OrthotropicShellNeoHookean {
                    mu_e: r.mu_e,
                    w: SHELL_WIDTH,
                }
            };
            (grid.zero_velocity(), vec![elastic(mesh, config, model)?])
        }
        ScenarioKind::SoftDiscCavity => {
            let mesh = build_disc_mesh(DISC_RADIUS, DISC_CENTER, r.m_fac as f64 * h)?;
            let config = Configuration::identity(&mesh);
            let model = ConstitutiveModel::NeoHookeanDisc {
                mu_e: r.mu_e,
                p0: r.p0,
            };
            (grid.zero_velocity(), vec![elastic(mesh, config, model)?])
        }
        ScenarioKind::CylinderFlow => {
            let mesh = build_circle_mesh(0.5 * CYLINDER_DIAMETER, [0.0, 0.0], r.m_fac as f64 * h)?;
            let config = Configuration::identity(&mesh);
            let (k0, e0) = RigidPenalty::default_parameters(r.rho, h, r.dt);
            let penalty = RigidPenalty::new(
                r.kappa.unwrap_or(k0),
                r.eta.unwrap_or(e0),
                config.chi.clone(),
            )?;
            let mass = MassMatrix::assemble(&mesh, r.mass)?;
            let body = Structure::new(
                mesh,
                config,
                StructureModel::Rigid(penalty),
                mass,
                h,
                r.interaction_density,
                r.quad_rebuild_threshold,
            )?;
            // uniform stream plus a weak divergence-free vortex behind the
            // body to break the symmetry
            let eps = 0.05;
            let u0 = grid.sample_velocity(|x| {
                let (dx, dy) = (x[0] - 2.0, x[1] - 0.5);
                let g = eps * (-(dx * dx + dy * dy)).exp();
                [1.0 - 2.0 * dy * g, 2.0 * dx * g]
            });
            (u0, vec![body])
        }
        ScenarioKind::TaylorGreen => {
            (grid.sample_velocity(taylor_green), Vec::new())
        }
    };
    Simulation::new(
        grid,
        fluid,
        r.kernel,
        r.dt,
        r.cfl_max,
        options,
        u0,
        structures,
    )
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub cl: f64,
    pub cd: f64,
    pub volume: f64,
    pub ke: f64,
    pub umax: f64,
}

pub const CSV_HEADER: &str = "t,CL,CD,volume,ke,umax";

impl Record {
    pub fn csv_line(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t, self.cl, self.cd, self.volume, self.ke, self.umax
        )
    }
}

/// Final-time diagnostics of a run, written as `summary.toml`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub n: usize,
    pub m_fac: usize,
    pub formulation: String,
    pub steps: usize,
    pub t_final: f64,
    pub kinetic_energy: f64,
    pub umax: f64,
    pub max_divergence: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_volume_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_error: Option<Norms>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_error: Option<Norms>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interior_pressure: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub energy_decay_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_cd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cl_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strouhal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Everything a finished run produces.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: Summary,
    pub records: Vec<Record>,
    pub sim: Simulation,
}

fn record(sim: &Simulation, r: &Resolved, v0: Option<f64>) -> Result<(Record, Option<f64>)> {
    let (mut cl, mut cd, mut volume) = (f64::NAN, f64::NAN, f64::NAN);
    let mut change = None;
    if let Some(s) = sim.structures.first() {
        match &s.model {
            StructureModel::Rigid(_) => {
                if let Some(f) = sim.last_forces.first() {
                    let ld = lift_drag(&s.rule, &s.mesh, f, r.rho, 1.0, CYLINDER_DIAMETER)?;
                    cl = ld.cl;
                    cd = ld.cd;
                }
            }
            StructureModel::Elastic { .. } => {
                volume = structure_volume(&s.mesh, &s.config)?;
                change = v0.map(|v0| (volume - v0).abs() / v0);
            }
        }
    }
    Ok((
        Record {
            t: sim.state.t,
            cl,
            cd,
            volume,
            ke: sim.kinetic_energy(),
            umax: sim.state.u.max_abs(),
        },
        change,
    ))
}

/// Mean pressure over cells within `R / 2` of the shell center.
pub fn interior_pressure(grid: &GridSpec, p: &crate::grid::CellField) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let x = grid.cell_center(i, j);
            if (x[0] - 0.5).hypot(x[1] - 0.5) <= 0.5 * SHELL_RADIUS {
                s += p.values.at(i, j);
                c += 1;
            }
        }
    }
    s / c as f64
}

fn write_fields(dir: &Path, tag: &str, sim: &Simulation) -> Result<()> {
    let h = sim.grid.h;
    let mut w = BufWriter::new(File::create(dir.join(format!("fields{tag}.dat")))?);
    write_plane(&mut w, "u1", &sim.state.u.c1, h)?;
    write_plane(&mut w, "u2", &sim.state.u.c2, h)?;
    write_plane(&mut w, "p", &sim.state.p.values, h)?;
    w.flush()?;
    for (k, s) in sim.structures.iter().enumerate() {
        let mut w = BufWriter::new(File::create(dir.join(format!("mesh{k}{tag}.dat")))?);
        s.mesh.write_dump(&mut w, Some(&s.config))?;
        w.flush()?;
    }
    Ok(())
}

/// Runs a scenario to completion. With `dir` set, writes `series.csv`, field
/// dumps and `summary.toml` there.
pub fn run(r: &Resolved, dir: Option<&Path>) -> Result<RunOutput> {
    let mut sim = build(r)?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let v0 = match sim.structures.first().map(|s| &s.model) {
        Some(StructureModel::Elastic { .. }) => {
            let s = &sim.structures[0];
            Some(structure_volume(&s.mesh, &s.config)?)
        }
        _ => None,
    };
    let ke0 = sim.kinetic_energy();
    let mut records = vec![record(&sim, r, v0)?.0];
    let mut max_change: f64 = 0.0;
    let mut max_div: f64 = 0.0;
    let mut checkpoint = 0usize;
    let every = r.output_every;
    info!(
        "{:?}: grid {}x{}, dt {:e}, t_end {}",
        r.scenario, sim.grid.n1, sim.grid.n2, r.dt, r.t_end
    );
    sim.run_until(r.t_end, |s| {
        let (rec, change) = record(s, r, v0)?;
        if let Some(c) = change {
            max_change = max_change.max(c);
        }
        if let Some(rep) = &s.last_report {
            max_div = max_div.max(rep.divergence);
        }
        if s.state.step % every == 0 {
            records.push(rec);
            if r.dump_checkpoints {
                if let Some(d) = dir {
                    checkpoint += 1;
                    write_fields(d, &format!("_{checkpoint:05}"), s)?;
                }
            }
            info!("t = {:.4}, ke = {:.6e}, umax = {:.4}", rec.t, rec.ke, rec.umax);
        }
        Ok(())
    })?;
    let last = record(&sim, r, v0)?.0;
    if records.last().map(|x| x.t) != Some(last.t) {
        records.push(last);
    }

    let mut summary = Summary {
        scenario: format!("{:?}", r.scenario),
        n: r.n,
        m_fac: r.m_fac,
        formulation: format!("{:?}", r.formulation).to_lowercase(),
        steps: sim.state.step,
        t_final: sim.state.t,
        kinetic_energy: sim.kinetic_energy(),
        umax: sim.state.u.max_abs(),
        max_divergence: max_div,
        ..Summary::default()
    };
    if v0.is_some() {
        summary.max_volume_change = Some(max_change);
    }
    if let Some(kind) = shell_kind(r.scenario) {
        if r.gamma == 0.0 {
            summary.u_error = Some(velocity_norms(&sim.grid, &sim.state.u)?);
            let exact = |x| shell_exact_pressure(kind, SHELL_RADIUS, SHELL_WIDTH, r.mu_e, x);
            summary.p_error = Some(cell_error_norms(&sim.grid, &sim.state.p, exact, true)?);
            summary.interior_pressure = Some(interior_pressure(&sim.grid, &sim.state.p));
        }
    }
    if r.scenario == ScenarioKind::TaylorGreen {
        let nu = r.mu / r.rho;
        let want = ke0 * (-16.0 * PI * PI * nu * sim.state.t).exp();
        summary.energy_decay_error = Some((summary.kinetic_energy - want).abs() / want);
    }
    if r.scenario == ScenarioKind::CylinderFlow {
        let t: Vec<f64> = records.iter().map(|x| x.t).collect();
        let cl: Vec<f64> = records.iter().map(|x| x.cl).collect();
        let cd: Vec<f64> = records.iter().map(|x| x.cd).collect();
        let opts = SpectrumOptions::default();
        summary.mean_cd = Some(tail_mean(&cd, opts.discard));
        let start = (cl.len() as f64 * opts.discard) as usize;
        summary.cl_amplitude = Some(
            cl[start..]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
        summary.strouhal = strouhal(&t, &cl, CYLINDER_DIAMETER, 1.0, opts);
        summary.note = Some(
            "uniform grid on the reduced domain [-8,24]x[-16,16]; forces from the penalty tether"
                .into(),
        );
    }

    if let Some(d) = dir {
        let mut w = BufWriter::new(File::create(d.join("series.csv"))?);
        writeln!(w, "{CSV_HEADER}")?;
        for rec in &records {
            writeln!(w, "{}", rec.csv_line())?;
        }
        w.flush()?;
        write_fields(d, "", &sim)?;
        let text = toml::to_string(&summary)
            .map_err(|e| Error::InvalidArgument(format!("summary: {e}")))?;
        fs::write(d.join("summary.toml"), text)?;
    }
    Ok(RunOutput {
        summary,
        records,
        sim,
    })
}

/// Velocity and pressure read back from a `fields.dat` dump.
pub fn read_fields(path: &Path) -> Result<(StaggeredField, crate::grid::CellField, f64)> {
    let text = fs::read_to_string(path)?;
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if line.starts_with("field ") && !current.is_empty() {
            blocks.push(std::mem::take(&mut current));
        }
        current.push_str(line);
        current.push('\n');
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    let mut planes = Vec::new();
    for b in &blocks {
        planes.push(crate::grid::read_plane(b)?);
    }
    if planes.len() != 3 || planes[0].0 != "u1" || planes[1].0 != "u2" || planes[2].0 != "p" {
        return Err(Error::InvalidArgument(format!(
            "{} is not a u1/u2/p field dump",
            path.display()
        )));
    }
    let h = planes[0].2;
    let mut it = planes.into_iter();
    let c1 = it.next().unwrap().1;
    let c2 = it.next().unwrap().1;
    let p = it.next().unwrap().1;
    Ok((StaggeredField { c1, c2 }, crate::grid::CellField { values: p }, h))
}

/// Deformed node positions from a `mesh*.dat` dump written with a
/// configuration.
pub fn read_positions(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    let bad = || Error::InvalidArgument(format!("bad mesh dump {}", path.display()));
    if header.len() != 8 || header[0] != "mesh" {
        return Err(bad());
    }
    let n: usize = header[3].parse().map_err(|_| bad())?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let v: Vec<f64> = lines
            .next()
            .ok_or_else(bad)?
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if v.len() != 4 {
            return Err(bad());
        }
        out.push([v[2], v[3]]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::ScenarioConfig;

    fn resolved(text: &str) -> Resolved {
        ScenarioConfig::parse(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn scenario_wiring() {
        let sim = build(&resolved("[scenario]\nname = \"soft_disc_cavity\"\nn = 32\n")).unwrap();
        assert_eq!(sim.grid.bc[3], BoundaryCondition::Velocity { u1: 1.0, u2: 0.0 });
        let s = &sim.structures[0];
        let v = structure_volume(&s.mesh, &s.config).unwrap();
        assert!((v - PI * 0.04).abs() < 2e-3 * PI * 0.04);

        let sim = build(&resolved("[scenario]\nname = \"cylinder_flow\"\nn = 4\n")).unwrap();
        assert_eq!((sim.grid.n1, sim.grid.n2), (128, 128));
        assert_eq!(sim.grid.origin, [-8.0, -16.0]);

        let sim = build(&resolved(
            "[scenario]\nname = \"shell_orthotropic\"\nn = 64\nm_fac = 1\n",
        ))
        .unwrap();
        assert_eq!(sim.structures[0].mesh.n_elements(), 28 * 16);
    }

    #[test]
    fn short_runs_are_deterministic() {
        let dir = std::env::temp_dir().join(format!("ibfsi-det-{}", std::process::id()));
        let text = format!(
            "[scenario]\nname = \"shell_anisotropic\"\nn = 32\nm_fac = 1\ngamma = 0.1\n\
             [time]\nt_end = 0.05\n[output]\noutput_every = 2\ndir = \"{}\"\n",
            dir.display()
        );
        let r = resolved(&text);
        let a = run(&r, Some(&dir.join("a"))).unwrap();
        let b = run(&r, Some(&dir.join("b"))).unwrap();
        let csv = |x: &str| fs::read(dir.join(x).join("series.csv")).unwrap();
        assert_eq!(csv("a"), csv("b"));
        assert_eq!(
            fs::read(dir.join("a/fields.dat")).unwrap(),
            fs::read(dir.join("b/fields.dat")).unwrap()
        );
        let (u, p, h) = read_fields(&dir.join("a/fields.dat")).unwrap();
        assert_eq!(u, a.sim.state.u);
        assert_eq!(p, a.sim.state.p);
        assert_eq!(h, a.sim.grid.h);
        let chi = read_positions(&dir.join("a/mesh0.dat")).unwrap();
        assert_eq!(chi, a.sim.structures[0].config.chi);
        assert!(a.records.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(a.summary, b.summary);
        fs::remove_dir_all(&dir).ok();
    }
}
