//! Scenario configuration files.
//!
//! ```toml
//! [scenario]
//! name = "shell_anisotropic"
//! n = 64
//! m_fac = 2
//! gamma = 0.0
//!
//! [structure]
//! kernel = "ib4"
//! formulation = "partitioned"
//!
//! [output]
//! dir = "out/shell64"
//! output_every = 16
//! ```
//!
//! Omitted keys take the scenario defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elasticity::Formulation;
use crate::error::{Error, Result};
use crate::fem::MassVariant;
use crate::kernels::KernelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ShellAnisotropic,
    ShellOrthotropic,
    SoftDiscCavity,
    CylinderFlow,
    TaylorGreen,
}

impl ScenarioKind {
    pub fn is_shell(self) -> bool {
        matches!(self, Self::ShellAnisotropic | Self::ShellOrthotropic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioKind,
    /// Cells per unit length (cells per diameter for the cylinder).
    pub n: usize,
    #[serde(default)]
    pub m_fac: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub rho: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    pub kernel: Option<KernelKind>,
    pub formulation: Option<Formulation>,
    pub mass: Option<MassVariant>,
    pub mu_e: Option<f64>,
    pub p0: Option<f64>,
    pub interaction_density: Option<f64>,
    pub quad_rebuild_threshold: Option<f64>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub solver_tol: Option<f64>,
    pub cfl_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub output_every: Option<usize>,
    /// Write Eulerian and Lagrangian dumps with every CSV row as well as at
    /// the final time.
    pub dump_checkpoints: Option<bool>,
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub fluid: FluidSection,
    #[serde(default)]
    pub structure: StructureSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Configuration with every default filled in and checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub m_fac: usize,
    pub gamma: f64,
    pub rho: f64,
    pub mu: f64,
    pub kernel: KernelKind,
    pub formulation: Formulation,
    pub mass: MassVariant,
    pub mu_e: f64,
    pub p0: f64,
    pub interaction_density: f64,
    pub quad_rebuild_threshold: f64,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub solver_tol: f64,
    pub cfl_max: f64,
    pub dir: PathBuf,
    pub output_every: usize,
    pub dump_checkpoints: bool,
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {msg}"))
}

impl ScenarioConfig {
    /// Parses TOML text; errors carry the line and key of the problem.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let msg = e.message().trim().to_string();
            match line {
                Some(l) => Error::Config(format!("line {l}: {msg}")),
                None => Error::Config(msg),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Fills scenario defaults and validates every value.
    pub fn resolve(&self) -> Result<Resolved> {
        let kind = self.scenario.name;
        let n = self.scenario.n;
        let gamma = self.scenario.gamma.unwrap_or(0.0);
        let m_fac = self.scenario.m_fac.unwrap_or(2);
        if ![1, 2, 4].contains(&m_fac) {
            return Err(config_error("scenario.m_fac", format!("must be 1, 2 or 4, got {m_fac}")));
        }
        if n == 0 {
            return Err(config_error("scenario.n", "must be positive"));
        }
        let h = 1.0 / n as f64;
        if kind.is_shell() {
            if !n.is_power_of_two() || n < 32 {
                return Err(config_error(
                    "scenario.n",
                    format!("shells need a power of two >= 32, got {n}"),
                ));
            }
            if !n.is_multiple_of(16 * m_fac) {
                return Err(config_error(
                    "scenario.m_fac",
                    format!("N / (16 M_fac) must be an integer (N = {n}, M_fac = {m_fac})"),
                ));
            }
        }
        if kind == ScenarioKind::CylinderFlow && n < 4 {
            return Err(config_error("scenario.n", "cylinder needs at least 4 cells per diameter"));
        }
        if kind.is_shell() && gamma.abs() >= 0.2 {
            return Err(config_error("scenario.gamma", "must satisfy |gamma| < 0.2"));
        }
        if kind != ScenarioKind::TaylorGreen && kind != ScenarioKind::CylinderFlow && n < 8 {
            return Err(config_error("scenario.n", "must be at least 8"));
        }

        let rho = self.fluid.rho.unwrap_or(1.0);
        let mu = self.fluid.mu.unwrap_or(match kind {
            ScenarioKind::ShellAnisotropic | ScenarioKind::ShellOrthotropic => {
                if gamma == 0.0 {
                    1.0
                } else {
                    0.01
                }
            }
            ScenarioKind::SoftDiscCavity | ScenarioKind::TaylorGreen => 0.01,
            ScenarioKind::CylinderFlow => 0.005,
        });
        positive("fluid.rho", rho)?;
        positive("fluid.mu", mu)?;

        let s = &self.structure;
        let kernel = s.kernel.unwrap_or(KernelKind::Peskin4pt);
        let formulation = s.formulation.unwrap_or_default();
        let mass = s.mass.unwrap_or_default();
        let mu_e = s.mu_e.unwrap_or(match kind {
            ScenarioKind::SoftDiscCavity => 0.2,
            _ => 1.0,
        });
        positive("structure.mu_e", mu_e)?;
        let p0 = s.p0.unwrap_or(0.0);
        finite("structure.p0", p0)?;
        if s.p0.is_some() && kind != ScenarioKind::SoftDiscCavity {
            return Err(config_error("structure.p0", "only the soft disc uses p0"));
        }
        let interaction_density = s
            .interaction_density
            .unwrap_or(crate::coupling::DEFAULT_DENSITY);
        if !(interaction_density >= 1.0) || !interaction_density.is_finite() {
            return Err(config_error("structure.interaction_density", "must be >= 1"));
        }
        let quad_rebuild_threshold = s
            .quad_rebuild_threshold
            .unwrap_or(crate::coupling::DEFAULT_REBUILD_THRESHOLD);
        if !(quad_rebuild_threshold > 0.0) || !quad_rebuild_threshold.is_finite() {
            return Err(config_error("structure.quad_rebuild_threshold", "must be positive"));
        }
        if (s.kappa.is_some() || s.eta.is_some()) && kind != ScenarioKind::CylinderFlow {
            return Err(config_error("structure.kappa", "penalty parameters need the cylinder"));
        }
        if let Some(k) = s.kappa {
            positive("structure.kappa", k)?;
        }
        if let Some(e) = s.eta {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(config_error("structure.eta", "must be non-negative"));
            }
        }

        let dt = self.time.dt.unwrap_or(
            h * match kind {
                ScenarioKind::ShellAnisotropic
                | ScenarioKind::ShellOrthotropic
                | ScenarioKind::TaylorGreen => 0.25,
                ScenarioKind::SoftDiscCavity => 0.125,
                ScenarioKind::CylinderFlow => 0.1,
            },
        );
        positive("time.dt", dt)?;
        let t_end = self.time.t_end.unwrap_or(match kind {
            ScenarioKind::ShellAnisotropic | ScenarioKind::ShellOrthotropic => {
                if gamma == 0.0 {
                    3.0
                } else {
                    0.75
                }
            }
            ScenarioKind::SoftDiscCavity => 10.0,
            ScenarioKind::CylinderFlow => 150.0,
            ScenarioKind::TaylorGreen => 0.1,
        });
        positive("time.t_end", t_end)?;

        let solver_tol = self.solver.solver_tol.unwrap_or(1e-9);
        if !(solver_tol > 0.0 && solver_tol <= 1e-4) {
            return Err(config_error("solver.solver_tol", "must lie in (0, 1e-4]"));
        }
        let cfl_max = self.solver.cfl_max.unwrap_or(0.5);
        if !(cfl_max > 0.0 && cfl_max <= 0.5) {
            return Err(config_error("solver.cfl_max", "must lie in (0, 0.5]"));
        }
        let output_every = self.output.output_every.unwrap_or(10);
        if output_every == 0 {
            return Err(config_error("output.output_every", "must be positive"));
        }
        let dir = self
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Resolved {
            scenario: kind,
            n,
            m_fac,
            gamma,
            rho,
            mu,
            kernel,
            formulation,
            mass,
            mu_e,
            p0,
            interaction_density,
            quad_rebuild_threshold,
            kappa: s.kappa,
            eta: s.eta,
            dt,
            t_end,
            solver_tol,
            cfl_max,
            dir,
            output_every,
            dump_checkpoints: self.output.dump_checkpoints.unwrap_or(false),
        })
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell(extra: &str) -> String {
        format!("[scenario]\nname = \"shell_anisotropic\"\nn = 64\n{extra}")
    }

    #[test]
    fn shell_defaults() {
        let r = ScenarioConfig::parse(&shell("")).unwrap().resolve().unwrap();
        assert_eq!(r.m_fac, 2);
        assert_eq!(r.mu, 1.0);
        assert_eq!(r.t_end, 3.0);
        assert_eq!(r.dt, 0.25 / 64.0);
        assert_eq!(r.kernel, KernelKind::Peskin4pt);
        assert_eq!(r.formulation, Formulation::Partitioned);
        let dynamic = ScenarioConfig::parse(&shell("gamma = 0.15\n"))
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!((dynamic.mu, dynamic.t_end), (0.01, 0.75));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let e = ScenarioConfig::parse(&shell("[fluid]\nrho = 1.0\nviscosity = 2.0\n")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 6"), "{msg}");
        assert!(msg.contains("viscosity"), "{msg}");
    }

    #[test]
    fn bad_values_name_their_key() {
        for (extra, key) in [
            ("m_fac = 3\n", "scenario.m_fac"),
            ("[time]\ndt = -1.0\n", "time.dt"),
            ("[solver]\nsolver_tol = 0.1\n", "solver.solver_tol"),
            ("[solver]\ncfl_max = 0.9\n", "solver.cfl_max"),
            ("[structure]\nkappa = 3.0\n", "structure.kappa"),
        ] {
            let e = ScenarioConfig::parse(&shell(extra))
                .unwrap()
                .resolve()
                .unwrap_err();
            assert!(matches!(e, Error::Config(_)));
            assert!(e.to_string().contains(key), "{e}");
        }
        let e = ScenarioConfig::parse(
            "[scenario]\nname = \"shell_orthotropic\"\nn = 48\n",
        )
        .unwrap()
        .resolve()
        .unwrap_err();
        assert!(e.to_string().contains("scenario.n"));
        let e = ScenarioConfig::parse(&shell("[structure]\nkernel = \"ib6\"\n")).unwrap_err();
        assert!(e.to_string().contains("line 5"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::parse(&shell("m_fac = 4\n[structure]\nformulation = \"unified\"\n"))
            .unwrap();
        assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn scenario_defaults() {
        let disc = ScenarioConfig::parse("[scenario]\nname = \"soft_disc_cavity\"\nn = 64\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!((disc.mu, disc.mu_e, disc.t_end), (0.01, 0.2, 10.0));
        assert_eq!(disc.dt, 0.125 / 64.0);
        let cyl = ScenarioConfig::parse("[scenario]\nname = \"cylinder_flow\"\nn = 20\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cyl.mu, 0.005);
        assert!((cyl.dt - 0.005).abs() < 1e-15);
    }
}
