//! Grid and `M_fac` sweeps, each run in its own process.
//!
//! ```toml
//! [study]
//! dir = "out/static-shell"
//! n = [64, 128, 256]
//! m_fac = [2]
//! orders = "exact"
//!
//! [base.scenario]
//! name = "shell_anisotropic"
//! n = 64
//! ```
//!
//! With `orders = "exact"` the errors are the ones each run reports against
//! the analytic solution; with `orders = "richardson"` they come from
//! differences between successive resolutions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::diagnostics::{
    order_from_errors, richardson_order_cells, richardson_order_velocity, CellLevels, Norms,
};
use super::scenario::{read_fields, Summary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMethod {
    #[default]
    Exact,
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub dir: PathBuf,
    pub n: Vec<usize>,
    #[serde(default)]
    pub m_fac: Option<Vec<usize>>,
    #[serde(default)]
    pub orders: OrderMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudySection,
    pub base: ScenarioConfig,
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            match line {
                Some(l) => Error::Config(format!("line {l}: {}", e.message().trim())),
                None => Error::Config(e.message().trim().to_string()),
            }
        })?;
        if s.study.n.is_empty() {
            return Err(Error::Config("key `study.n`: needs at least one grid".into()));
        }
        if s.study.n.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config(
                "key `study.n`: grids must double from one entry to the next".into(),
            ));
        }
        if s.study.orders == OrderMethod::Richardson && s.study.n.len() < 3 {
            return Err(Error::Config(
                "key `study.n`: Richardson orders need at least three grids".into(),
            ));
        }
        for c in s.cases() {
            c.resolve()?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn m_facs(&self) -> Vec<usize> {
        self.study
            .m_fac
            .clone()
            .unwrap_or_else(|| vec![self.base.scenario.m_fac.unwrap_or(2)])
    }

    /// One configuration per `(m_fac, n)` pair, `n` varying fastest.
    pub fn cases(&self) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for m in self.m_facs() {
            for &n in &self.study.n {
                let mut c = self.base.clone();
                c.scenario.n = n;
                c.scenario.m_fac = Some(m);
                c.output.dir = Some(self.case_dir(m, n));
                out.push(c);
            }
        }
        out
    }

    fn case_dir(&self, m: usize, n: usize) -> PathBuf {
        self.study.dir.join(format!("m{m}_n{n}"))
    }
}

/// Observed orders between consecutive grids for one `M_fac`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub m_fac: usize,
    /// Finer grid of the pair (the coarsest of the triple for Richardson).
    pub n: usize,
    pub u: [f64; 3],
    pub p: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StudyReport {
    pub errors: Vec<(usize, usize, Norms, Norms)>,
    pub orders: Vec<OrderRow>,
}

impl StudyReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>5} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "M_fac", "N", "u L1", "u L2", "u Linf", "p L1", "p L2", "p Linf"
        )
        .unwrap();
        for r in &self.orders {
            write!(s, "{:>5} {:>6}", r.m_fac, r.n).unwrap();
            for v in r.u.iter().chain(&r.p) {
                write!(s, " {v:>8.3}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every case through `exe run` and collects the order table.
pub fn run_study(study: &StudyConfig, exe: &Path) -> Result<StudyReport> {
    fs::create_dir_all(&study.study.dir)?;
    for c in study.cases() {
        let dir = c.output.dir.clone().expect("case directory");
        fs::create_dir_all(&dir)?;
        let path = dir.join("config.toml");
        fs::write(&path, c.to_toml())?;
        info!("running {}", path.display());
        let status = Command::new(exe).arg("run").arg(&path).status()?;
        match status.code() {
            Some(0) => {}
            Some(2) => {
                return Err(Error::Config(format!("case {} rejected its config", path.display())))
            }
            code => {
                return Err(Error::SolverFailure {
                    solver: "study case",
                    iterations: 0,
                    residual: code.map_or(f64::NAN, f64::from),
                })
            }
        }
    }
    let report = collect(study)?;
    let table = report.table();
    fs::write(study.study.dir.join("orders.txt"), &table)?;
    let text = toml::to_string(&report)
        .map_err(|e| Error::InvalidArgument(format!("study report: {e}")))?;
    fs::write(study.study.dir.join("orders.toml"), text)?;
    Ok(report)
}

/// Builds the order table from finished case directories.
pub fn collect(study: &StudyConfig) -> Result<StudyReport> {
    let mut report = StudyReport::default();
    for m in study.m_facs() {
        let mut summaries = Vec::new();
        for &n in &study.study.n {
            let text = fs::read_to_string(study.case_dir(m, n).join("summary.toml"))?;
            let s: Summary = toml::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("bad summary: {e}")))?;
            summaries.push(s);
        }
        match study.study.orders {
            OrderMethod::Exact => {
                for s in &summaries {
                    if let (Some(u), Some(p)) = (s.u_error, s.p_error) {
                        report.errors.push((m, s.n, u, p));
                    }
                }
                let errs: Vec<_> = report.errors.iter().filter(|e| e.0 == m).collect();
                for w in errs.windows(2) {
                    report.orders.push(OrderRow {
                        m_fac: m,
                        n: w[1].1,
                        u: order_from_errors(w[0].2, w[1].2),
                        p: order_from_errors(w[0].3, w[1].3),
                    });
                }
            }
            OrderMethod::Richardson => {
                let cases = study.cases();
                let mut levels = Vec::new();
                let mine = cases.iter().filter(|c| c.scenario.m_fac == Some(m));
                for (&n, c) in study.study.n.iter().zip(mine) {
                    let r = c.resolve()?;
                    let grid = super::scenario::build_grid(&r)?;
                    let (u, p, _) = read_fields(&study.case_dir(m, n).join("fields.dat"))?;
                    levels.push((grid, u, p));
                }
                for w in levels.windows(3) {
                    let grids = [&w[0].0, &w[1].0, &w[2].0];
                    let u = richardson_order_velocity(grids, [&w[0].1, &w[1].1, &w[2].1])?;
                    let p = richardson_order_cells(
                        &CellLevels {
                            grids,
                            fields: [&w[0].2, &w[1].2, &w[2].2],
                        },
                        true,
                    )?;
                    report.orders.push(OrderRow {
                        m_fac: m,
                        n: w[0].0.n1,
                        u,
                        p,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "[study]\ndir = \"out/s\"\nn = [32, 64, 128]\nm_fac = [1, 2]\norders = \"richardson\"\n\
                        [base.scenario]\nname = \"shell_anisotropic\"\nn = 32\ngamma = 0.15\n";

    #[test]
    fn expands_cases() {
        let s = StudyConfig::parse(TEXT).unwrap();
        let cases = s.cases();
        assert_eq!(cases.len(), 6);
        assert_eq!(cases[4].scenario.n, 64);
        assert_eq!(cases[4].scenario.m_fac, Some(2));
        assert_eq!(cases[4].output.dir, Some(PathBuf::from("out/s/m2_n64")));
    }

    #[test]
    fn rejects_bad_studies() {
        let bad_n = TEXT.replace("[32, 64, 128]", "[32, 48, 128]");
        assert!(matches!(StudyConfig::parse(&bad_n), Err(Error::Config(_))));
        let bad_m = TEXT.replace("m_fac = [1, 2]", "m_fac = [1, 4]");
        let e = StudyConfig::parse(&bad_m).unwrap_err();
        assert!(e.to_string().contains("m_fac"), "{e}");
        let unknown = TEXT.replace("orders", "order");
        assert!(matches!(StudyConfig::parse(&unknown), Err(Error::Config(_))));
    }
}
