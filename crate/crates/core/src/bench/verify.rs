//! Quick self-checks run by `ibfsi verify`.

use std::f64::consts::PI;

use crate::bench::config::ScenarioConfig;
use crate::bench::scenario;
use crate::coupling::{restrict_rhs, spread_volume, InteractionRule};
use crate::elasticity::{pk1_gradient_check, ConstitutiveModel};
use crate::error::Result;
use crate::fem::mesh::{build_disc_mesh, build_shell_mesh};
use crate::fem::{Configuration, FeMesh};
use crate::grid::GridSpec;
use crate::kernels::{evaluate_1d, KernelKind};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Low-discrepancy sample in `[0, 1)`.
fn sample(k: usize, salt: f64) -> f64 {
    let g = 0.618_033_988_749_894_9;
    (k as f64 * g + salt).fract()
}

fn kernel_moments() -> Check {
    let mut worst: f64 = 0.0;
    for kind in KernelKind::ALL {
        let r = kind.support_radius().ceil() as i64 + 1;
        for k in 0..1000 {
            let x = sample(k, 0.1);
            let (mut s0, mut s1) = (0.0, 0.0);
            for i in -r..=r {
                let d = i as f64 - x;
                let w = evaluate_1d(kind, d);
                s0 += w;
                s1 += w * d;
            }
            worst = worst.max((s0 - 1.0).abs()).max(s1.abs());
        }
    }
    Check {
        name: "kernel moments",
        passed: worst <= 1e-13,
        detail: format!("max deviation {worst:.3e}"),
    }
}

fn adjoint_defect(mesh: &FeMesh, config: &Configuration, grid: &GridSpec, seed: usize) -> Result<f64> {
    let h = grid.h;
    let rule = InteractionRule::build(mesh, None, config, h, 3.0, 0.1)?;
    let f: Vec<[f64; 2]> = (0..mesh.n_nodes())
        .map(|l| [sample(l + seed, 0.3) - 0.5, sample(l + seed, 0.7) - 0.5])
        .collect();
    let u = grid.sample_velocity(|x| {
        let a = seed as f64 + 1.0;
        [
            (2.0 * PI * (x[0] + a * x[1])).sin(),
            (2.0 * PI * (a * x[0] - x[1])).cos(),
        ]
    });
    let kernel = KernelKind::Peskin4pt;
    let sf = spread_volume(&rule, mesh, config, &f, grid, kernel)?;
    let lhs = grid.inner_product(&sf, &u)?;
    let load = restrict_rhs(&rule, mesh, config, &u, grid, kernel)?;
    let rhs: f64 = f
        .iter()
        .zip(&load)
        .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
        .sum();
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300))
}

fn adjoint() -> Result<Check> {
    let grid = GridSpec::periodic_unit(32)?;
    let (shell, shell_config) = build_shell_mesh(0.25, 0.0625, 1, 0.1)?;
    let disc = build_disc_mesh(0.2, [0.5, 0.5], 2.0 * grid.h)?;
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let s = 1.0 + 0.05 * sample(seed, 0.2);
        let shell_c = Configuration::from_positions(
            shell_config
                .chi
                .iter()
                .map(|x| [0.5 + s * (x[0] - 0.5), 0.5 + (x[1] - 0.5) / s])
                .collect(),
        );
        let disc_c = Configuration::from_map(&disc, |x| {
            [x[0] + 0.03 * (2.0 * PI * x[1]).sin() * s, x[1]]
        });
        worst = worst
            .max(adjoint_defect(&shell, &shell_c, &grid, seed)?)
            .max(adjoint_defect(&disc, &disc_c, &grid, seed)?);
    }
    Ok(Check {
        name: "spread/interpolate adjoint",
        passed: worst <= 1e-11,
        detail: format!("max relative defect {worst:.3e}"),
    })
}

fn stress_gradients() -> Result<Check> {
    let models = [
        ConstitutiveModel::AnisotropicShell { mu_e: 1.0, w: 0.0625 },
        ConstitutiveModel::OrthotropicShellNeoHookean { mu_e: 1.0, w: 0.0625 },
        ConstitutiveModel::NeoHookeanDisc { mu_e: 0.2, p0: 0.2 },
    ];
    let mut worst: f64 = 0.0;
    for m in &models {
        for k in 0..20 {
            let a = |s| 0.4 * (sample(k, s) - 0.5);
            let f = [[1.0 + a(0.1), a(0.2)], [a(0.3), 1.0 + a(0.4)]];
            worst = worst.max(pk1_gradient_check(m, &f)?);
        }
    }
    Ok(Check {
        name: "stress is the energy gradient",
        passed: worst <= 1e-6,
        detail: format!("max relative error {worst:.3e}"),
    })
}

fn taylor_green() -> Result<Check> {
    let cfg = ScenarioConfig::parse(
        "[scenario]\nname = \"taylor_green\"\nn = 32\n[time]\nt_end = 0.05\n",
    )?
    .resolve()?;
    let out = scenario::run(&cfg, None)?;
    let e = out.summary.energy_decay_error.unwrap_or(f64::NAN);
    Ok(Check {
        name: "Taylor-Green energy decay",
        passed: e <= 5e-3,
        detail: format!("relative error {e:.3e} at t = {:.3}", out.summary.t_final),
    })
}

/// Runs every quick check. Errors inside a check count as failures.
pub fn run_checks() -> Vec<Check> {
    let failed = |name, e: crate::Error| Check {
        name,
        passed: false,
        detail: e.to_string(),
    };
    vec![
        kernel_moments(),
        adjoint().unwrap_or_else(|e| failed("spread/interpolate adjoint", e)),
        stress_gradients().unwrap_or_else(|e| failed("stress is the energy gradient", e)),
        taylor_green().unwrap_or_else(|e| failed("Taylor-Green energy decay", e)),
    ]
}
