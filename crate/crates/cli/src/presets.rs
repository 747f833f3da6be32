//! Fixed run sequences for each numerical experiment, `fig1` to `fig10`.

use dgpenalty::assembly::ProblemConfig;
use dgpenalty::pde::SystemKind;

use crate::config::{logspace, InitialCondition, PathModesConfig, PathSelect, RunConfig};
use crate::Command;

pub struct Step {
    pub name: &'static str,
    pub command: Command,
    pub config: RunConfig,
}

pub const NAMES: [&str; 10] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

fn base(system: SystemKind, elements: usize) -> RunConfig {
    let mut problem = ProblemConfig::new(system, 3);
    problem.elements = elements;
    if system == SystemKind::Advection2d {
        problem.beta = Some([1.0, 0.0]);
    }
    RunConfig {
        problem,
        ..RunConfig::default()
    }
}

fn with_taus(mut c: RunConfig, taus: Vec<f64>) -> RunConfig {
    c.taus = Some(taus);
    c
}

/// `{0} + logspace(lo, hi, n)`.
fn zero_log(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    t.extend(logspace(lo, hi, n));
    t
}

/// 2D tracking grid; each interval gets a small refinement budget because one
/// 2D spectrum is far more expensive than a 1D one.
fn coarse_2d(system: SystemKind, hi: f64) -> RunConfig {
    let mut c = with_taus(base(system, 0), zero_log(0.1, hi, 13));
    c.sweep.max_refinements = 6;
    c
}

fn step(name: &'static str, command: Command, config: RunConfig) -> Step {
    Step { name, command, config }
}

pub fn steps(name: &str) -> Option<Vec<Step>> {
    let adv1 = SystemKind::Advection1d;
    let steps = match name {
        // Eigenvalue paths of 1D advection for tau in [0, 4] with snapshots at 0, 1 and 4.
        "fig1" => {
            let mut paths = base(adv1, 8);
            paths.tau_range = Some("0:4:200".into());
            vec![
                step("paths", Command::Track, paths),
                step("snapshots", Command::Spectrum, with_taus(base(adv1, 8), vec![0.0, 1.0, 4.0])),
            ]
        }
        // A mode on a divergent path at tau = 0, 1, 10.
        "fig2" => {
            let mut c = base(adv1, 4);
            c.tau_range = Some("0:10:201".into());
            c.path_modes = Some(PathModesConfig {
                select: PathSelect::Divergent,
                taus: vec![0.0, 1.0, 10.0],
            });
            vec![step("divergent", Command::Track, c)]
        }
        // The returning (spurious) mode at tau = 0, 1, 100.
        "fig3" => {
            let mut c = with_taus(base(adv1, 4), zero_log(1e-2, 100.0, 121));
            c.path_modes = Some(PathModesConfig {
                select: PathSelect::Returning,
                taus: vec![0.0, 1.0, 100.0],
            });
            vec![step("returning", Command::Track, c)]
        }
        // Energy of the spurious mode evolved with tau = 0, 1 and 100.
        "fig4" => [("tau0", 0.0), ("tau1", 1.0), ("tau100", 100.0)]
            .into_iter()
            .map(|(n, tau)| {
                let mut c = base(adv1, 4);
                c.tau = tau;
                c.integrate.t_end = 2.0;
                c.integrate.initial = InitialCondition::Spurious { tau: 100.0 };
                step(n, Command::Integrate, c)
            })
            .collect(),
        // 2D acoustic spectra at tau = 1, 10, 50.
        "fig5" => {
            let c = with_taus(base(SystemKind::Acoustics2d, 0), vec![1.0, 10.0, 50.0]);
            vec![step("spectra", Command::Spectrum, c)]
        }
        // Coefficients of the spurious mode at tau = 0 and 100 in the tau = 1 eigenbasis.
        "fig6" => vec![step("coefficients", Command::ExpandMode, base(adv1, 4))],
        // Pressure of a returning 2D acoustic mode at tau = 0.1, 1, 100.
        "fig7" => {
            let mut c = coarse_2d(SystemKind::Acoustics2d, 100.0);
            c.path_modes = Some(PathModesConfig {
                select: PathSelect::Returning,
                taus: vec![0.1, 1.0, 100.0],
            });
            vec![step("returning", Command::Track, c)]
        }
        // 2D acoustic eigenvalue paths with snapshots at tau = 0, 1, 50.
        "fig8" => vec![
            step("paths", Command::Track, coarse_2d(SystemKind::Acoustics2d, 50.0)),
            step(
                "snapshots",
                Command::Spectrum,
                with_taus(base(SystemKind::Acoustics2d, 0), vec![0.0, 1.0, 50.0]),
            ),
        ],
        // 2D advection with beta = (1, 0): paths and snapshots at tau = 0, 1, 50.
        "fig9" => vec![
            step("paths", Command::Track, coarse_2d(SystemKind::Advection2d, 50.0)),
            step(
                "snapshots",
                Command::Spectrum,
                with_taus(base(SystemKind::Advection2d, 0), vec![0.0, 1.0, 50.0]),
            ),
        ],
        // A returning 2D advection mode at tau = 0.1, 1, 100.
        "fig10" => {
            let mut c = coarse_2d(SystemKind::Advection2d, 100.0);
            c.path_modes = Some(PathModesConfig {
                select: PathSelect::Returning,
                taus: vec![0.1, 1.0, 100.0],
            });
            vec![step("returning", Command::Track, c)]
        }
        _ => return None,
    };
    Some(steps)
}
