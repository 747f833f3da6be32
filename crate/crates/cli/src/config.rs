//! Run configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use dgpenalty::assembly::ProblemConfig;
use dgpenalty::pde::FluxKind;
use dgpenalty::tauanalysis::{ClassificationRule, SweepOptions};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub flux: FluxKind,
    /// Single tau used when no list or range is given.
    pub tau: f64,
    pub taus: Option<Vec<f64>>,
    /// `a:b:n` (linear) or `a:b:logN` (logarithmic), both ends included.
    pub tau_range: Option<String>,
    pub track: bool,
    pub export_matrices: bool,
    /// Spectrum indices written to `modes.csv`.
    pub modes: Vec<usize>,
    pub sweep: SweepConfig,
    pub returning: ReturningConfig,
    pub path_modes: Option<PathModesConfig>,
    pub expand: ExpandConfig,
    pub integrate: IntegrateConfig,
    /// Output directory; never written to manifests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            flux: FluxKind::Penalty,
            tau: 1.0,
            taus: None,
            tau_range: None,
            track: false,
            export_matrices: false,
            modes: Vec::new(),
            sweep: SweepConfig::default(),
            returning: ReturningConfig::default(),
            path_modes: None,
            expand: ExpandConfig::default(),
            integrate: IntegrateConfig::default(),
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub min_step: f64,
    pub max_refinements: usize,
    pub coincidence_tol: f64,
    pub classification: ClassificationRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = SweepOptions::default();
        Self {
            min_step: d.min_step,
            max_refinements: d.max_refinements,
            coincidence_tol: d.coincidence_tol,
            classification: d.classification,
        }
    }
}

impl SweepConfig {
    pub fn options(&self, track: bool, parallel: bool) -> SweepOptions {
        SweepOptions {
            min_step: self.min_step,
            max_refinements: self.max_refinements,
            coincidence_tol: self.coincidence_tol,
            track,
            classification: self.classification,
            parallel,
        }
    }
}

/// Detection of conforming-limit paths that were strongly damped at intermediate tau.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturningConfig {
    /// Defaults to the first and last sample of the sweep.
    pub window: Option<[f64; 2]>,
    pub factor: f64,
}

impl Default for ReturningConfig {
    fn default() -> Self {
        Self {
            window: None,
            factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSelect {
    /// The most damped divergent path whose final eigenvalue has `Im >= 0`.
    Divergent,
    /// The returning path with the strongest intermediate damping.
    Returning,
}

/// Eigenvectors of one tracked path, exported by `track`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathModesConfig {
    pub select: PathSelect,
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpandConfig {
    pub basis_tau: f64,
    /// The returning mode is found at the largest of these and followed
    /// along its path to the others.
    pub mode_taus: Vec<f64>,
    /// Smallest positive tau of the tracking grid `{0} + logspace(.., max tau)`.
    pub sweep_tau_min: f64,
    pub sweep_samples: usize,
    pub threshold: f64,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        Self {
            basis_tau: 1.0,
            mode_taus: vec![0.0, 100.0],
            sweep_tau_min: 1e-2,
            sweep_samples: 121,
            threshold: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialCondition {
    /// `exp(-|x - c|^2 / width^2)` in the first field, `c` the domain centre.
    Gaussian { width: f64 },
    /// `sin(k pi x)` (times `sin(k pi y)` in 2D) in the first field.
    Sine { wavenumber: f64 },
    /// Real part of the returning eigenvector found at `tau`.
    Spurious { tau: f64 },
}

impl std::str::FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |d: f64| -> Result<f64, String> {
            arg.map_or(Ok(d), |a| a.parse().map_err(|_| format!("bad number {a:?} in {s:?}")))
        };
        match kind {
            "gaussian" => Ok(Self::Gaussian { width: num(0.25)? }),
            "sine" => Ok(Self::Sine { wavenumber: num(1.0)? }),
            "spurious" => Ok(Self::Spurious { tau: num(100.0)? }),
            _ => Err(format!("unknown initial condition {s:?} (expected gaussian[:w]|sine[:k]|spurious[:tau])")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateConfig {
    pub t_end: f64,
    /// Defaults to the largest step below `cfl / rho` that divides `t_end`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub initial: InitialCondition,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: None,
            cfl: 0.5,
            initial: InitialCondition::Gaussian { width: 0.25 },
        }
    }
}

/// Samples described by `a:b:n` or `a:b:logN`.
pub fn parse_tau_range(s: &str) -> Result<Vec<f64>, String> {
    let bad = |why: &str| format!("tau_range {s:?}: {why}");
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected a:b:n or a:b:logN"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad("bad lower bound"))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad("bad upper bound"))?;
    let (log, count) = match parts[2].trim().strip_prefix("log") {
        Some(n) => (true, n),
        None => (false, parts[2].trim()),
    };
    let n: usize = count.parse().map_err(|_| bad("bad sample count"))?;
    if !(a.is_finite() && b.is_finite()) || a < 0.0 {
        return Err(bad("bounds must be finite and nonnegative"));
    }
    if n < 2 || b <= a {
        return Err(bad("need at least two samples and b > a"));
    }
    if log {
        if a <= 0.0 {
            return Err(bad("logarithmic ranges need a > 0"));
        }
        Ok(logspace(a, b, n))
    } else {
        Ok((0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect())
    }
}

/// `n` logarithmically spaced samples with exact end points.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.log10(), b.log10());
    (0..n)
        .map(|i| match i {
            0 => a,
            _ if i + 1 == n => b,
            _ => 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64),
        })
        .collect()
}

/// Contents of a config file. A manifest is accepted too; its recorded config is used.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg_value = match (value.get("command"), value.get("config")) {
        (Some(_), Some(c)) => c.clone(),
        (Some(_), None) => {
            return Err(CliError::Config(format!(
                "{}: preset manifests hold several configs; use `rerun`",
                path.display()
            )))
        }
        _ => value,
    };
    serde_json::from_value(cfg_value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Explicit list, then range, then `None`.
    pub fn tau_samples(&self) -> Result<Option<Vec<f64>>, CliError> {
        if let Some(t) = &self.taus {
            return Ok(Some(t.clone()));
        }
        match &self.tau_range {
            Some(r) => parse_tau_range(r).map(Some).map_err(CliError::Config),
            None => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |field: &str, why: String| Err(CliError::Config(format!("{field}: {why}")));
        let p = &self.problem;
        if p.degree == 0 {
            return err("problem.degree", "must be at least 1".into());
        }
        if p.system.dim() == 1 && p.elements == 0 {
            return err("problem.elements", "must be at least 1".into());
        }
        if p.system.dim() == 2 && (p.nx == 0 || p.ny == 0) {
            return err("problem.nx/ny", "must be at least 1".into());
        }
        if let Some(beta) = p.beta {
            if !beta.iter().all(|b| b.is_finite()) {
                return err("problem.beta", format!("must be finite, got {beta:?}"));
            }
        }
        if let Some(d) = p.domain {
            let dims = p.system.dim();
            if d[..dims].iter().any(|r| !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1])) {
                return err("problem.domain", format!("each range needs lo < hi, got {d:?}"));
            }
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return err("tau", format!("must be finite and nonnegative, got {}", self.tau));
        }
        if let Some(t) = &self.taus {
            if let Some(bad) = t.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                return err("taus", format!("samples must be finite and nonnegative, got {bad}"));
            }
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return err("taus", "samples must be strictly increasing".into());
            }
        }
        if let Some(r) = &self.tau_range {
            parse_tau_range(r).map_err(CliError::Config)?;
        }
        if !(self.sweep.min_step > 0.0) {
            return err("sweep.min_step", "must be positive".into());
        }
        if !(self.returning.factor > 1.0) {
            return err("returning.factor", "must exceed 1".into());
        }
        if let Some(pm) = &self.path_modes {
            if pm.taus.is_empty() || pm.taus.iter().any(|t| !(*t >= 0.0)) {
                return err("path_modes.taus", "need at least one nonnegative tau".into());
            }
        }
        let e = &self.expand;
        if e.mode_taus.is_empty() || e.mode_taus.iter().chain([&e.basis_tau]).any(|t| !(*t >= 0.0 && t.is_finite())) {
            return err("expand", "basis_tau and mode_taus must be finite and nonnegative".into());
        }
        if !(e.sweep_tau_min > 0.0) || e.sweep_samples < 2 || !(e.threshold > 0.0) {
            return err("expand", "sweep_tau_min and threshold must be positive, sweep_samples at least 2".into());
        }
        let i = &self.integrate;
        if !(i.t_end > 0.0 && i.t_end.is_finite()) {
            return err("integrate.t_end", "must be positive".into());
        }
        if !(i.cfl > 0.0) {
            return err("integrate.cfl", "must be positive".into());
        }
        if let Some(dt) = i.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return err("integrate.dt", "must be positive".into());
            }
        }
        match i.initial {
            InitialCondition::Gaussian { width } if !(width > 0.0) => {
                err("integrate.initial.width", "must be positive".into())
            }
            InitialCondition::Spurious { tau } if !(tau > 0.0) => err("integrate.initial.tau", "must be positive".into()),
            _ => Ok(()),
        }
    }
}
