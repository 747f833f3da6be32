//! `dgpenalty`: assemble DG operators, compute and track their spectra over
//! the penalty parameter, and write CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;
mod presets;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgpenalty::mesh::BoundaryCondition;
use dgpenalty::pde::{FluxKind, SystemKind};

use config::{InitialCondition, RunConfig};
use output::{Manifest, Outputs, StepRecord};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(dgpenalty::Error),
    /// The pipeline ran but produced nothing usable (no mode to select, ...).
    Failed(String),
}

impl From<dgpenalty::Error> for CliError {
    fn from(e: dgpenalty::Error) -> Self {
        CliError::Lib(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Lib(e) if e.is_numerical() => write!(f, "numerical failure: {e}"),
            CliError::Lib(e) => write!(f, "config error: {e}"),
            CliError::Failed(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) if !e.is_numerical() => 2,
            CliError::Lib(_) | CliError::Failed(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Assemble,
    Spectrum,
    Sweep,
    Track,
    VerifyLemma,
    ConformingDims,
    ExpandMode,
    Integrate,
}

impl Command {
    const ALL: [Command; 8] = [
        Command::Assemble,
        Command::Spectrum,
        Command::Sweep,
        Command::Track,
        Command::VerifyLemma,
        Command::ConformingDims,
        Command::ExpandMode,
        Command::Integrate,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Command::Assemble => "assemble",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Track => "track",
            Command::VerifyLemma => "verify-lemma",
            Command::ConformingDims => "conforming-dims",
            Command::ExpandMode => "expand-mode",
            Command::Integrate => "integrate",
        }
    }

    fn from_id(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == s)
    }
}

#[derive(Parser)]
#[command(name = "dgpenalty", version, about = "Spectra of penalty-flux DG discretizations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble M and K; report structure and optionally export the matrices.
    Assemble(RunArgs),
    /// Eigenvalues with conforming/non-conforming eigenvector norms at one or more tau.
    Spectrum(RunArgs),
    /// Spectra over a tau range; paths are tracked with --track.
    Sweep(RunArgs),
    /// Sweep with path tracking, classification and returning-mode detection.
    Track(RunArgs),
    /// Divergence and convergence rates against the block structure.
    VerifyLemma(RunArgs),
    /// Dimensions of the conforming and non-conforming subspaces.
    ConformingDims(RunArgs),
    /// Expand a returning mode in the eigenbasis at another tau.
    ExpandMode(RunArgs),
    /// RK4 time integration with the energy recorded every step.
    Integrate(RunArgs),
    /// Run the fixed sequence for one numerical experiment (fig1 ... fig10).
    Preset {
        name: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON config file (a manifest is accepted too); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $DGPENALTY_OUTPUT/<command> or dgpenalty-output/<command>].
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    system: Option<SystemKind>,
    #[arg(long)]
    flux: Option<FluxKind>,
    #[arg(long)]
    degree: Option<usize>,
    /// Element count (1D).
    #[arg(long)]
    elements: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// `x0,x1` or `x0,x1,y0,y1`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long)]
    bc: Option<BoundaryCondition>,
    /// Advection velocity `bx` or `bx,by`.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Single tau; drops any list or range from the config file.
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated tau samples.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// `a:b:n` (linear) or `a:b:logN` (logarithmic).
    #[arg(long)]
    tau_range: Option<String>,
    #[arg(long)]
    track: bool,
    /// Write K, M, K_central and K_penalty as Matrix Market files.
    #[arg(long)]
    export_matrices: bool,
    /// Spectrum indices written to modes.csv.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[arg(long)]
    max_refinements: Option<usize>,
    #[arg(long)]
    basis_tau: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    mode_taus: Option<Vec<f64>>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// gaussian[:width] | sine[:k] | spurious[:tau].
    #[arg(long)]
    initial: Option<InitialCondition>,
}

fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{field}: bad number {t:?}")))
        })
        .collect()
}

impl RunArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), CliError> {
        let p = &mut c.problem;
        if let Some(s) = self.system {
            p.system = s;
        }
        if let Some(d) = self.degree {
            p.degree = d;
        }
        if let Some(e) = self.elements {
            p.elements = e;
        }
        if let Some(n) = self.nx {
            p.nx = n;
        }
        if let Some(n) = self.ny {
            p.ny = n;
        }
        if let Some(bc) = self.bc {
            p.bc = Some(bc);
        }
        if let Some(d) = &self.domain {
            let v = parse_list("domain", d)?;
            p.domain = Some(match v.len() {
                2 => [[v[0], v[1]], [-1.0, 1.0]],
                4 => [[v[0], v[1]], [v[2], v[3]]],
                _ => return Err(CliError::Config("domain: expected x0,x1 or x0,x1,y0,y1".into())),
            });
        }
        if let Some(b) = &self.beta {
            let v = parse_list("beta", b)?;
            p.beta = Some(match v.len() {
                1 => [v[0], 0.0],
                2 => [v[0], v[1]],
                _ => return Err(CliError::Config("beta: expected bx or bx,by".into())),
            });
        }
        if let Some(f) = self.flux {
            c.flux = f;
        }
        if let Some(t) = self.tau {
            c.tau = t;
            c.taus = None;
            c.tau_range = None;
        }
        if let Some(t) = &self.taus {
            c.taus = Some(t.clone());
            c.tau_range = None;
        }
        if let Some(r) = &self.tau_range {
            c.tau_range = Some(r.clone());
            c.taus = None;
        }
        c.track |= self.track;
        c.export_matrices |= self.export_matrices;
        if let Some(m) = &self.modes {
            c.modes = m.clone();
        }
        if let Some(m) = self.max_refinements {
            c.sweep.max_refinements = m;
        }
        if let Some(t) = self.basis_tau {
            c.expand.basis_tau = t;
        }
        if let Some(t) = &self.mode_taus {
            c.expand.mode_taus = t.clone();
        }
        if let Some(t) = self.t_end {
            c.integrate.t_end = t;
        }
        if let Some(dt) = self.dt {
            c.integrate.dt = Some(dt);
        }
        if let Some(cfl) = self.cfl {
            c.integrate.cfl = cfl;
        }
        if let Some(i) = self.initial {
            c.integrate.initial = i;
        }
        if let Some(o) = &self.output {
            c.output = Some(o.clone());
        }
        Ok(())
    }
}

/// Runs one command into `dir` and writes its manifest.
fn run_command(command: Command, cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let mut cfg = cfg.clone();
    if command == Command::Track {
        cfg.track = true;
    }
    cfg.validate()?;
    let mut out = Outputs::create(dir)?;
    match command {
        Command::Assemble => commands::assemble(&cfg, &mut out)?,
        Command::Spectrum => commands::spectrum(&cfg, &mut out)?,
        Command::Sweep | Command::Track => commands::sweep(&cfg, &mut out, cfg.track)?,
        Command::VerifyLemma => commands::verify_lemma(&cfg, &mut out)?,
        Command::ConformingDims => commands::conforming_dims(&cfg, &mut out)?,
        Command::ExpandMode => commands::expand_mode(&cfg, &mut out)?,
        Command::Integrate => commands::integrate(&cfg, &mut out)?,
    }
    out.finish(command.id(), &cfg)
}

fn preset_steps(name: &str) -> Result<Vec<StepRecord>, CliError> {
    let steps = presets::steps(name).ok_or_else(|| {
        CliError::Config(format!("preset: unknown name {name:?} (expected one of {})", presets::NAMES.join(", ")))
    })?;
    Ok(steps
        .into_iter()
        .map(|s| StepRecord {
            name: s.name.to_string(),
            command: s.command.id().to_string(),
            config: s.config,
        })
        .collect())
}

/// Runs each step into its own subdirectory of `dir`.
fn run_steps(name: &str, steps: Vec<StepRecord>, dir: &Path) -> Result<(), CliError> {
    let mut top = Outputs::create(dir)?;
    for s in &steps {
        if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name.starts_with('.') {
            return Err(CliError::Config(format!("steps: bad step name {:?}", s.name)));
        }
        let command = parse_command(&s.command)?;
        let files = run_command(command, &s.config, &dir.join(&s.name))?;
        top.adopt(&s.name, &files);
        top.adopt(&s.name, &["manifest.json".to_string()]);
    }
    top.finish_preset(name, steps)?;
    Ok(())
}

fn parse_command(s: &str) -> Result<Command, CliError> {
    Command::from_id(s).ok_or_else(|| CliError::Config(format!("command: unknown command {s:?} in manifest")))
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let (command, args) = match cli.command {
        Cmd::Assemble(a) => (Command::Assemble, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Track(a) => (Command::Track, a),
        Cmd::VerifyLemma(a) => (Command::VerifyLemma, a),
        Cmd::ConformingDims(a) => (Command::ConformingDims, a),
        Cmd::ExpandMode(a) => (Command::ExpandMode, a),
        Cmd::Integrate(a) => (Command::Integrate, a),
        Cmd::Preset { name, output } => {
            let steps = preset_steps(&name)?;
            let dir = output::resolve_dir(output.as_deref(), None, &name);
            run_steps(&name, steps, &dir)?;
            return Ok(dir);
        }
        Cmd::Rerun { manifest, output } => {
            let text = std::fs::read_to_string(&manifest)
                .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", manifest.display())))?;
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
            if m.command == "preset" {
                let name = m.preset.unwrap_or_else(|| "preset".into());
                let dir = output::resolve_dir(output.as_deref(), None, &name);
                run_steps(&name, m.steps, &dir)?;
                return Ok(dir);
            }
            let command = parse_command(&m.command)?;
            let config = m
                .config
                .ok_or_else(|| CliError::Config(format!("{}: manifest has no config", manifest.display())))?;
            let dir = output::resolve_dir(output.as_deref(), None, command.id());
            run_command(command, &config, &dir)?;
            return Ok(dir);
        }
    };
    let mut cfg = match &args.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    args.apply(&mut cfg)?;
    let dir = output::resolve_dir(None, cfg.output.as_deref(), command.id());
    run_command(command, &cfg, &dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dgpenalty: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
