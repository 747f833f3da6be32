//! One function per subcommand. Each reads a validated [`RunConfig`] and
//! writes its artifacts through [`Outputs`].

use dgpenalty::assembly::DGOperator;
use dgpenalty::c64;
use dgpenalty::conforming::{block_decompose, build_conforming_split, ConformingSplit, RANK_THRESHOLD};
use dgpenalty::io::{self, ModeRecord, SpectrumRow};
use dgpenalty::linalg;
use dgpenalty::pde::{FluxConfig, FluxKind};
use dgpenalty::spectral::{self, compute_spectrum, BlockDiagonalizer, Spectrum};
use dgpenalty::tauanalysis::{self, PathClass, ReturningMode, SpectrumSweep};
use dgpenalty::timedomain::{self, IntegrateOptions};
use serde_json::{json, Value};

use crate::config::{logspace, InitialCondition, PathSelect, RunConfig};
use crate::output::Outputs;
use crate::CliError;

fn operator(cfg: &RunConfig, tau: f64) -> Result<DGOperator, CliError> {
    Ok(cfg.problem.assemble(FluxConfig::new(cfg.flux, tau)?)?)
}

fn require_tau_scaled(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.flux.is_tau_scaled() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "flux: {command} varies tau and needs penalty or lf, got {}",
            cfg.flux
        )))
    }
}

fn export_matrices(op: &DGOperator, out: &mut Outputs) -> Result<(), CliError> {
    out.write("K.mtx", |w| io::write_matrix_market(w, &op.k_matrix))?;
    out.write("M.mtx", |w| io::write_matrix_market(w, &op.m_matrix))?;
    out.write("K_central.mtx", |w| io::write_matrix_market(w, &op.k_central))?;
    out.write("K_penalty.mtx", |w| io::write_matrix_market(w, &op.k_penalty))
}

fn problem_json(cfg: &RunConfig, op: &DGOperator) -> Value {
    json!({
        "system": cfg.problem.system.id(),
        "flux": cfg.flux.id(),
        "dim": cfg.problem.system.dim(),
        "degree": cfg.problem.degree,
        "n_elements": op.mesh.n_elements(),
        "n_fields": op.dof_map.n_fields,
        "n_nodes": op.dof_map.n_nodes,
        "n_dofs": op.n_dofs(),
        "boundary": cfg.problem.boundary(),
    })
}

pub fn assemble(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let op = operator(cfg, cfg.tau)?;
    let mass_eigs = linalg::symmetric_eigenvalues(op.m_matrix.as_ref())?;
    let pen_eigs = linalg::symmetric_eigenvalues(op.k_penalty.as_ref())?;
    let summary = json!({
        "problem": problem_json(cfg, &op),
        "tau": op.tau(),
        "central_skew_defect": linalg::skew_defect(op.k_central.as_ref()),
        "penalty_symmetry_defect": linalg::symmetry_defect(op.k_penalty.as_ref()),
        "penalty_max_eigenvalue": pen_eigs.last(),
        "mass_min_eigenvalue": mass_eigs.first(),
        "n_interior_faces": op.mesh.n_interior_faces(),
        "n_boundary_faces": op.mesh.n_boundary_faces(),
    });
    out.json("operator.json", &summary)?;
    let mesh = op.mesh.to_json()?;
    out.write("mesh.json", |w| {
        use std::io::Write;
        writeln!(w, "{mesh}")?;
        Ok(())
    })?;
    if cfg.export_matrices {
        export_matrices(&op, out)?;
    }
    Ok(())
}

/// The conforming split used for `|W^C|` and `|W^NC|`. Central fluxes have no
/// constraint of their own and borrow the one of the penalty flux.
fn split_for(cfg: &RunConfig, op: &DGOperator) -> Result<(ConformingSplit, FluxKind), CliError> {
    if cfg.flux == FluxKind::Central {
        let pen = cfg.problem.penalty(1.0)?;
        Ok((build_conforming_split(&pen)?, FluxKind::Penalty))
    } else {
        Ok((build_conforming_split(op)?, cfg.flux))
    }
}

fn mode_record(spec: &Spectrum, index: usize, label: usize) -> ModeRecord {
    ModeRecord {
        tau: spec.tau,
        mode: label,
        eigenvalue: spec.eigenvalues[index],
        vector: io::fix_phase(&spec.eigenvector(index)),
    }
}

pub fn spectrum(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let taus = cfg.tau_samples()?.unwrap_or_else(|| vec![cfg.tau]);
    let base = operator(cfg, taus[0])?;
    let (split, split_flux) = split_for(cfg, &base)?;
    let mut rows = Vec::new();
    let mut per_tau = Vec::new();
    let mut modes = Vec::new();
    for &tau in &taus {
        let op = base.with_tau(tau)?;
        let spec = compute_spectrum(&op)?;
        let parts = spectral::eigenvector_partition(&spec, &split, &op.m_matrix)?;
        for (index, (&z, &(wc, wnc))) in spec.eigenvalues.iter().zip(&parts).enumerate() {
            rows.push(SpectrumRow {
                tau: op.tau(),
                index,
                eigenvalue: z,
                wc_norm: wc,
                wnc_norm: wnc,
            });
        }
        let res = spectral::residuals(&op.k_matrix, &op.m_matrix, &spec);
        per_tau.push(json!({
            "tau": op.tau(),
            "max_real": spec.max_real(),
            "spectral_radius": spec.spectral_radius(),
            "max_residual": res.iter().copied().fold(0.0, f64::max),
            "conjugate_pairing_defect": spectral::conjugate_pairing_defect(&spec.eigenvalues),
        }));
        for &i in &cfg.modes {
            if i >= spec.len() {
                return Err(CliError::Config(format!("modes: index {i} out of range (n = {})", spec.len())));
            }
            modes.push(mode_record(&spec, i, i));
        }
    }
    out.write("spectrum.csv", |w| io::write_spectrum_csv(w, &rows))?;
    out.json(
        "spectrum.json",
        &json!({
            "problem": problem_json(cfg, &base),
            "split_flux": split_flux.id(),
            "n_c": split.n_c(),
            "n_nc": split.n_nc(),
            "spectra": per_tau,
        }),
    )?;
    if !modes.is_empty() {
        out.write("modes.csv", |w| io::write_modes_csv(w, &base, &modes))?;
    }
    if cfg.export_matrices {
        export_matrices(&base, out)?;
    }
    Ok(())
}

fn returning_window(cfg: &RunConfig, sw: &SpectrumSweep) -> [f64; 2] {
    cfg.returning.window.unwrap_or([sw.taus[0], sw.tau_max()])
}

/// The tracked path chosen by `select`, or `None` if no path qualifies.
fn select_path(cfg: &RunConfig, sw: &SpectrumSweep, select: PathSelect) -> Option<usize> {
    let last = sw.taus.len() - 1;
    match select {
        PathSelect::Divergent => (0..sw.n_paths())
            .filter(|&p| sw.classification[p] == PathClass::Divergent && sw.value(p, last).im >= 0.0)
            .min_by(|&a, &b| sw.value(a, last).re.total_cmp(&sw.value(b, last).re).then(a.cmp(&b))),
        PathSelect::Returning => strongest_returning(cfg, sw).map(|m| m.path),
    }
}

/// Same choice as the library's spurious-mode selection: upper half plane,
/// strongest intermediate damping.
fn strongest_returning(cfg: &RunConfig, sw: &SpectrumSweep) -> Option<ReturningMode> {
    tauanalysis::find_returning_modes(sw, returning_window(cfg, sw), cfg.returning.factor)
        .into_iter()
        .filter(|m| m.im_end >= 0.0)
        .max_by(|a, b| a.re_peak.abs().total_cmp(&b.re_peak.abs()).then(b.path.cmp(&a.path)))
}

/// Eigenvectors of path `path` at the sweep samples nearest to `taus`.
fn path_modes(op: &DGOperator, sw: &SpectrumSweep, path: usize, taus: &[f64]) -> Result<Vec<ModeRecord>, CliError> {
    let mut out = Vec::new();
    for &t in taus {
        let s = sw.nearest_sample(t);
        let target = sw.value(path, s);
        let spec = compute_spectrum(&op.with_tau(sw.taus[s])?)?;
        let index = nearest_index(&spec, target);
        out.push(mode_record(&spec, index, path));
    }
    Ok(out)
}

fn nearest_index(spec: &Spectrum, target: c64) -> usize {
    (0..spec.len())
        .min_by(|&a, &b| {
            (spec.eigenvalues[a] - target)
                .norm()
                .total_cmp(&(spec.eigenvalues[b] - target).norm())
        })
        .unwrap_or(0)
}

pub fn sweep(cfg: &RunConfig, out: &mut Outputs, track: bool) -> Result<(), CliError> {
    require_tau_scaled(cfg, "sweep")?;
    let taus = cfg
        .tau_samples()?
        .ok_or_else(|| CliError::Config("tau_range: a sweep needs --tau-range or a taus list".into()))?;
    let op = operator(cfg, cfg.tau)?;
    let sw = tauanalysis::sweep(&op, &taus, &cfg.sweep.options(track, true))?;
    out.write("sweep.csv", |w| io::write_sweep_csv(w, &sw))?;
    let mut summary = io::sweep_summary_json(&sw);
    summary["tracked"] = json!(track);
    if track {
        let window = returning_window(cfg, &sw);
        summary["returning_window"] = json!(window);
        summary["returning"] = json!(tauanalysis::find_returning_modes(&sw, window, cfg.returning.factor));
    }
    if let (true, Some(pm)) = (track, &cfg.path_modes) {
        let path = select_path(cfg, &sw, pm.select)
            .ok_or_else(|| CliError::Failed(format!("no {:?} path found to export", pm.select)))?;
        let modes = path_modes(&op, &sw, path, &pm.taus)?;
        summary["exported_path"] = json!({
            "path": path,
            "select": pm.select,
            "samples": modes.iter().map(|m| json!({"tau": m.tau, "eigenvalue": io::complex_json(m.eigenvalue)})).collect::<Vec<_>>(),
        });
        out.write("modes.csv", |w| io::write_modes_csv(w, &op, &modes))?;
    }
    out.json("sweep.json", &summary)?;
    if cfg.export_matrices {
        export_matrices(&op, out)?;
    }
    Ok(())
}

pub fn verify_lemma(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    require_tau_scaled(cfg, "verify-lemma")?;
    let taus = match cfg.tau_samples()? {
        Some(t) => t,
        None => logspace(100.0, 1e4, 20),
    };
    let op = operator(cfg, cfg.tau)?;
    let split = build_conforming_split(&op)?;
    let blocks = block_decompose(&op, &split)?;
    let sw = tauanalysis::sweep(&op, &taus, &cfg.sweep.options(true, false))?;
    let report = tauanalysis::verify_lemma_rates(&sw, &blocks)?;
    let diag = BlockDiagonalizer::new(&blocks)?;
    let tau_max = sw.tau_max();
    let g = spectral::gerschgorin_from(&diag, tau_max);
    let last = &sw.eigenvalues[sw.taus.len() - 1];
    let lemma = json!({
        "problem": problem_json(cfg, &op),
        "n_c": split.n_c(),
        "n_nc": split.n_nc(),
        "s_eigenvalues": blocks.s_eigenvalues()?,
        "report": report,
        "gerschgorin": {
            "tau": tau_max,
            "disjoint": g.disjoint,
            "in_conforming_union": g.count_conforming(last),
            "separation_tau": spectral::separation_tau(&diag, sw.taus[0], tau_max, 1e-3),
        },
    });
    out.write("sweep.csv", |w| io::write_sweep_csv(w, &sw))?;
    out.json("lemma.json", &lemma)
}

pub fn conforming_dims(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let op = operator(cfg, cfg.tau)?;
    let split = build_conforming_split(&op)?;
    let blocks = block_decompose(&op, &split)?;
    let s = blocks.s_eigenvalues()?;
    let sv = &split.singular_values;
    let (nc, nn) = split.dims;
    out.json(
        "conforming.json",
        &json!({
            "problem": problem_json(cfg, &op),
            "n_c": nc,
            "n_nc": nn,
            "rank_threshold": RANK_THRESHOLD,
            "smallest_retained_singular_value": if nn > 0 { sv.get(nn - 1).copied() } else { None },
            "largest_discarded_singular_value": sv.get(nn).copied(),
            "s_eigenvalue_range": [s.first(), s.last()],
            "a_skew_defect": linalg::skew_defect(blocks.a_block.as_ref()),
        }),
    )
}

/// Tracks from 0 to `tau_top` on `{0} + logspace` and picks the strongest
/// returning path.
fn spurious_path(cfg: &RunConfig, op: &DGOperator, tau_top: f64) -> Result<(SpectrumSweep, ReturningMode), CliError> {
    let e = &cfg.expand;
    if !(tau_top > e.sweep_tau_min) {
        return Err(CliError::Config(format!(
            "expand: largest mode tau {tau_top} must exceed sweep_tau_min {}",
            e.sweep_tau_min
        )));
    }
    let mut taus = vec![0.0];
    taus.extend(logspace(e.sweep_tau_min, tau_top, e.sweep_samples));
    let sw = tauanalysis::sweep(op, &taus, &cfg.sweep.options(true, false))?;
    let mode = strongest_returning(cfg, &sw)
        .ok_or_else(|| CliError::Failed(format!("no returning mode found up to tau = {tau_top}")))?;
    Ok((sw, mode))
}

pub fn expand_mode(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    require_tau_scaled(cfg, "expand-mode")?;
    let e = &cfg.expand;
    let op = operator(cfg, e.basis_tau)?;
    let tau_top = e.mode_taus.iter().copied().fold(0.0, f64::max);
    let (sw, returning) = spurious_path(cfg, &op, tau_top)?;
    let basis = compute_spectrum(&op)?;
    let modes = path_modes(&op, &sw, returning.path, &e.mode_taus)?;
    let mut expansions = Vec::new();
    for m in &modes {
        let ex = tauanalysis::expand_in_basis(&m.vector, &basis)?;
        expansions.push(json!({
            "mode_tau": m.tau,
            "eigenvalue": io::complex_json(m.eigenvalue),
            "expansion": io::expansion_json(&ex, e.threshold),
        }));
    }
    out.json(
        "expansion.json",
        &json!({
            "problem": problem_json(cfg, &op),
            "basis_tau": e.basis_tau,
            "returning": returning,
            "expansions": expansions,
        }),
    )?;
    out.write("modes.csv", |w| io::write_modes_csv(w, &op, &modes))
}

fn initial_state(cfg: &RunConfig, op: &DGOperator) -> Result<Vec<f64>, CliError> {
    let nf = op.dof_map.n_fields;
    let dim = cfg.problem.system.dim();
    let d = cfg.problem.domain_box();
    let first = |f: &dyn Fn([f64; 2]) -> f64| {
        op.interpolate(|x| {
            let mut v = vec![0.0; nf];
            v[0] = f(x);
            v
        })
    };
    match cfg.integrate.initial {
        InitialCondition::Gaussian { width } => {
            let c = [0.5 * (d[0][0] + d[0][1]), 0.5 * (d[1][0] + d[1][1])];
            Ok(first(&|x| {
                let r2: f64 = (0..dim).map(|i| (x[i] - c[i]).powi(2)).sum();
                (-r2 / (width * width)).exp()
            }))
        }
        InitialCondition::Sine { wavenumber } => {
            let k = wavenumber * std::f64::consts::PI;
            Ok(first(&|x| (0..dim).map(|i| (k * x[i]).sin()).product()))
        }
        InitialCondition::Spurious { tau } => {
            // Central and upwind operators carry no tau; the mode comes from the penalty family.
            let pen;
            let base = if cfg.flux.is_tau_scaled() {
                op
            } else {
                pen = cfg.problem.penalty(1.0)?;
                &pen
            };
            let (sw, m) = spurious_path(cfg, base, tau)?;
            let v = &path_modes(base, &sw, m.path, &[tau])?[0].vector;
            Ok(v.iter().map(|z| z.re).collect())
        }
    }
}

pub fn integrate(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let op = operator(cfg, cfg.tau)?;
    let u0 = initial_state(cfg, &op)?;
    let ic = &cfg.integrate;
    let rho = timedomain::operator_spectral_radius(&op)?;
    let dt_target = ic.dt.unwrap_or(if rho > 0.0 { ic.cfl / rho } else { ic.t_end });
    let steps = ((ic.t_end / dt_target).ceil() as usize).max(1);
    let dt = ic.t_end / steps as f64;
    let opts = IntegrateOptions {
        cfl: ic.cfl,
        spectral_radius: Some(rho),
        ..IntegrateOptions::default()
    };
    let trace = timedomain::integrate(&op, &u0, dt, steps, &opts)?;
    // Replays the trajectory to integrate the face dissipation with the trapezoid rule.
    let mut u = u0.clone();
    let mut prev = timedomain::dissipation_rate(&op, &u);
    let mut dissipated = 0.0;
    for _ in 0..steps {
        u = timedomain::rk4_step(&op, &u, dt)?;
        let r = timedomain::dissipation_rate(&op, &u);
        dissipated += 0.5 * dt * (prev + r);
        prev = r;
    }
    let (e0, e1) = (trace.energies[0], trace.energies[steps]);
    out.write("energy.csv", |w| io::write_energy_csv(w, &trace))?;
    out.json(
        "integrate.json",
        &json!({
            "problem": problem_json(cfg, &op),
            "tau": op.tau(),
            "dt": dt,
            "steps": steps,
            "t_end": ic.t_end,
            "spectral_radius": rho,
            "energy_initial": e0,
            "energy_final": e1,
            "energy_lost": e0 - e1,
            "dissipated": dissipated,
            "non_increasing": trace.energies.windows(2).all(|w| w[1] <= w[0]),
        }),
    )
}
