//! Text exports: CSV tables with 17 significant digits, dense Matrix Market
//! files and JSON views of results that hold complex numbers.

use std::io::Write;

use faer::{c64, Mat};
use serde_json::{json, Value};

use crate::assembly::DGOperator;
use crate::error::Result;
use crate::tauanalysis::{ModalExpansion, SpectrumSweep};
use crate::timedomain::EnergyTrace;

/// Fixed scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumRow {
    pub tau: f64,
    pub index: usize,
    pub eigenvalue: c64,
    pub wc_norm: f64,
    pub wnc_norm: f64,
}

pub const SPECTRUM_HEADER: &str = "tau,index,re,im,wc_norm,wnc_norm";
pub const SWEEP_HEADER: &str = "tau,path_id,re,im,class";
pub const ENERGY_HEADER: &str = "t,energy";
pub const MODE_HEADER: &str = "tau,mode,lambda_re,lambda_im,element,node,field,x,y,re,im";

/// An eigenvector to be written next to the node coordinates.
#[derive(Debug, Clone)]
pub struct ModeRecord {
    pub tau: f64,
    /// Caller-chosen label, usually a spectrum index or path id.
    pub mode: usize,
    pub eigenvalue: c64,
    pub vector: Vec<c64>,
}

/// Rotates `v` so that its largest entry (first one on ties) is real and positive.
pub fn fix_phase(v: &[c64]) -> Vec<c64> {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    match v.get(best) {
        Some(z) if z.norm() > 0.0 => {
            let rot = z.conj() / z.norm();
            v.iter().map(|x| x * rot).collect()
        }
        _ => v.to_vec(),
    }
}

/// One row per (mode, unknown) in DOF order, with the physical node position.
pub fn write_modes_csv<W: Write>(mut w: W, op: &DGOperator, modes: &[ModeRecord]) -> Result<()> {
    writeln!(w, "{MODE_HEADER}")?;
    for m in modes {
        if m.vector.len() != op.n_dofs() {
            return Err(crate::Error::DimensionMismatch(format!(
                "mode has length {}, operator has {} unknowns",
                m.vector.len(),
                op.n_dofs()
            )));
        }
        for (row, z) in m.vector.iter().enumerate() {
            let (k, node, field) = op.dof_map.locate(row);
            let x = op.mesh.map_to_physical(k, op.refelem.nodes[node]);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(m.tau),
                m.mode,
                fmt_f64(m.eigenvalue.re),
                fmt_f64(m.eigenvalue.im),
                k,
                node,
                field,
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(z.re),
                fmt_f64(z.im)
            )?;
        }
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(mut w: W, rows: &[SpectrumRow]) -> Result<()> {
    writeln!(w, "{SPECTRUM_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.tau),
            r.index,
            fmt_f64(r.eigenvalue.re),
            fmt_f64(r.eigenvalue.im),
            fmt_f64(r.wc_norm),
            fmt_f64(r.wnc_norm)
        )?;
    }
    Ok(())
}

/// One row per (sample, path), samples outermost.
pub fn write_sweep_csv<W: Write>(mut w: W, sw: &SpectrumSweep) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for (s, &tau) in sw.taus.iter().enumerate() {
        for p in 0..sw.n_paths() {
            let z = sw.value(p, s);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(tau),
                p,
                fmt_f64(z.re),
                fmt_f64(z.im),
                sw.classification[p].id()
            )?;
        }
    }
    Ok(())
}

pub fn write_energy_csv<W: Write>(mut w: W, trace: &EnergyTrace) -> Result<()> {
    writeln!(w, "{ENERGY_HEADER}")?;
    for (t, e) in trace.times.iter().zip(&trace.energies) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*e))?;
    }
    Ok(())
}

/// Dense Matrix Market (`array real general`, column-major).
pub fn write_matrix_market<W: Write>(mut w: W, a: &Mat<f64>) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{}", fmt_f64(a[(i, j)]))?;
        }
    }
    Ok(())
}

/// Reads a dense Matrix Market file written by [`write_matrix_market`].
pub fn read_matrix_market(text: &str) -> Result<Mat<f64>> {
    let bad = |msg: &str| crate::Error::InvalidArgument(format!("matrix market: {msg}"));
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad size line")))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(bad("size line needs two entries"));
    }
    let vals: Vec<f64> = lines
        .map(|l| l.trim().parse().map_err(|_| bad("bad entry")))
        .collect::<Result<_>>()?;
    if vals.len() != dims[0] * dims[1] {
        return Err(bad("entry count does not match size"));
    }
    Ok(Mat::from_fn(dims[0], dims[1], |i, j| vals[j * dims[0] + i]))
}

pub fn complex_json(z: c64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Coefficients of a modal expansion with their basis eigenvalues.
pub fn expansion_json(e: &ModalExpansion, threshold: f64) -> Value {
    let coeffs: Vec<Value> = (0..e.coefficients.len())
        .map(|j| {
            json!({
                "index": j,
                "re": e.coefficients[j].re,
                "im": e.coefficients[j].im,
                "abs": e.coefficients[j].norm(),
                "eigenvalue": complex_json(e.eigenvalues[j]),
                "damping": e.damping[j],
            })
        })
        .collect();
    json!({
        "threshold": threshold,
        "significant": e.significant(threshold),
        "residual": e.residual,
        "condition": e.condition,
        "coefficients": coeffs,
    })
}

/// Counts, unresolved intervals and end points of a sweep.
pub fn sweep_summary_json(sw: &SpectrumSweep) -> Value {
    use crate::tauanalysis::PathClass;
    json!({
        "n_samples": sw.taus.len(),
        "tau_min": sw.taus.first(),
        "tau_max": sw.taus.last(),
        "n_paths": sw.n_paths(),
        "n_c": sw.n_c,
        "n_nc": sw.n_nc,
        "rho0": sw.rho0,
        "counts": {
            "conforming_limit": sw.count(PathClass::ConformingLimit),
            "divergent": sw.count(PathClass::Divergent),
            "unclassified": sw.count(PathClass::Unclassified),
        },
        "unresolved": sw.unresolved,
    })
}
