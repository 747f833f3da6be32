//! Classical fourth-order Runge-Kutta integration of `du/dt = M^{-1} K u`
//! with the energy `u^T M u` recorded every step.

use serde::{Deserialize, Serialize};

use crate::assembly::{trace_jump, DGOperator, TraceSide};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// `dt` may not exceed `cfl / rho(M^{-1} K)`.
    pub cfl: f64,
    /// Precomputed spectral radius; computed from the spectrum when absent.
    pub spectral_radius: Option<f64>,
    /// Largest relative per-step energy growth tolerated.
    pub growth_tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            spectral_radius: None,
            growth_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub final_state: Vec<f64>,
}

/// Spectral radius of `M^{-1} K`.
pub fn operator_spectral_radius(op: &DGOperator) -> Result<f64> {
    let l = op.mass_cholesky()?;
    let h = spectral::symmetrized_operator(&op.k_matrix, &l);
    Ok(spectral::spectral_radius(&spectral::eigenvalues_symmetrized(&h)?))
}

pub fn rk4_step(op: &DGOperator, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    let k1 = op.apply(u)?;
    let k2 = op.apply(&axpy(u, 0.5 * dt, &k1))?;
    let k3 = op.apply(&axpy(u, 0.5 * dt, &k2))?;
    let k4 = op.apply(&axpy(u, dt, &k3))?;
    Ok((0..u.len())
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn axpy(u: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(x, y)| x + a * y).collect()
}

/// Advances `u0` by `n_steps` steps of size `dt`.
pub fn integrate(
    op: &DGOperator,
    u0: &[f64],
    dt: f64,
    n_steps: usize,
    opts: &IntegrateOptions,
) -> Result<EnergyTrace> {
    if u0.len() != op.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, operator has {} unknowns",
            u0.len(),
            op.n_dofs()
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let rho = match opts.spectral_radius {
        Some(r) => r,
        None => operator_spectral_radius(op)?,
    };
    let cap = if rho > 0.0 { opts.cfl / rho } else { f64::INFINITY };
    if dt > cap {
        return Err(Error::TimeStepTooLarge { dt, cap });
    }

    let mut u = u0.to_vec();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut energies = Vec::with_capacity(n_steps + 1);
    let mut e = op.energy(&u);
    times.push(0.0);
    energies.push(e);
    for step in 1..=n_steps {
        u = rk4_step(op, &u, dt)?;
        let e_new = op.energy(&u);
        if e_new > e * (1.0 + opts.growth_tol) {
            return Err(Error::Unstable {
                step,
                growth: (e_new - e) / e,
            });
        }
        e = e_new;
        times.push(step as f64 * dt);
        energies.push(e);
    }
    Ok(EnergyTrace {
        times,
        energies,
        final_state: u,
    })
}

/// `-dE/dt` for `E = u^T M u`, evaluated from face jumps alone:
/// the sum over elements and their faces of `<P [[u]], [[u]]>`.
pub fn dissipation_rate(op: &DGOperator, u: &[f64]) -> f64 {
    let m = op.dof_map.n_fields;
    let mut total = 0.0;
    for t in &op.traces {
        let jump = trace_jump(t, &op.dof_map, u);
        let p = &t.flux.penalization;
        let nfp = t.minus_nodes.len();
        let mut face = 0.0;
        for a in 0..nfp {
            let pj = linalg::mat_vec(p.as_ref(), &jump[a]);
            for b in 0..nfp {
                let w = t.mass[(a, b)];
                if w != 0.0 {
                    face += w * (0..m).map(|i| jump[b][i] * pj[i]).sum::<f64>();
                }
            }
        }
        // Interior faces bound two elements; wall faces one.
        let sides = match t.plus {
            TraceSide::Neighbor { .. } => 2.0,
            TraceSide::Reflect(_) => 1.0,
        };
        total += sides * face;
    }
    total
}
