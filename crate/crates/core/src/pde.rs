//! Constant-coefficient symmetric hyperbolic systems and their numerical fluxes.
//!
//! Every flux is written as a central part plus a penalization acting on the
//! jump `[[U]] = U+ - U-`:
//!
//! ```text
//! (A_n U)* = A_n {U} - P [[U]]
//! ```
//!
//! with `P = (tau/2) A_n^T A_n` (penalty), `P = (1/2) V |Lambda| V^{-1}` (upwind),
//! `P = (tau/2) I` (component-wise Lax-Friedrichs) and `P = 0` (central).

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    #[serde(rename = "advection1d")]
    Advection1d,
    #[serde(rename = "advection2d")]
    Advection2d,
    #[serde(rename = "acoustics1d")]
    Acoustics1d,
    #[serde(rename = "acoustics2d")]
    Acoustics2d,
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::Advection1d | SystemKind::Acoustics1d => 1,
            SystemKind::Advection2d | SystemKind::Acoustics2d => 2,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            SystemKind::Advection1d => "advection1d",
            SystemKind::Advection2d => "advection2d",
            SystemKind::Acoustics1d => "acoustics1d",
            SystemKind::Acoustics2d => "acoustics2d",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advection1d" => Ok(Self::Advection1d),
            "advection2d" => Ok(Self::Advection2d),
            "acoustics1d" => Ok(Self::Acoustics1d),
            "acoustics2d" => Ok(Self::Acoustics2d),
            other => Err(Error::InvalidArgument(format!(
                "unknown system {other:?} (expected advection1d|advection2d|acoustics1d|acoustics2d)"
            ))),
        }
    }
}

/// A first-order system `U_t + sum_i A_i U_{x_i} = 0` with constant symmetric `A_i`.
#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    pub kind: SystemKind,
    pub dim: usize,
    pub n_fields: usize,
    pub coeff_matrices: Vec<Mat<f64>>,
    /// Advection velocity (advection systems only).
    pub advection_vector: Option<[f64; 2]>,
    /// Sound speed (acoustic systems only); fixed to 1.
    pub wavespeed: Option<f64>,
}

impl HyperbolicSystem {
    pub fn advection_1d(beta: f64) -> Self {
        Self {
            kind: SystemKind::Advection1d,
            dim: 1,
            n_fields: 1,
            coeff_matrices: vec![Mat::from_fn(1, 1, |_, _| beta)],
            advection_vector: Some([beta, 0.0]),
            wavespeed: None,
        }
    }

    pub fn advection_2d(beta: [f64; 2]) -> Self {
        Self {
            kind: SystemKind::Advection2d,
            dim: 2,
            n_fields: 1,
            coeff_matrices: vec![
                Mat::from_fn(1, 1, |_, _| beta[0]),
                Mat::from_fn(1, 1, |_, _| beta[1]),
            ],
            advection_vector: Some(beta),
            wavespeed: None,
        }
    }

    /// Pressure-velocity acoustics `(p, u)`.
    pub fn acoustics_1d() -> Self {
        let ax = Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 });
        Self {
            kind: SystemKind::Acoustics1d,
            dim: 1,
            n_fields: 2,
            coeff_matrices: vec![ax],
            advection_vector: None,
            wavespeed: Some(1.0),
        }
    }

    /// Pressure-velocity acoustics `(p, u, v)`.
    pub fn acoustics_2d() -> Self {
        let ax = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 1) | (1, 0) => 1.0,
            _ => 0.0,
        });
        let ay = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 2) | (2, 0) => 1.0,
            _ => 0.0,
        });
        Self {
            kind: SystemKind::Acoustics2d,
            dim: 2,
            n_fields: 3,
            coeff_matrices: vec![ax, ay],
            advection_vector: None,
            wavespeed: Some(1.0),
        }
    }

    /// Builds a system by id; advection defaults to `beta = 1` (1D) or `(1, 0)` (2D).
    pub fn from_kind(kind: SystemKind, beta: Option<[f64; 2]>) -> Self {
        match kind {
            SystemKind::Advection1d => Self::advection_1d(beta.map_or(1.0, |b| b[0])),
            SystemKind::Advection2d => Self::advection_2d(beta.unwrap_or([1.0, 0.0])),
            SystemKind::Acoustics1d => Self::acoustics_1d(),
            SystemKind::Acoustics2d => Self::acoustics_2d(),
        }
    }

    pub fn field_names(&self) -> &'static [&'static str] {
        match self.kind {
            SystemKind::Advection1d | SystemKind::Advection2d => &["u"],
            SystemKind::Acoustics1d => &["p", "u"],
            SystemKind::Acoustics2d => &["p", "u", "v"],
        }
    }

    /// `A_alpha = sum_i alpha_i A_i`.
    pub fn combined_matrix(&self, alpha: [f64; 2]) -> Mat<f64> {
        let m = self.n_fields;
        let mut out = Mat::zeros(m, m);
        for (i, a) in self.coeff_matrices.iter().enumerate() {
            for r in 0..m {
                for c in 0..m {
                    out[(r, c)] += alpha[i] * a[(r, c)];
                }
            }
        }
        out
    }

    /// Ghost-state map `U+ = R U-` closing a wall boundary face, if the system has one.
    pub fn wall_reflection(&self, n: [f64; 2]) -> Option<Mat<f64>> {
        match self.kind {
            SystemKind::Advection1d | SystemKind::Advection2d => None,
            SystemKind::Acoustics1d => Some(Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => 1.0,
                (1, 1) => -1.0,
                _ => 0.0,
            })),
            SystemKind::Acoustics2d => Some(Mat::from_fn(3, 3, |i, j| match (i, j) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                (r, c) => {
                    let delta = if r == c { 1.0 } else { 0.0 };
                    delta - 2.0 * n[r - 1] * n[c - 1]
                }
            })),
        }
    }

    /// Checks that every coefficient matrix is symmetric and that `A_alpha`
    /// has real eigenvalues along `alpha`.
    pub fn check_hyperbolic(&self, alpha: [f64; 2]) -> Result<()> {
        for a in &self.coeff_matrices {
            if linalg::symmetry_defect(a.as_ref()) != 0.0 {
                return Err(Error::InvalidArgument(
                    "coefficient matrices must be symmetric".into(),
                ));
            }
        }
        let a = self.combined_matrix(alpha);
        let ev = linalg::eigenvalues(a.as_ref())?;
        let imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag > 1e-10 {
            return Err(Error::NonHyperbolic { normal: alpha, imag });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    Central,
    Penalty,
    Upwind,
    #[serde(rename = "lf", alias = "lax_friedrichs")]
    LaxFriedrichs,
}

impl FluxKind {
    pub fn id(self) -> &'static str {
        match self {
            FluxKind::Central => "central",
            FluxKind::Penalty => "penalty",
            FluxKind::Upwind => "upwind",
            FluxKind::LaxFriedrichs => "lf",
        }
    }

    /// Whether the penalization scales linearly with `tau`.
    pub fn is_tau_scaled(self) -> bool {
        matches!(self, FluxKind::Penalty | FluxKind::LaxFriedrichs)
    }
}

impl fmt::Display for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Self::Central),
            "penalty" => Ok(Self::Penalty),
            "upwind" => Ok(Self::Upwind),
            "lf" | "lax_friedrichs" => Ok(Self::LaxFriedrichs),
            other => Err(Error::InvalidArgument(format!(
                "unknown flux {other:?} (expected central|penalty|upwind|lf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    pub kind: FluxKind,
    pub tau: f64,
}

impl FluxConfig {
    pub fn new(kind: FluxKind, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau must be finite and nonnegative, got {tau}"
            )));
        }
        Ok(Self { kind, tau })
    }

    pub fn central() -> Self {
        Self {
            kind: FluxKind::Central,
            tau: 0.0,
        }
    }

    pub fn penalty(tau: f64) -> Result<Self> {
        Self::new(FluxKind::Penalty, tau)
    }

    pub fn upwind() -> Self {
        Self {
            kind: FluxKind::Upwind,
            tau: 1.0,
        }
    }

    pub fn lax_friedrichs(tau: f64) -> Result<Self> {
        Self::new(FluxKind::LaxFriedrichs, tau)
    }

    /// Multiplier applied to the unit penalization in `K = K_central + tau * K_pen`.
    pub fn effective_tau(&self) -> f64 {
        match self.kind {
            FluxKind::Central => 0.0,
            FluxKind::Upwind => 1.0,
            FluxKind::Penalty | FluxKind::LaxFriedrichs => self.tau,
        }
    }
}

/// Normal matrix data for one face normal.
#[derive(Debug, Clone)]
pub struct NormalFluxData {
    pub normal: [f64; 2],
    pub a_n: Mat<f64>,
    /// Eigenvalues of `A_n`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `A_n` (columns).
    pub eigenvectors: Mat<f64>,
    /// `V |Lambda| V^{-1}`.
    pub abs_a_n: Mat<f64>,
    pub a_plus: Mat<f64>,
    pub a_minus: Mat<f64>,
    /// Penalization matrix at the configured `tau`.
    pub penalization: Mat<f64>,
    /// Penalization per unit `tau` (equal to `penalization` for upwind).
    pub unit_penalization: Mat<f64>,
    /// Matrix whose action on the jump must vanish for a conforming state.
    pub constraint: Mat<f64>,
}

fn check_unit(n: [f64; 2]) -> Result<()> {
    let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "normal {n:?} is not a unit vector (length {len})"
        )));
    }
    Ok(())
}

pub fn normal_flux_data(
    system: &HyperbolicSystem,
    n: [f64; 2],
    flux: FluxConfig,
) -> Result<NormalFluxData> {
    check_unit(n)?;
    system.check_hyperbolic(n)?;
    let m = system.n_fields;
    let a_n = system.combined_matrix(n);
    let (eigenvalues, v) = linalg::symmetric_eigen(a_n.as_ref())?;
    let v_inv = v.transpose().to_owned();
    let diag_apply = |f: &dyn Fn(f64) -> f64| -> Mat<f64> {
        let mut scaled = v.clone();
        for (j, &lam) in eigenvalues.iter().enumerate() {
            let s = f(lam);
            for i in 0..m {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * &v_inv
    };
    let abs_a_n = diag_apply(&|l| l.abs());
    let a_plus = diag_apply(&|l| 0.5 * (l + l.abs()));
    let a_minus = diag_apply(&|l| 0.5 * (l - l.abs()));

    let ata = a_n.transpose() * &a_n;
    let (unit_penalization, constraint) = match flux.kind {
        FluxKind::Central => (Mat::zeros(m, m), Mat::zeros(m, m)),
        FluxKind::Penalty => (scale(&ata, 0.5), a_n.clone()),
        FluxKind::Upwind => (scale(&abs_a_n, 0.5), abs_a_n.clone()),
        FluxKind::LaxFriedrichs => (
            Mat::from_fn(m, m, |i, j| if i == j { 0.5 } else { 0.0 }),
            Mat::identity(m, m),
        ),
    };
    let penalization = scale(&unit_penalization, flux.effective_tau());

    Ok(NormalFluxData {
        normal: n,
        a_n,
        eigenvalues,
        eigenvectors: v,
        abs_a_n,
        a_plus,
        a_minus,
        penalization,
        unit_penalization,
        constraint,
    })
}

/// `tau = 1 / (max_i |lambda_i| * cond(V))`, matching the penalty and upwind
/// penalization magnitudes.
pub fn recommend_tau(system: &HyperbolicSystem, n: [f64; 2]) -> Result<f64> {
    let data = normal_flux_data(system, n, FluxConfig::central())?;
    let lam_max = data.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if lam_max == 0.0 {
        return Err(Error::DegenerateNormal { normal: n });
    }
    let kappa = linalg::condition_number(data.eigenvectors.as_ref())?;
    Ok(1.0 / (lam_max * kappa))
}

fn scale(a: &Mat<f64>, s: f64) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| s * a[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        m
    }

    #[test]
    fn acoustics_2d_x_normal_has_eigenvalues_minus_one_zero_one() {
        let sys = HyperbolicSystem::acoustics_2d();
        let d = normal_flux_data(&sys, [1.0, 0.0], FluxConfig::upwind()).unwrap();
        assert!(max_diff(&d.a_n, &sys.coeff_matrices[0]) == 0.0);
        let expect = [-1.0, 0.0, 1.0];
        for (l, e) in d.eigenvalues.iter().zip(expect) {
            assert!((l - e).abs() < 1e-14);
        }
    }

    #[test]
    fn advection_penalty_tau_one_is_upwind() {
        let sys = HyperbolicSystem::advection_1d(1.0);
        for n in [[1.0, 0.0], [-1.0, 0.0]] {
            let p = normal_flux_data(&sys, n, FluxConfig::penalty(1.0).unwrap()).unwrap();
            let u = normal_flux_data(&sys, n, FluxConfig::upwind()).unwrap();
            assert!(max_diff(&p.penalization, &u.penalization) < 1e-15);
            assert!((p.penalization[(0, 0)] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn acoustics_2d_penalty_acts_on_pressure_and_normal_velocity() {
        let sys = HyperbolicSystem::acoustics_2d();
        let tau = 0.7;
        let theta: f64 = 0.3;
        let n = [theta.cos(), theta.sin()];
        let d = normal_flux_data(&sys, n, FluxConfig::penalty(tau).unwrap()).unwrap();
        let jump = [0.4, -1.1, 0.25];
        let jn = jump[1] * n[0] + jump[2] * n[1];
        let expect = [0.5 * tau * jump[0], 0.5 * tau * jn * n[0], 0.5 * tau * jn * n[1]];
        for i in 0..3 {
            let got: f64 = (0..3).map(|j| d.penalization[(i, j)] * jump[j]).sum();
            assert!((got - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn upwind_split_is_consistent() {
        let sys = HyperbolicSystem::acoustics_2d();
        let n = [0.6, 0.8];
        let d = normal_flux_data(&sys, n, FluxConfig::upwind()).unwrap();
        let sum = &d.a_plus + &d.a_minus;
        let diff = &d.a_plus - &d.a_minus;
        assert!(max_diff(&sum, &d.a_n) < 1e-12);
        assert!(max_diff(&diff, &d.abs_a_n) < 1e-12);
    }

    #[test]
    fn recommended_tau_values() {
        let ac = HyperbolicSystem::acoustics_2d();
        for n in [[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]] {
            assert!((recommend_tau(&ac, n).unwrap() - 1.0).abs() < 1e-14);
        }
        let adv = HyperbolicSystem::advection_1d(2.0);
        assert!((recommend_tau(&adv, [1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let adv2 = HyperbolicSystem::advection_2d([1.0, 0.0]);
        assert!((recommend_tau(&adv2, [1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            recommend_tau(&adv2, [0.0, 1.0]),
            Err(Error::DegenerateNormal { .. })
        ));
    }

    #[test]
    fn rejects_non_unit_normal_and_negative_tau() {
        let sys = HyperbolicSystem::acoustics_1d();
        assert!(normal_flux_data(&sys, [2.0, 0.0], FluxConfig::central()).is_err());
        assert!(FluxConfig::penalty(-1.0).is_err());
        assert!(FluxConfig::penalty(f64::NAN).is_err());
    }

    #[test]
    fn non_hyperbolic_input_is_rejected() {
        let mut sys = HyperbolicSystem::acoustics_1d();
        sys.coeff_matrices[0][(0, 1)] = 1.0;
        sys.coeff_matrices[0][(1, 0)] = -1.0;
        assert!(sys.check_hyperbolic([1.0, 0.0]).is_err());
    }

    #[test]
    fn identifiers_round_trip() {
        for id in ["advection1d", "advection2d", "acoustics1d", "acoustics2d"] {
            assert_eq!(id.parse::<SystemKind>().unwrap().id(), id);
        }
        for id in ["central", "penalty", "upwind", "lf"] {
            assert_eq!(id.parse::<FluxKind>().unwrap().id(), id);
        }
    }
}
