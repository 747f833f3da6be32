//! Global mass and spatial operators for the skew-symmetric DG formulation.
//!
//! The semi-discrete system is `M du/dt = K u`. Rows of `K` index test
//! functions and columns index trial functions. The bilinear form is
//!
//! ```text
//! b(U, V) = sum_k 1/2 (A_i U, dV/dx_i) - 1/2 (A_i dU/dx_i, V)
//!         + interior faces: 1/2 <A_n U-, V+> - 1/2 <A_n U+, V->
//!         - <P [[U]], [[V]]>
//! ```
//!
//! where `-` is the face owner, `n` its outward normal and `[[U]] = U+ - U-`.
//! Wall faces use the ghost state `U+ = R U-`.
//!
//! `K` is affine in the penalty parameter and is stored as
//! `K(tau) = K_central + tau * K_penalty`.

use std::collections::HashMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{BoundaryCondition, FaceNeighbor, Mesh};
use crate::pde::{normal_flux_data, FluxConfig, FluxKind, HyperbolicSystem, NormalFluxData, SystemKind};
use crate::refelem::{NodeFamily, ReferenceElement};

/// Global numbering `(element, node, field) -> row`, field-blocked inside each element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_nodes: usize,
    pub n_fields: usize,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.n_elements * self.n_nodes * self.n_fields
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, element: usize, node: usize, field: usize) -> usize {
        (element * self.n_fields + field) * self.n_nodes + node
    }

    /// Inverse of [`DofMap::index`].
    pub fn locate(&self, row: usize) -> (usize, usize, usize) {
        let node = row % self.n_nodes;
        let rest = row / self.n_nodes;
        (rest / self.n_fields, node, rest % self.n_fields)
    }
}

/// What sits on the `+` side of a face.
#[derive(Debug, Clone)]
pub enum TraceSide {
    /// Volume node indices of the neighbour, matched to the owner's trace nodes.
    Neighbor { element: usize, nodes: Vec<usize> },
    /// Ghost state `U+ = R U-`.
    Reflect(Mat<f64>),
}

/// Matched trace data for one mesh face.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub element: usize,
    pub local_face: usize,
    /// Owner volume node indices along the face.
    pub minus_nodes: Vec<usize>,
    pub plus: TraceSide,
    /// Physical face mass on the owner's trace nodes.
    pub mass: Mat<f64>,
    pub flux: NormalFluxData,
}

/// Identifies the discretization that produced an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub system: SystemKind,
    pub dim: usize,
    pub degree: usize,
    pub node_family: NodeFamily,
    pub flux: FluxConfig,
    pub n_elements: usize,
    pub bc: BoundaryCondition,
}

#[derive(Debug, Clone)]
pub struct DGOperator {
    /// `K` at the configured flux.
    pub k_matrix: Mat<f64>,
    pub m_matrix: Mat<f64>,
    /// Part of `K` independent of the penalization.
    pub k_central: Mat<f64>,
    /// Penalization part of `K` per unit `tau`.
    pub k_penalty: Mat<f64>,
    pub dof_map: DofMap,
    pub config: OperatorConfig,
    pub mesh: Mesh,
    pub refelem: ReferenceElement,
    pub system: HyperbolicSystem,
    pub traces: Vec<FaceTrace>,
    local_mass_inv: Vec<Mat<f64>>,
}

impl DGOperator {
    pub fn n_dofs(&self) -> usize {
        self.dof_map.len()
    }

    pub fn tau(&self) -> f64 {
        self.config.flux.effective_tau()
    }

    /// `K_central + tau * K_penalty`.
    pub fn k_at(&self, tau: f64) -> Mat<f64> {
        let n = self.n_dofs();
        Mat::from_fn(n, n, |i, j| self.k_central[(i, j)] + tau * self.k_penalty[(i, j)])
    }

    /// The same discretization with another `tau`. Central and upwind fluxes ignore it.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let flux = FluxConfig::new(self.config.flux.kind, tau)?;
        let mut out = self.clone();
        out.config.flux = flux;
        out.k_matrix = self.k_at(flux.effective_tau());
        for t in &mut out.traces {
            let mut p = t.flux.unit_penalization.clone();
            let s = flux.effective_tau();
            for j in 0..p.ncols() {
                for i in 0..p.nrows() {
                    p[(i, j)] *= s;
                }
            }
            t.flux.penalization = p;
        }
        Ok(out)
    }

    /// `M^{-1} K u`, using the block-diagonal structure of `M`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_dofs();
        if u.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, operator has {n} unknowns",
                u.len()
            )));
        }
        let ku = linalg::mat_vec(self.k_matrix.as_ref(), u);
        Ok(self.solve_mass(&ku))
    }

    /// `M^{-1} v` element by element.
    pub fn solve_mass(&self, v: &[f64]) -> Vec<f64> {
        let np = self.dof_map.n_nodes;
        let mut out = vec![0.0; v.len()];
        for (k, minv) in self.local_mass_inv.iter().enumerate() {
            for field in 0..self.dof_map.n_fields {
                let base = self.dof_map.index(k, 0, field);
                for a in 0..np {
                    let mut s = 0.0;
                    for b in 0..np {
                        s += minv[(a, b)] * v[base + b];
                    }
                    out[base + a] = s;
                }
            }
        }
        out
    }

    /// `u^T M u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        linalg::dot(u, &linalg::mat_vec(self.m_matrix.as_ref(), u))
    }

    /// Lower Cholesky factor of `M`.
    pub fn mass_cholesky(&self) -> Result<Mat<f64>> {
        linalg::cholesky_lower(self.m_matrix.as_ref())
    }

    /// Nodal state whose every field equals `f(x, y)[field]` at each node.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> Vec<f64>) -> Vec<f64> {
        let mut u = vec![0.0; self.n_dofs()];
        for k in 0..self.mesh.n_elements() {
            for (node, p) in self.refelem.nodes.iter().enumerate() {
                let x = self.mesh.map_to_physical(k, *p);
                let vals = f(x);
                for (field, v) in vals.iter().enumerate().take(self.dof_map.n_fields) {
                    u[self.dof_map.index(k, node, field)] = *v;
                }
            }
        }
        u
    }

    /// Physical coordinates of every volume node, element-major.
    pub fn node_coordinates(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.mesh.n_elements() * self.dof_map.n_nodes);
        for k in 0..self.mesh.n_elements() {
            for p in &self.refelem.nodes {
                out.push(self.mesh.map_to_physical(k, *p));
            }
        }
        out
    }
}

/// Assembles `M` and `K` for the given discretization.
pub fn assemble(
    mesh: &Mesh,
    refelem: &ReferenceElement,
    system: &HyperbolicSystem,
    flux: FluxConfig,
) -> Result<DGOperator> {
    if mesh.dim != refelem.dim {
        return Err(Error::DimensionMismatch(format!(
            "mesh is {}D but the reference element is {}D",
            mesh.dim, refelem.dim
        )));
    }
    if system.dim != mesh.dim {
        return Err(Error::DimensionMismatch(format!(
            "system {} is {}D but the mesh is {}D",
            system.kind, system.dim, mesh.dim
        )));
    }
    let n_el = mesh.n_elements();
    let np = refelem.n_nodes();
    let m = system.n_fields;
    let dof_map = DofMap {
        n_elements: n_el,
        n_nodes: np,
        n_fields: m,
    };
    let n = dof_map.len();
    let traces = face_traces(mesh, refelem, system, flux)?;

    let mut mass = Mat::<f64>::zeros(n, n);
    let mut k_central = Mat::<f64>::zeros(n, n);
    let mut k_penalty = Mat::<f64>::zeros(n, n);
    let mut local_mass_inv = Vec::with_capacity(n_el);
    let ref_mass_inv = linalg::inverse(refelem.mass.as_ref())?;

    for k in 0..n_el {
        let jac = mesh.jacobians[k];
        let mk = Mat::from_fn(np, np, |a, b| jac * refelem.mass[(a, b)]);
        local_mass_inv.push(Mat::from_fn(np, np, |a, b| ref_mass_inv[(a, b)] / jac));
        // Physical differentiation matrices D_i = sum_r (dr/dx_i) D_r.
        let mut skew = Vec::with_capacity(mesh.dim);
        for i in 0..mesh.dim {
            let mut d = Mat::<f64>::zeros(np, np);
            for (r, dr) in refelem.diff_matrices.iter().enumerate() {
                let c = mesh.inverse_jacobians[k][r][i];
                if c != 0.0 {
                    d += Mat::from_fn(np, np, |a, b| c * dr[(a, b)]);
                }
            }
            let s = &mk * &d;
            skew.push(Mat::from_fn(np, np, |a, b| 0.5 * (s[(b, a)] - s[(a, b)])));
        }
        for alpha in 0..m {
            for beta in 0..m {
                for a in 0..np {
                    for b in 0..np {
                        let row = dof_map.index(k, a, alpha);
                        let col = dof_map.index(k, b, beta);
                        if alpha == beta {
                            mass[(row, col)] = mk[(a, b)];
                        }
                        let mut v = 0.0;
                        for (i, ai) in system.coeff_matrices.iter().enumerate() {
                            v += ai[(alpha, beta)] * skew[i][(a, b)];
                        }
                        k_central[(row, col)] += v;
                    }
                }
            }
        }
    }

    for t in &traces {
        let k = t.element;
        let nfp = t.minus_nodes.len();
        let a_n = &t.flux.a_n;
        let p = &t.flux.unit_penalization;
        match &t.plus {
            TraceSide::Neighbor { element: kp, nodes } => {
                for a in 0..nfp {
                    for b in 0..nfp {
                        let w = t.mass[(a, b)];
                        if w == 0.0 {
                            continue;
                        }
                        for alpha in 0..m {
                            for beta in 0..m {
                                let rm = dof_map.index(k, t.minus_nodes[a], alpha);
                                let rp = dof_map.index(*kp, nodes[a], alpha);
                                let cm = dof_map.index(k, t.minus_nodes[b], beta);
                                let cp = dof_map.index(*kp, nodes[b], beta);
                                let an = 0.5 * a_n[(alpha, beta)] * w;
                                k_central[(rp, cm)] += an;
                                k_central[(rm, cp)] -= an;
                                let pw = p[(alpha, beta)] * w;
                                k_penalty[(rp, cp)] -= pw;
                                k_penalty[(rp, cm)] += pw;
                                k_penalty[(rm, cp)] += pw;
                                k_penalty[(rm, cm)] -= pw;
                            }
                        }
                    }
                }
            }
            TraceSide::Reflect(r) => {
                let anr = a_n * r;
                let r_minus_i = Mat::from_fn(m, m, |i, j| r[(i, j)] - if i == j { 1.0 } else { 0.0 });
                let pr = p * &r_minus_i;
                for a in 0..nfp {
                    for b in 0..nfp {
                        let w = t.mass[(a, b)];
                        if w == 0.0 {
                            continue;
                        }
                        for alpha in 0..m {
                            for beta in 0..m {
                                let row = dof_map.index(k, t.minus_nodes[a], alpha);
                                let col = dof_map.index(k, t.minus_nodes[b], beta);
                                k_central[(row, col)] -= 0.5 * anr[(alpha, beta)] * w;
                                k_penalty[(row, col)] += pr[(alpha, beta)] * w;
                            }
                        }
                    }
                }
            }
        }
    }

    let tau = flux.effective_tau();
    let k_matrix = Mat::from_fn(n, n, |i, j| k_central[(i, j)] + tau * k_penalty[(i, j)]);
    let config = OperatorConfig {
        system: system.kind,
        dim: mesh.dim,
        degree: refelem.degree,
        node_family: refelem.family,
        flux,
        n_elements: n_el,
        bc: mesh.bc,
    };
    Ok(DGOperator {
        k_matrix,
        m_matrix: mass,
        k_central,
        k_penalty,
        dof_map,
        config,
        mesh: mesh.clone(),
        refelem: refelem.clone(),
        system: system.clone(),
        traces,
        local_mass_inv,
    })
}

/// Matched face traces, normal matrices and face masses for every mesh face.
pub fn face_traces(
    mesh: &Mesh,
    refelem: &ReferenceElement,
    system: &HyperbolicSystem,
    flux: FluxConfig,
) -> Result<Vec<FaceTrace>> {
    let mut cache: HashMap<[u64; 2], NormalFluxData> = HashMap::new();
    let mut out = Vec::with_capacity(mesh.faces.len());
    for face in &mesh.faces {
        let (k, f) = (face.element, face.local_face);
        let n = mesh.normals[k][f];
        let key = [n[0].to_bits(), n[1].to_bits()];
        let data = match cache.get(&key) {
            Some(d) => d.clone(),
            None => {
                let d = normal_flux_data(system, n, flux)?;
                cache.insert(key, d.clone());
                d
            }
        };
        let fj = mesh.face_jacobians[k][f];
        let mass = Mat::from_fn(refelem.n_face_nodes(), refelem.n_face_nodes(), |a, b| {
            fj * refelem.face_mass[f][(a, b)]
        });
        let minus_nodes = refelem.face_nodes[f].clone();
        let plus = match &face.neighbor {
            FaceNeighbor::Interior {
                element,
                local_face,
                orientation,
                ..
            } => {
                let perm = orientation.permutation(minus_nodes.len());
                let theirs = &refelem.face_nodes[*local_face];
                TraceSide::Neighbor {
                    element: *element,
                    nodes: perm.iter().map(|&i| theirs[i]).collect(),
                }
            }
            FaceNeighbor::Boundary { tag } => match system.wall_reflection(n) {
                Some(r) => TraceSide::Reflect(r),
                None => {
                    return Err(Error::MissingBoundaryRule {
                        element: k,
                        tag: tag.clone(),
                        system: system.kind.to_string(),
                    })
                }
            },
        };
        out.push(FaceTrace {
            element: k,
            local_face: f,
            minus_nodes,
            plus,
            mass,
            flux: data,
        });
    }
    Ok(out)
}

/// Jump `U+ - U-` at each owner trace node of face `t`, as `[node][field]`.
pub fn trace_jump(t: &FaceTrace, dof_map: &DofMap, u: &[f64]) -> Vec<Vec<f64>> {
    let m = dof_map.n_fields;
    let minus = |a: usize| -> Vec<f64> {
        (0..m)
            .map(|field| u[dof_map.index(t.element, t.minus_nodes[a], field)])
            .collect()
    };
    (0..t.minus_nodes.len())
        .map(|a| {
            let um = minus(a);
            let up: Vec<f64> = match &t.plus {
                TraceSide::Neighbor { element, nodes } => (0..m)
                    .map(|field| u[dof_map.index(*element, nodes[a], field)])
                    .collect(),
                TraceSide::Reflect(r) => linalg::mat_vec(r.as_ref(), &um),
            };
            up.iter().zip(&um).map(|(p, q)| p - q).collect()
        })
        .collect()
}

/// Parameters of a standard test problem on a uniform mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub system: SystemKind,
    /// Advection velocity; ignored by acoustics.
    pub beta: Option<[f64; 2]>,
    pub degree: usize,
    /// Element count in 1D.
    pub elements: usize,
    /// Quadrilateral counts in 2D.
    pub nx: usize,
    pub ny: usize,
    /// Defaults to `[-1, 1]` per direction.
    pub domain: Option<[[f64; 2]; 2]>,
    /// Defaults to periodic for advection and wall for acoustics.
    pub bc: Option<BoundaryCondition>,
    pub node_family: NodeFamily,
    pub condition_cap: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            system: SystemKind::Advection1d,
            beta: None,
            degree: 3,
            elements: 8,
            nx: 4,
            ny: 4,
            domain: None,
            bc: None,
            node_family: NodeFamily::Optimized,
            condition_cap: crate::refelem::DEFAULT_CONDITION_CAP,
        }
    }
}

impl ProblemConfig {
    pub fn new(system: SystemKind, degree: usize) -> Self {
        Self {
            system,
            degree,
            ..Self::default()
        }
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.bc.unwrap_or(match self.system {
            SystemKind::Advection1d | SystemKind::Advection2d => BoundaryCondition::Periodic,
            SystemKind::Acoustics1d | SystemKind::Acoustics2d => BoundaryCondition::Wall,
        })
    }

    pub fn domain_box(&self) -> [[f64; 2]; 2] {
        self.domain.unwrap_or([[-1.0, 1.0], [-1.0, 1.0]])
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let d = self.domain_box();
        match self.system.dim() {
            1 => crate::mesh::build_mesh_1d(self.elements, d[0], self.boundary()),
            _ => crate::mesh::build_mesh_2d_bisected(self.nx, self.ny, d, self.boundary()),
        }
    }

    pub fn build_refelem(&self) -> Result<ReferenceElement> {
        ReferenceElement::new(
            self.system.dim(),
            self.degree,
            crate::refelem::ReferenceOptions {
                family: self.node_family,
                condition_cap: self.condition_cap,
            },
        )
    }

    pub fn build_system(&self) -> HyperbolicSystem {
        HyperbolicSystem::from_kind(self.system, self.beta)
    }

    pub fn assemble(&self, flux: FluxConfig) -> Result<DGOperator> {
        let mesh = self.build_mesh()?;
        let re = self.build_refelem()?;
        assemble(&mesh, &re, &self.build_system(), flux)
    }

    /// Penalty-flux operator at `tau`.
    pub fn penalty(&self, tau: f64) -> Result<DGOperator> {
        self.assemble(FluxConfig::new(FluxKind::Penalty, tau)?)
    }
}
