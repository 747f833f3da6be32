//! Nodal reference elements: the reference interval [-1, 1] and the reference
//! triangle with vertices (-1,-1), (1,-1), (-1,1).
//!
//! Local operators are built from an orthonormal modal basis through the
//! Vandermonde matrix `V[i, j] = psi_j(r_i)`:
//! - differentiation `D_r = V_r V^{-1}` (and `D_s` on triangles),
//! - mass `M = V^{-T} V^{-1}`,
//! - face mass on each face, exact for traces of degree-N polynomials,
//! - lift `M^{-1} E`, where `E` integrates face data against volume basis functions.
//!
//! Faces are numbered so that face `f` runs from vertex `f` to vertex `f + 1`
//! (mod 3) on triangles; face nodes are listed in that direction. On the
//! interval, face 0 is `r = -1` and face 1 is `r = 1`.

mod nodes;
pub mod polynomial;

pub use nodes::{equispaced, gauss_lobatto, interval_nodes, triangle_nodes, NodeFamily};

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;

/// Default cap on the Vandermonde condition number.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    pub family: NodeFamily,
    pub condition_cap: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            family: NodeFamily::Optimized,
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

/// Nodal basis data on a reference element. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub dim: usize,
    pub degree: usize,
    pub family: NodeFamily,
    /// Node coordinates `(r, s)`; `s = 0` on the interval.
    pub nodes: Vec<[f64; 2]>,
    pub vandermonde: Mat<f64>,
    pub vandermonde_inv: Mat<f64>,
    /// One differentiation matrix per reference direction.
    pub diff_matrices: Vec<Mat<f64>>,
    pub mass: Mat<f64>,
    /// Volume node indices on each face, ordered along the face.
    pub face_nodes: Vec<Vec<usize>>,
    /// Face-node parameters in [-1, 1] along each face.
    pub face_params: Vec<Vec<f64>>,
    /// Face mass matrices with respect to the face parameter (unit half-length).
    pub face_mass: Vec<Mat<f64>>,
    /// Ratio of reference-face measure to parameter measure.
    pub face_ref_jacobians: Vec<f64>,
    /// `M^{-1} E`, columns ordered face-major then face node.
    pub lift: Mat<f64>,
    pub vandermonde_condition: f64,
}

/// Builds the reference element with the default (optimized) node family.
pub fn build_reference_element(dim: usize, degree: usize) -> Result<ReferenceElement> {
    ReferenceElement::new(dim, degree, ReferenceOptions::default())
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize, opts: ReferenceOptions) -> Result<Self> {
        match dim {
            1 => Self::interval(degree, opts),
            2 => Self::triangle(degree, opts),
            _ => Err(Error::InvalidArgument(format!(
                "reference elements exist for dim 1 and 2, got {dim}"
            ))),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_faces(&self) -> usize {
        self.face_nodes.len()
    }

    pub fn n_face_nodes(&self) -> usize {
        self.face_nodes[0].len()
    }

    /// Values of the orthonormal modes at a reference point.
    pub fn modal_values(&self, point: [f64; 2]) -> Vec<f64> {
        modal_row(self.dim, self.degree, point)
    }

    /// Values of the Lagrange basis functions at a reference point.
    pub fn lagrange_values(&self, point: [f64; 2]) -> Vec<f64> {
        let psi = self.modal_values(point);
        let np = self.n_nodes();
        (0..np)
            .map(|k| (0..np).map(|j| psi[j] * self.vandermonde_inv[(j, k)]).sum())
            .collect()
    }

    fn interval(degree: usize, opts: ReferenceOptions) -> Result<Self> {
        let r = interval_nodes(degree, opts.family);
        let nodes: Vec<[f64; 2]> = r.iter().map(|&x| [x, 0.0]).collect();
        let np = nodes.len();
        let v = Mat::from_fn(np, np, |i, j| polynomial::legendre(r[i], j));
        let vr = Mat::from_fn(np, np, |i, j| polynomial::grad_legendre(r[i], j));
        let face_nodes = vec![vec![0], vec![np - 1]];
        let face_params = vec![vec![0.0], vec![0.0]];
        let face_mass = vec![Mat::from_fn(1, 1, |_, _| 1.0); 2];
        Self::finish(
            1,
            degree,
            opts,
            nodes,
            v,
            vec![vr],
            face_nodes,
            face_params,
            face_mass,
            vec![1.0, 1.0],
        )
    }

    fn triangle(degree: usize, opts: ReferenceOptions) -> Result<Self> {
        let nodes = triangle_nodes(degree, opts.family);
        let np = nodes.len();
        let modes = polynomial::simplex_mode_indices(degree);
        let v = Mat::from_fn(np, np, |i, j| {
            let (a, b) = modes[j];
            polynomial::simplex_2d(nodes[i][0], nodes[i][1], a, b)
        });
        let mut vr = Mat::zeros(np, np);
        let mut vs = Mat::zeros(np, np);
        for i in 0..np {
            for (j, &(a, b)) in modes.iter().enumerate() {
                let (dr, ds) = polynomial::grad_simplex_2d(nodes[i][0], nodes[i][1], a, b);
                vr[(i, j)] = dr;
                vs[(i, j)] = ds;
            }
        }

        // Face f runs from reference vertex f to vertex f+1; the parameter t in
        // [-1, 1] increases along that direction.
        let tol = 1e-10;
        let on_face = |f: usize, p: &[f64; 2]| -> bool {
            match f {
                0 => (p[1] + 1.0).abs() < tol,
                1 => (p[0] + p[1]).abs() < tol,
                _ => (p[0] + 1.0).abs() < tol,
            }
        };
        let param = |f: usize, p: &[f64; 2]| -> f64 {
            match f {
                0 => p[0],
                1 => p[1],
                _ => -p[1],
            }
        };
        let mut face_nodes = Vec::with_capacity(3);
        let mut face_params = Vec::with_capacity(3);
        let mut face_mass = Vec::with_capacity(3);
        for f in 0..3 {
            // A constant trace is carried by the single (centroid) node.
            let mut idx: Vec<usize> = if degree == 0 {
                vec![0]
            } else {
                (0..np).filter(|&i| on_face(f, &nodes[i])).collect()
            };
            if idx.len() != degree + 1 {
                return Err(Error::InvalidArgument(format!(
                    "node set places {} nodes on face {f}, expected {}",
                    idx.len(),
                    degree + 1
                )));
            }
            idx.sort_by(|&a, &b| param(f, &nodes[a]).total_cmp(&param(f, &nodes[b])));
            let t: Vec<f64> = if degree == 0 {
                vec![0.0]
            } else {
                idx.iter().map(|&i| param(f, &nodes[i])).collect()
            };
            face_mass.push(interval_mass(&t)?);
            face_nodes.push(idx);
            face_params.push(t);
        }
        let jac = vec![1.0, std::f64::consts::SQRT_2, 1.0];
        Self::finish(
            2,
            degree,
            opts,
            nodes,
            v,
            vec![vr, vs],
            face_nodes,
            face_params,
            face_mass,
            jac,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        dim: usize,
        degree: usize,
        opts: ReferenceOptions,
        nodes: Vec<[f64; 2]>,
        v: Mat<f64>,
        modal_grads: Vec<Mat<f64>>,
        face_nodes: Vec<Vec<usize>>,
        face_params: Vec<Vec<f64>>,
        face_mass: Vec<Mat<f64>>,
        face_ref_jacobians: Vec<f64>,
    ) -> Result<Self> {
        let condition = linalg::condition_number(v.as_ref())?;
        if !condition.is_finite() || condition > opts.condition_cap {
            return Err(Error::IllConditionedBasis {
                condition,
                cap: opts.condition_cap,
            });
        }
        let v_inv = linalg::inverse(v.as_ref())?;
        let diff_matrices: Vec<Mat<f64>> = modal_grads.iter().map(|g| g * &v_inv).collect();
        let mass = v_inv.transpose() * &v_inv;
        let mass = symmetrize(mass);

        let np = nodes.len();
        let nfp = face_nodes[0].len();
        let nfaces = face_nodes.len();
        let mut emat = Mat::<f64>::zeros(np, nfaces * nfp);
        for f in 0..nfaces {
            for (b, &vol) in face_nodes[f].iter().enumerate() {
                for a in 0..nfp {
                    emat[(vol, f * nfp + a)] += face_ref_jacobians[f] * face_mass[f][(b, a)];
                }
            }
        }
        let lift = (&v * v.transpose()) * &emat;

        Ok(Self {
            dim,
            degree,
            family: opts.family,
            nodes,
            vandermonde: v,
            vandermonde_inv: v_inv,
            diff_matrices,
            mass,
            face_nodes,
            face_params,
            face_mass,
            face_ref_jacobians,
            lift,
            vandermonde_condition: condition,
        })
    }
}

/// Exact mass matrix of the Lagrange basis on [-1, 1] through the points `t`.
pub fn interval_mass(t: &[f64]) -> Result<Mat<f64>> {
    let n = t.len();
    let v = Mat::from_fn(n, n, |i, j| polynomial::legendre(t[i], j));
    let vi = linalg::inverse(v.as_ref())?;
    Ok(symmetrize(vi.transpose() * &vi))
}

fn modal_row(dim: usize, degree: usize, p: [f64; 2]) -> Vec<f64> {
    if dim == 1 {
        (0..=degree).map(|j| polynomial::legendre(p[0], j)).collect()
    } else {
        polynomial::simplex_mode_indices(degree)
            .into_iter()
            .map(|(a, b)| polynomial::simplex_2d(p[0], p[1], a, b))
            .collect()
    }
}

fn symmetrize(m: Mat<f64>) -> Mat<f64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}
