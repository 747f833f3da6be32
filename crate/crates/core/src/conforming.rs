//! The flux-induced conforming subspace and the block form of `K`.
//!
//! `V^C` is the set of states on which the flux penalization vanishes on every
//! face. It is computed as the null space of a pointwise constraint matrix `G`
//! (one row per face, trace node and constraint component). With `M = L L^T`,
//! the SVD of `G L^{-T}` gives M-orthonormal bases
//! `Phi = L^{-T} V_null` of `V^C` and `Psi = L^{-T} V_range` of its
//! M-orthogonal complement `V^NC`.

use faer::{c64, Mat};

use crate::assembly::{DGOperator, TraceSide};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pde::FluxKind;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ConformingSplit {
    pub constraint_matrix: Mat<f64>,
    /// `Phi`, n x N^C.
    pub basis_c: Mat<f64>,
    /// `Psi`, n x N^NC.
    pub basis_nc: Mat<f64>,
    /// `(N^C, N^NC)`.
    pub dims: (usize, usize),
    /// Singular values of `G L^{-T}`, nonincreasing.
    pub singular_values: Vec<f64>,
}

impl ConformingSplit {
    pub fn n_c(&self) -> usize {
        self.dims.0
    }

    pub fn n_nc(&self) -> usize {
        self.dims.1
    }
}

/// Pointwise constraint rows `C [[U]] = 0` at matched trace nodes.
pub fn constraint_matrix(op: &DGOperator) -> Result<Mat<f64>> {
    if op.config.flux.kind == FluxKind::Central {
        return Err(Error::NoPenalization("central".into()));
    }
    let m = op.dof_map.n_fields;
    let n = op.n_dofs();
    let rows: usize = op.traces.iter().map(|t| t.minus_nodes.len() * m).sum();
    let mut g = Mat::<f64>::zeros(rows, n);
    let mut row = 0;
    for t in &op.traces {
        let c = &t.flux.constraint;
        for a in 0..t.minus_nodes.len() {
            match &t.plus {
                TraceSide::Neighbor { element, nodes } => {
                    for alpha in 0..m {
                        for beta in 0..m {
                            let w = c[(alpha, beta)];
                            if w != 0.0 {
                                g[(row + alpha, op.dof_map.index(*element, nodes[a], beta))] += w;
                                g[(row + alpha, op.dof_map.index(t.element, t.minus_nodes[a], beta))] -= w;
                            }
                        }
                    }
                }
                TraceSide::Reflect(r) => {
                    let r_minus_i =
                        Mat::from_fn(m, m, |i, j| r[(i, j)] - if i == j { 1.0 } else { 0.0 });
                    let cr = c * &r_minus_i;
                    for alpha in 0..m {
                        for beta in 0..m {
                            let w = cr[(alpha, beta)];
                            if w != 0.0 {
                                g[(row + alpha, op.dof_map.index(t.element, t.minus_nodes[a], beta))] += w;
                            }
                        }
                    }
                }
            }
            row += m;
        }
    }
    Ok(g)
}

/// Splits the DG space into `V^C` and `V^NC` for the operator's flux.
pub fn build_conforming_split(op: &DGOperator) -> Result<ConformingSplit> {
    let g = constraint_matrix(op)?;
    let n = op.n_dofs();
    let l = op.mass_cholesky()?;
    // X^T = L^{-1} G^T, so X = G L^{-T}.
    let mut xt = g.transpose().to_owned();
    linalg::solve_lower_in_place(l.as_ref(), &mut xt);
    let x = xt.transpose().to_owned();

    let (sigma, v) = if x.nrows() == 0 {
        (Vec::new(), Mat::identity(n, n))
    } else {
        let (_, s, v) = linalg::svd(x.as_ref())?;
        (s, v)
    };
    let smax = sigma.first().copied().unwrap_or(0.0);
    let threshold = RANK_THRESHOLD * smax;
    for &s in &sigma {
        if s > 0.1 * threshold && s < 10.0 * threshold {
            return Err(Error::AmbiguousRank {
                sigma: s,
                threshold,
            });
        }
    }
    let rank = sigma.iter().filter(|&&s| s > threshold).count();
    let n_c = n - rank;

    let mut phi = Mat::from_fn(n, n_c, |i, j| v[(i, rank + j)]);
    let mut psi = Mat::from_fn(n, rank, |i, j| v[(i, j)]);
    linalg::solve_lower_transpose_in_place(l.as_ref(), &mut phi);
    linalg::solve_lower_transpose_in_place(l.as_ref(), &mut psi);

    Ok(ConformingSplit {
        constraint_matrix: g,
        basis_c: phi,
        basis_nc: psi,
        dims: (n_c, rank),
        singular_values: sigma,
    })
}

/// `K` projected onto `[Phi Psi]`:
///
/// ```text
/// [[A, B], [-B^T, C + tau S]]
/// ```
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub a_block: Mat<f64>,
    pub b_block: Mat<f64>,
    pub c_block: Mat<f64>,
    pub s_block: Mat<f64>,
}

impl BlockDecomposition {
    pub fn n_c(&self) -> usize {
        self.a_block.nrows()
    }

    pub fn n_nc(&self) -> usize {
        self.c_block.nrows()
    }

    pub fn projected_operator(&self, tau: f64) -> Mat<f64> {
        let (nc, nn) = (self.n_c(), self.n_nc());
        Mat::from_fn(nc + nn, nc + nn, |i, j| match (i < nc, j < nc) {
            (true, true) => self.a_block[(i, j)],
            (true, false) => self.b_block[(i, j - nc)],
            (false, true) => -self.b_block[(j, i - nc)],
            (false, false) => self.c_block[(i - nc, j - nc)] + tau * self.s_block[(i - nc, j - nc)],
        })
    }

    /// Eigenvalues of `S`, ascending.
    pub fn s_eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::symmetric_eigenvalues(self.s_block.as_ref())
    }
}

/// Projects `K` onto the split; `S` is the difference of `Psi^T K Psi` at
/// `tau = 1` and `tau = 0`.
pub fn block_decompose(op: &DGOperator, split: &ConformingSplit) -> Result<BlockDecomposition> {
    if split.basis_c.nrows() != op.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "split has {} rows, operator has {} unknowns",
            split.basis_c.nrows(),
            op.n_dofs()
        )));
    }
    let k0 = op.k_at(0.0);
    let k1 = op.k_at(1.0);
    let phi = &split.basis_c;
    let psi = &split.basis_nc;
    let k0_phi = &k0 * phi;
    let k0_psi = &k0 * psi;
    let k1_psi = &k1 * psi;
    let a_block = phi.transpose() * &k0_phi;
    let b_block = phi.transpose() * &k0_psi;
    let c_block = psi.transpose() * &k0_psi;
    let c1 = psi.transpose() * &k1_psi;
    let s_block = &c1 - &c_block;
    Ok(BlockDecomposition {
        a_block,
        b_block,
        c_block,
        s_block,
    })
}

/// Eigenvalues of the conforming block `A`, sorted like a spectrum.
pub fn conforming_spectrum(blocks: &BlockDecomposition) -> Result<Vec<c64>> {
    if blocks.n_c() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = linalg::eigenvalues(blocks.a_block.as_ref())?;
    crate::spectral::sort_eigenvalues(&mut ev);
    Ok(ev)
}
