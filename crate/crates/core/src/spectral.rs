//! Spectra of `K u = lambda M u`, the block-diagonal similarity transform of the
//! projected operator, and Gerschgorin disc bounds.

use faer::{c64, Mat};
use serde::Serialize;

use crate::assembly::DGOperator;
use crate::conforming::{BlockDecomposition, ConformingSplit};
use crate::error::{Error, Result};
use crate::linalg;

/// Real parts closer than this (relative to the spectral radius) sort as ties.
const SORT_TIE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub tau: f64,
    /// Sorted by real part descending, ties broken by imaginary part ascending.
    pub eigenvalues: Vec<c64>,
    /// M-normalized eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: Mat<c64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.eigenvalues)
    }

    pub fn eigenvector(&self, j: usize) -> Vec<c64> {
        linalg::column_complex(self.eigenvectors.as_ref(), j)
    }
}

pub fn spectral_radius(ev: &[c64]) -> f64 {
    ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sort order: real part descending, then imaginary part ascending. Real parts
/// within a relative tie tolerance are grouped so the order is stable under
/// round-off.
pub fn sort_order(ev: &[c64]) -> Vec<usize> {
    let scale = spectral_radius(ev).max(1.0);
    let tie = SORT_TIE * scale;
    let mut idx: Vec<usize> = (0..ev.len()).collect();
    idx.sort_by(|&a, &b| ev[b].re.total_cmp(&ev[a].re).then(ev[a].im.total_cmp(&ev[b].im)));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && ev[idx[end - 1]].re - ev[idx[end]].re <= tie {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&a, &b| ev[a].im.total_cmp(&ev[b].im).then(a.cmp(&b)));
        out.extend(group);
        start = end;
    }
    out
}

pub fn sort_eigenvalues(ev: &mut Vec<c64>) {
    let order = sort_order(ev);
    *ev = order.iter().map(|&i| ev[i]).collect();
}

/// `L^{-1} K L^{-T}` for lower-triangular `L`.
pub fn symmetrized_operator(k: &Mat<f64>, l: &Mat<f64>) -> Mat<f64> {
    let mut y = k.clone();
    linalg::solve_lower_in_place(l.as_ref(), &mut y);
    let mut ht = y.transpose().to_owned();
    linalg::solve_lower_in_place(l.as_ref(), &mut ht);
    ht.transpose().to_owned()
}

/// Eigenvalues and eigenvectors of the operator at its configured flux.
pub fn compute_spectrum(op: &DGOperator) -> Result<Spectrum> {
    let l = op.mass_cholesky()?;
    spectrum_of(&op.k_matrix, &l, op.tau())
}

/// Eigenpairs of `K u = lambda L L^T u`.
pub fn spectrum_of(k: &Mat<f64>, l: &Mat<f64>, tau: f64) -> Result<Spectrum> {
    let h = symmetrized_operator(k, l);
    let (vals, vecs) = linalg::eigen(h.as_ref()).map_err(|e| {
        Error::EigenSolver(format!("{e} (tau = {tau}, n = {})", k.nrows()))
    })?;
    let n = vals.len();
    let order = sort_order(&vals);
    let eigenvalues: Vec<c64> = order.iter().map(|&i| vals[i]).collect();
    // u = L^{-T} y with |y| = 1 gives u^H M u = 1.
    let mut y = Mat::<c64>::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        let col = linalg::column_complex(vecs.as_ref(), src);
        let nrm = linalg::norm_complex(&col);
        for i in 0..n {
            y[(i, j)] = col[i] / nrm;
        }
    }
    let lc = linalg::to_complex(l.as_ref());
    lc.transpose().solve_upper_triangular_in_place(y.as_mut());
    Ok(Spectrum {
        tau,
        eigenvalues,
        eigenvectors: y,
    })
}

/// Eigenvalues only, from a precomputed `L^{-1} K L^{-T}`.
pub fn eigenvalues_symmetrized(h: &Mat<f64>) -> Result<Vec<c64>> {
    let mut ev = linalg::eigenvalues(h.as_ref())?;
    sort_eigenvalues(&mut ev);
    Ok(ev)
}

/// `|K v - lambda M v| / |v|` for each eigenpair.
pub fn residuals(op_k: &Mat<f64>, m: &Mat<f64>, spec: &Spectrum) -> Vec<f64> {
    let kc = linalg::to_complex(op_k.as_ref());
    let mc = linalg::to_complex(m.as_ref());
    let kv = &kc * &spec.eigenvectors;
    let mv = &mc * &spec.eigenvectors;
    (0..spec.len())
        .map(|j| {
            let lam = spec.eigenvalues[j];
            let mut r = 0.0;
            let mut v = 0.0;
            for i in 0..spec.eigenvectors.nrows() {
                r += (kv[(i, j)] - lam * mv[(i, j)]).norm_sqr();
                v += spec.eigenvectors[(i, j)].norm_sqr();
            }
            (r / v).sqrt()
        })
        .collect()
}

/// Largest distance from an eigenvalue to the conjugate of its nearest partner.
pub fn conjugate_pairing_defect(ev: &[c64]) -> f64 {
    let mut used = vec![false; ev.len()];
    let mut worst = 0.0f64;
    for i in 0..ev.len() {
        if used[i] {
            continue;
        }
        let target = ev[i].conj();
        let mut best = (f64::INFINITY, i);
        for (j, z) in ev.iter().enumerate() {
            if !used[j] && (j != i || ev[i].im == 0.0) {
                let d = (z - target).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        used[i] = true;
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
}

impl Disc {
    pub fn center(&self) -> c64 {
        c64::new(self.center_re, self.center_im)
    }

    pub fn contains(&self, z: c64) -> bool {
        (z - self.center()).norm() <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    pub fn overlaps(&self, other: &Disc) -> bool {
        (self.center() - other.center()).norm() <= self.radius + other.radius
    }
}

/// Diagonalizers of the conforming block and of `S`, independent of `tau`.
#[derive(Debug, Clone)]
pub struct BlockDiagonalizer {
    /// Unitary eigenvectors of `A` (columns).
    pub u: Mat<c64>,
    /// Imaginary parts of the eigenvalues of `A`.
    pub a_freqs: Vec<f64>,
    /// Orthogonal eigenvectors of `S`.
    pub q: Mat<f64>,
    /// Eigenvalues of `S`, ascending.
    pub s_eigenvalues: Vec<f64>,
    /// `diag(U^*, Q^T) [[A, B], [-B^T, C]] diag(U, Q)`.
    pub transformed_central: Mat<c64>,
}

impl BlockDiagonalizer {
    pub fn new(blocks: &BlockDecomposition) -> Result<Self> {
        let nc = blocks.n_c();
        let nn = blocks.n_nc();
        // iA is Hermitian for skew A; A = U diag(-i mu) U^*.
        let ia = Mat::from_fn(nc, nc, |i, j| c64::new(0.0, blocks.a_block[(i, j)]));
        let ia = Mat::from_fn(nc, nc, |i, j| (ia[(i, j)] + ia[(j, i)].conj()) * 0.5);
        let (mu, u) = if nc > 0 {
            linalg::hermitian_eigen(ia.as_ref())?
        } else {
            (Vec::new(), Mat::zeros(0, 0))
        };
        let uh_u = u.adjoint() * &u;
        let mut dev = 0.0f64;
        for i in 0..nc {
            for j in 0..nc {
                let e = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((uh_u[(i, j)] - c64::new(e, 0.0)).norm());
            }
        }
        if dev > 1e-6 {
            return Err(Error::NonUnitary(dev));
        }
        let s_sym = Mat::from_fn(nn, nn, |i, j| 0.5 * (blocks.s_block[(i, j)] + blocks.s_block[(j, i)]));
        let (s_eigenvalues, q) = if nn > 0 {
            linalg::symmetric_eigen(s_sym.as_ref())?
        } else {
            (Vec::new(), Mat::zeros(0, 0))
        };
        let t0 = linalg::to_complex(blocks.projected_operator(0.0).as_ref());
        let n = nc + nn;
        let mut d = Mat::<c64>::zeros(n, n);
        for i in 0..nc {
            for j in 0..nc {
                d[(i, j)] = u[(i, j)];
            }
        }
        for i in 0..nn {
            for j in 0..nn {
                d[(nc + i, nc + j)] = c64::new(q[(i, j)], 0.0);
            }
        }
        let transformed_central = d.adjoint() * (&t0 * &d);
        Ok(Self {
            u,
            a_freqs: mu.iter().map(|m| -m).collect(),
            q,
            s_eigenvalues,
            transformed_central,
        })
    }

    pub fn n_c(&self) -> usize {
        self.a_freqs.len()
    }

    /// `K~(tau)`: the transformed central part plus `tau diag(0, Lambda_S)`.
    pub fn transformed(&self, tau: f64) -> Mat<c64> {
        let mut t = self.transformed_central.clone();
        let nc = self.n_c();
        for (j, &l) in self.s_eigenvalues.iter().enumerate() {
            t[(nc + j, nc + j)] += c64::new(tau * l, 0.0);
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GerschgorinStructure {
    pub tau: f64,
    pub conforming_discs: Vec<Disc>,
    pub nonconforming_discs: Vec<Disc>,
    pub disjoint: bool,
}

impl GerschgorinStructure {
    pub fn in_conforming_union(&self, z: c64) -> bool {
        self.conforming_discs.iter().any(|d| d.contains(z))
    }

    pub fn in_nonconforming_union(&self, z: c64) -> bool {
        self.nonconforming_discs.iter().any(|d| d.contains(z))
    }

    pub fn in_union(&self, z: c64) -> bool {
        self.in_conforming_union(z) || self.in_nonconforming_union(z)
    }

    pub fn count_conforming(&self, ev: &[c64]) -> usize {
        ev.iter().filter(|&&z| self.in_conforming_union(z)).count()
    }
}

pub fn gerschgorin_structure(blocks: &BlockDecomposition, tau: f64) -> Result<GerschgorinStructure> {
    let diag = BlockDiagonalizer::new(blocks)?;
    Ok(gerschgorin_from(&diag, tau))
}

pub fn gerschgorin_from(diag: &BlockDiagonalizer, tau: f64) -> GerschgorinStructure {
    let t = diag.transformed(tau);
    let n = t.nrows();
    let nc = diag.n_c();
    let discs: Vec<Disc> = (0..n)
        .map(|i| {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| t[(i, j)].norm()).sum();
            Disc {
                center_re: t[(i, i)].re,
                center_im: t[(i, i)].im,
                radius,
            }
        })
        .collect();
    let conforming_discs = discs[..nc].to_vec();
    let nonconforming_discs = discs[nc..].to_vec();
    let disjoint = unions_disjoint(&conforming_discs, &nonconforming_discs);
    GerschgorinStructure {
        tau,
        conforming_discs,
        nonconforming_discs,
        disjoint,
    }
}

fn unions_disjoint(a: &[Disc], b: &[Disc]) -> bool {
    if a.is_empty() || b.is_empty() {
        return true;
    }
    // Real-part projections first; separated intervals settle it immediately.
    let lo = |d: &[Disc]| d.iter().map(|x| x.center_re - x.radius).fold(f64::INFINITY, f64::min);
    let hi = |d: &[Disc]| d.iter().map(|x| x.center_re + x.radius).fold(f64::NEG_INFINITY, f64::max);
    if hi(b) < lo(a) || hi(a) < lo(b) {
        return true;
    }
    a.iter().all(|x| b.iter().all(|y| !x.overlaps(y)))
}

/// Smallest `tau` in `[lo, hi]` at which the disc unions separate, by bisection.
/// Returns `None` if they still overlap at `hi`.
pub fn separation_tau(diag: &BlockDiagonalizer, lo: f64, hi: f64, rel_tol: f64) -> Option<f64> {
    if !gerschgorin_from(diag, hi).disjoint {
        return None;
    }
    if gerschgorin_from(diag, lo).disjoint {
        return Some(lo);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > rel_tol * b {
        let mid = 0.5 * (a + b);
        if gerschgorin_from(diag, mid).disjoint {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}

/// `(|W^C|, |W^NC|)` for each eigenvector: norms of its M-orthogonal components.
pub fn eigenvector_partition(spec: &Spectrum, split: &ConformingSplit, m: &Mat<f64>) -> Result<Vec<(f64, f64)>> {
    if spec.eigenvectors.nrows() != m.nrows() || split.basis_c.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch(
            "spectrum, split and mass matrix sizes differ".into(),
        ));
    }
    let mc = linalg::to_complex(m.as_ref());
    let mw = &mc * &spec.eigenvectors;
    let phi = linalg::to_complex(split.basis_c.as_ref());
    let psi = linalg::to_complex(split.basis_nc.as_ref());
    let wc = phi.transpose() * &mw;
    let wnc = psi.transpose() * &mw;
    Ok((0..spec.len())
        .map(|j| {
            let a: f64 = (0..wc.nrows()).map(|i| wc[(i, j)].norm_sqr()).sum();
            let b: f64 = (0..wnc.nrows()).map(|i| wnc[(i, j)].norm_sqr()).sum();
            (a.sqrt(), b.sqrt())
        })
        .collect())
}
