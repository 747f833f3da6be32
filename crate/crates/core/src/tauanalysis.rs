//! Sweeps over the penalty parameter, eigenvalue path tracking, path
//! classification, rate checks and modal expansions.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::DGOperator;
use crate::conforming::{self, BlockDecomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{self, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathClass {
    ConformingLimit,
    Divergent,
    Unclassified,
}

impl PathClass {
    pub fn id(self) -> &'static str {
        match self {
            PathClass::ConformingLimit => "conforming_limit",
            PathClass::Divergent => "divergent",
            PathClass::Unclassified => "unclassified",
        }
    }
}

/// How divergent paths are told apart from conforming-limit ones at `tau_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ClassificationRule {
    /// The `N^NC` most damped paths, provided their real parts still decrease.
    SplitCount,
    /// Paths with `Re(lambda) < -factor * rho(tau = 0)`.
    SpectralRadius { factor: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Smallest tau step produced by ambiguity refinement.
    pub min_step: f64,
    /// Extra spectra allowed inside one input interval before its remaining
    /// ambiguity is recorded as unresolved.
    pub max_refinements: usize,
    /// Relative distance under which two eigenvalues are treated as one.
    pub coincidence_tol: f64,
    pub track: bool,
    pub classification: ClassificationRule,
    /// Solve the per-tau eigenproblems on the rayon pool.
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            min_step: 1e-4,
            max_refinements: 24,
            coincidence_tol: 1e-8,
            track: true,
            classification: ClassificationRule::SplitCount,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumSweep {
    /// Strictly increasing, including any samples added by refinement.
    pub taus: Vec<f64>,
    /// Sorted eigenvalues per sample.
    pub eigenvalues: Vec<Vec<c64>>,
    /// `paths[p][s]` is the index of path `p` in `eigenvalues[s]`.
    pub paths: Vec<Vec<usize>>,
    pub classification: Vec<PathClass>,
    /// Intervals in which matching stayed ambiguous at the minimum step.
    pub unresolved: Vec<[f64; 2]>,
    pub n_c: usize,
    pub n_nc: usize,
    /// Spectral radius at `tau = 0`.
    pub rho0: f64,
}

impl SpectrumSweep {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn value(&self, path: usize, sample: usize) -> c64 {
        self.eigenvalues[sample][self.paths[path][sample]]
    }

    /// Path values at every sample.
    pub fn path_values(&self, path: usize) -> Vec<c64> {
        (0..self.taus.len()).map(|s| self.value(path, s)).collect()
    }

    /// Index of the sample closest to `tau`.
    pub fn nearest_sample(&self, tau: f64) -> usize {
        let mut best = 0;
        for (s, &t) in self.taus.iter().enumerate() {
            if (t - tau).abs() < (self.taus[best] - tau).abs() {
                best = s;
            }
        }
        best
    }

    pub fn count(&self, class: PathClass) -> usize {
        self.classification.iter().filter(|&&c| c == class).count()
    }

    pub fn tau_max(&self) -> f64 {
        *self.taus.last().unwrap_or(&0.0)
    }
}

/// Computes spectra of `K(tau)` over `taus`, tracks eigenvalue paths and
/// classifies them. The operator must use a tau-scaled flux (penalty or
/// component-wise Lax-Friedrichs).
pub fn sweep(op: &DGOperator, taus: &[f64], opts: &SweepOptions) -> Result<SpectrumSweep> {
    if taus.len() < 2 {
        return Err(Error::InsufficientTauRange(format!(
            "a sweep needs at least 2 samples, got {}",
            taus.len()
        )));
    }
    for w in taus.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!(
                "tau samples must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if taus[0] < 0.0 || !taus.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidArgument("tau samples must be finite and nonnegative".into()));
    }
    if !op.config.flux.kind.is_tau_scaled() {
        return Err(Error::InvalidArgument(format!(
            "sweeps need a tau-scaled flux, got {}",
            op.config.flux.kind
        )));
    }
    let split = conforming::build_conforming_split(op)?;
    let l = op.mass_cholesky()?;
    let hc = spectral::symmetrized_operator(&op.k_central, &l);
    let hp = spectral::symmetrized_operator(&op.k_penalty, &l);
    let solver = AffineEigen { hc, hp };

    let eigenvalues: Vec<Vec<c64>> = if opts.parallel {
        taus.par_iter().map(|&t| solver.eigenvalues(t)).collect::<Result<_>>()?
    } else {
        taus.iter().map(|&t| solver.eigenvalues(t)).collect::<Result<_>>()?
    };
    let rho0 = if taus[0] == 0.0 {
        spectral::spectral_radius(&eigenvalues[0])
    } else {
        spectral::spectral_radius(&solver.eigenvalues(0.0)?)
    };
    let mut samples: Vec<(f64, Vec<c64>)> = taus.iter().copied().zip(eigenvalues).collect();

    let n = op.n_dofs();
    let mut unresolved = Vec::new();
    let paths = if opts.track {
        let links = track(&mut samples, &solver, opts, &mut unresolved)?;
        chain_links(n, &links)
    } else {
        (0..n).map(|p| vec![p; samples.len()]).collect()
    };

    let (taus, eigenvalues): (Vec<f64>, Vec<Vec<c64>>) = samples.into_iter().unzip();
    let mut out = SpectrumSweep {
        taus,
        eigenvalues,
        paths,
        classification: Vec::new(),
        unresolved,
        n_c: split.n_c(),
        n_nc: split.n_nc(),
        rho0,
    };
    out.classification = classify(&out, opts.classification);
    Ok(out)
}

/// `L^{-1} K(tau) L^{-T} = H_c + tau H_p`.
struct AffineEigen {
    hc: Mat<f64>,
    hp: Mat<f64>,
}

impl AffineEigen {
    fn eigenvalues(&self, tau: f64) -> Result<Vec<c64>> {
        let n = self.hc.nrows();
        let h = Mat::from_fn(n, n, |i, j| self.hc[(i, j)] + tau * self.hp[(i, j)]);
        spectral::eigenvalues_symmetrized(&h)
            .map_err(|e| Error::EigenSolver(format!("{e} (tau = {tau})")))
    }
}

fn track(
    samples: &mut Vec<(f64, Vec<c64>)>,
    solver: &AffineEigen,
    opts: &SweepOptions,
    unresolved: &mut Vec<[f64; 2]>,
) -> Result<Vec<Vec<usize>>> {
    let mut links: Vec<Vec<usize>> = Vec::with_capacity(samples.len());
    let mut is_input = vec![true; samples.len()];
    let mut spent = 0;
    let mut i = 0;
    while i + 1 < samples.len() {
        let (ta, tb) = (samples[i].0, samples[i + 1].0);
        let scale = spectral::spectral_radius(&samples[i].1)
            .max(spectral::spectral_radius(&samples[i + 1].1))
            .max(1.0);
        // Linear predictor from the previous link.
        let predicted: Vec<c64> = match (i.checked_sub(1), links.last()) {
            (Some(prev), Some(link)) => {
                let tp = samples[prev].0;
                let ratio = (tb - ta) / (ta - tp);
                let mut out = samples[i].1.clone();
                for (q, &ia) in link.iter().enumerate() {
                    let a = samples[i].1[ia];
                    out[ia] = a + (a - samples[prev].1[q]) * ratio;
                }
                out
            }
            _ => samples[i].1.clone(),
        };
        let (perm, ambiguous) = greedy_match(&predicted, &samples[i + 1].1, opts.coincidence_tol * scale);
        if ambiguous {
            if 0.5 * (tb - ta) >= opts.min_step && spent < opts.max_refinements {
                let mid = 0.5 * (ta + tb);
                let ev = solver.eigenvalues(mid)?;
                samples.insert(i + 1, (mid, ev));
                is_input.insert(i + 1, false);
                spent += 1;
                continue;
            }
            match unresolved.last_mut() {
                Some(last) if last[1] == ta => last[1] = tb,
                _ => unresolved.push([ta, tb]),
            }
        }
        links.push(perm);
        if is_input[i + 1] {
            spent = 0;
        }
        i += 1;
    }
    Ok(links)
}

fn chain_links(n: usize, links: &[Vec<usize>]) -> Vec<Vec<usize>> {
    (0..n)
        .map(|p| {
            let mut path = Vec::with_capacity(links.len() + 1);
            let mut cur = p;
            path.push(cur);
            for l in links {
                cur = l[cur];
                path.push(cur);
            }
            path
        })
        .collect()
}

/// Greedy nearest-neighbour matching from `a` to `b`. Returns `perm` with
/// `a[i] -> b[perm[i]]` and whether any assignment was ambiguous: its distance
/// exceeds half the distance to the nearest distinguishable alternative.
pub fn greedy_match(a: &[c64], b: &[c64], coincide: f64) -> (Vec<usize>, bool) {
    let n = a.len();
    assert_eq!(n, b.len(), "matched spectra must have equal length");
    const NEAREST: usize = 8;
    let mut candidates: Vec<Vec<(f64, usize)>> = a
        .iter()
        .map(|&z| {
            let mut d: Vec<(f64, usize)> = b.iter().enumerate().map(|(j, &w)| ((z - w).norm(), j)).collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d
        })
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * NEAREST.min(n));
    for (i, c) in candidates.iter().enumerate() {
        for &(d, j) in c.iter().take(NEAREST) {
            pairs.push((d, i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for &(_, i, j) in &pairs {
        if perm[i] == usize::MAX && !taken[j] {
            perm[i] = j;
            taken[j] = true;
        }
    }
    // Anything left over falls back to the full candidate lists.
    for i in 0..n {
        if perm[i] == usize::MAX {
            let j = candidates[i].iter().find(|&&(_, j)| !taken[j]).map(|&(_, j)| j).unwrap_or(0);
            perm[i] = j;
            taken[j] = true;
        }
    }

    let mut ambiguous = false;
    for i in 0..n {
        let d1 = (a[i] - b[perm[i]]).norm();
        if d1 <= coincide {
            continue;
        }
        let c = &mut candidates[i];
        let chosen = b[perm[i]];
        let alt = c
            .iter()
            .filter(|&&(_, j)| (b[j] - chosen).norm() > coincide)
            .map(|&(d, _)| d)
            .next()
            .unwrap_or(f64::INFINITY);
        if d1 > 0.5 * alt {
            ambiguous = true;
            break;
        }
    }
    (perm, ambiguous)
}

fn classify(sw: &SpectrumSweep, rule: ClassificationRule) -> Vec<PathClass> {
    let n = sw.n_paths();
    let last = sw.taus.len() - 1;
    let end_re: Vec<f64> = (0..n).map(|p| sw.value(p, last).re).collect();
    // Real part must still be falling over the last quarter of the tau range.
    let quarter = {
        let target = sw.taus[0] + 0.75 * (sw.tau_max() - sw.taus[0]);
        sw.taus.iter().position(|&t| t >= target).unwrap_or(last).min(last.saturating_sub(1))
    };
    let falling = |p: usize| sw.value(p, last).re < sw.value(p, quarter).re;
    let mut out = vec![PathClass::ConformingLimit; n];
    match rule {
        ClassificationRule::SplitCount => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| end_re[x].total_cmp(&end_re[y]).then(x.cmp(&y)));
            for &p in order.iter().take(sw.n_nc) {
                out[p] = if falling(p) {
                    PathClass::Divergent
                } else {
                    PathClass::Unclassified
                };
            }
        }
        ClassificationRule::SpectralRadius { factor } => {
            for p in 0..n {
                if end_re[p] < -factor * sw.rho0 {
                    out[p] = if falling(p) {
                        PathClass::Divergent
                    } else {
                        PathClass::Unclassified
                    };
                }
            }
        }
    }
    out
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergentRate {
    pub path: usize,
    pub slope: f64,
    pub s_eigenvalue: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRate {
    pub path: usize,
    /// Log-log slope of the distance to the nearest eigenvalue of `A`;
    /// `None` when the path sits on it to round-off over the whole range.
    pub slope: Option<f64>,
    pub final_distance: f64,
    pub target_re: f64,
    pub target_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub tau_range: [f64; 2],
    pub n_divergent: usize,
    pub n_conforming: usize,
    pub n_s_eigenvalues: usize,
    pub divergent: Vec<DivergentRate>,
    pub conforming: Vec<ConvergenceRate>,
    pub max_slope_error: f64,
    /// Range of the fitted convergence slopes (paths with a defined slope).
    pub convergence_slope_range: [f64; 2],
    pub max_final_distance: f64,
    pub divergence_ok: bool,
    pub convergence_ok: bool,
}

/// Divergent slopes must match eigenvalues of `S` within this relative error.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Accepted interval for the conforming-limit log-log slope.
pub const CONVERGENCE_SLOPE_RANGE: [f64; 2] = [-1.3, -0.7];

/// Fits divergence slopes over the top decade of the sweep and convergence
/// slopes over the whole sweep.
pub fn verify_lemma_rates(sw: &SpectrumSweep, blocks: &BlockDecomposition) -> Result<LemmaReport> {
    let tau_max = sw.tau_max();
    let tau_min = sw.taus[0];
    if !(tau_min > 0.0) || tau_max < 10.0 * tau_min {
        return Err(Error::InsufficientTauRange(format!(
            "need at least one decade of positive tau, got [{tau_min}, {tau_max}]"
        )));
    }
    let top: Vec<usize> = (0..sw.taus.len()).filter(|&s| sw.taus[s] >= tau_max / 10.0 * (1.0 - 1e-12)).collect();
    if top.len() < 3 {
        return Err(Error::InsufficientTauRange(format!(
            "only {} samples in the top decade",
            top.len()
        )));
    }
    let mut s_eig = blocks.s_eigenvalues()?;
    s_eig.sort_by(f64::total_cmp);

    let mut divergent: Vec<DivergentRate> = (0..sw.n_paths())
        .filter(|&p| sw.classification[p] == PathClass::Divergent)
        .map(|p| {
            let x: Vec<f64> = top.iter().map(|&s| sw.taus[s]).collect();
            let y: Vec<f64> = top.iter().map(|&s| sw.value(p, s).re).collect();
            DivergentRate {
                path: p,
                slope: fit_slope(&x, &y),
                s_eigenvalue: f64::NAN,
                rel_error: f64::NAN,
            }
        })
        .collect();
    divergent.sort_by(|a, b| a.slope.total_cmp(&b.slope).then(a.path.cmp(&b.path)));
    for (d, &s) in divergent.iter_mut().zip(&s_eig) {
        d.s_eigenvalue = s;
        d.rel_error = ((d.slope - s) / s).abs();
    }
    let max_slope_error = divergent
        .iter()
        .map(|d| if d.rel_error.is_nan() { f64::INFINITY } else { d.rel_error })
        .fold(0.0, f64::max);

    let a_eig = conforming::conforming_spectrum(blocks)?;
    let scale = sw.rho0.max(1.0);
    let log_tau: Vec<f64> = sw.taus.iter().map(|t| t.ln()).collect();
    let conforming: Vec<ConvergenceRate> = (0..sw.n_paths())
        .filter(|&p| sw.classification[p] == PathClass::ConformingLimit)
        .map(|p| {
            let vals = sw.path_values(p);
            let last = *vals.last().unwrap();
            let target = nearest(&a_eig, last);
            let d: Vec<f64> = vals.iter().map(|&z| (z - target).norm()).collect();
            let final_distance = *d.last().unwrap();
            let dmax = d.iter().copied().fold(0.0, f64::max);
            let slope = if dmax < 1e-9 * scale {
                None
            } else {
                let y: Vec<f64> = d.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
                Some(fit_slope(&log_tau, &y))
            };
            ConvergenceRate {
                path: p,
                slope,
                final_distance,
                target_re: target.re,
                target_im: target.im,
            }
        })
        .collect();
    let slopes: Vec<f64> = conforming.iter().filter_map(|c| c.slope).collect();
    let convergence_slope_range = [
        slopes.iter().copied().fold(f64::INFINITY, f64::min),
        slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ];
    let max_final_distance = conforming.iter().map(|c| c.final_distance).fold(0.0, f64::max);

    let n_divergent = divergent.len();
    let n_conforming = conforming.len();
    let divergence_ok = n_divergent == s_eig.len() && max_slope_error <= SLOPE_TOLERANCE;
    let convergence_ok = n_conforming == blocks.n_c()
        && slopes
            .iter()
            .all(|&s| (CONVERGENCE_SLOPE_RANGE[0]..=CONVERGENCE_SLOPE_RANGE[1]).contains(&s));
    Ok(LemmaReport {
        tau_range: [tau_min, tau_max],
        n_divergent,
        n_conforming,
        n_s_eigenvalues: s_eig.len(),
        divergent,
        conforming,
        max_slope_error,
        convergence_slope_range,
        max_final_distance,
        divergence_ok,
        convergence_ok,
    })
}

fn nearest(set: &[c64], z: c64) -> c64 {
    set.iter()
        .copied()
        .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
        .unwrap_or(z)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturningMode {
    pub path: usize,
    pub tau_peak: f64,
    pub re_peak: f64,
    pub re_end: f64,
    pub im_end: f64,
    pub ratio: f64,
}

/// Conforming-limit paths whose damping at some interior `tau` of `window`
/// exceeds `factor` times the damping at the window's upper end.
pub fn find_returning_modes(sw: &SpectrumSweep, window: [f64; 2], factor: f64) -> Vec<ReturningMode> {
    let end = sw.nearest_sample(window[1]);
    let floor = 1e-8 * sw.rho0.max(1.0);
    let mut out = Vec::new();
    for p in 0..sw.n_paths() {
        if sw.classification[p] != PathClass::ConformingLimit {
            continue;
        }
        let re_end = sw.value(p, end).re;
        let mut peak = (0.0f64, 0usize);
        for s in 0..end {
            let t = sw.taus[s];
            if t > window[0] && t < window[1] {
                let r = sw.value(p, s).re.abs();
                if r > peak.0 {
                    peak = (r, s);
                }
            }
        }
        if peak.0 > floor && peak.0 >= factor * re_end.abs() {
            out.push(ReturningMode {
                path: p,
                tau_peak: sw.taus[peak.1],
                re_peak: sw.value(p, peak.1).re,
                re_end,
                im_end: sw.value(p, end).im,
                ratio: if re_end == 0.0 { f64::INFINITY } else { peak.0 / re_end.abs() },
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub coefficients: Vec<c64>,
    /// `Re(lambda_j)` of the basis eigenvalue paired with each coefficient.
    pub damping: Vec<f64>,
    pub eigenvalues: Vec<c64>,
    pub residual: f64,
    pub condition: f64,
}

impl ModalExpansion {
    /// Indices of coefficients with magnitude above `threshold`, largest first.
    pub fn significant(&self, threshold: f64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j].norm() > threshold)
            .collect();
        idx.sort_by(|&a, &b| self.coefficients[b].norm().total_cmp(&self.coefficients[a].norm()).then(a.cmp(&b)));
        idx
    }
}

/// Largest eigenvector-matrix condition number accepted by [`expand_in_basis`].
pub const EXPANSION_CONDITION_CAP: f64 = 1e10;

/// Solves `V c = v` for the eigenvector matrix `V` of `basis`.
pub fn expand_in_basis(v: &[c64], basis: &Spectrum) -> Result<ModalExpansion> {
    let n = basis.eigenvectors.nrows();
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, basis has {n} rows",
            v.len()
        )));
    }
    let condition = linalg::condition_number_complex(basis.eigenvectors.as_ref())?;
    if !(condition <= EXPANSION_CONDITION_CAP) {
        return Err(Error::NearDefective(condition));
    }
    let rhs = Mat::from_fn(n, 1, |i, _| v[i]);
    let c = linalg::solve_complex(basis.eigenvectors.as_ref(), rhs.as_ref());
    let back = &basis.eigenvectors * &c;
    let vn = linalg::norm_complex(v).max(f64::MIN_POSITIVE);
    let residual = (0..n).map(|i| (back[(i, 0)] - v[i]).norm_sqr()).sum::<f64>().sqrt() / vn;
    Ok(ModalExpansion {
        coefficients: (0..n).map(|i| c[(i, 0)]).collect(),
        damping: basis.eigenvalues.iter().map(|z| z.re).collect(),
        eigenvalues: basis.eigenvalues.clone(),
        residual,
        condition,
    })
}

/// A conforming-limit eigenvector at the end of a sweep that was strongly
/// damped at intermediate tau.
#[derive(Debug, Clone)]
pub struct SpuriousMode {
    pub tau: f64,
    pub eigenvalue: c64,
    pub index: usize,
    pub returning: ReturningMode,
}

/// Locates the returning mode of `sw` with the strongest intermediate damping and its
/// index in the spectrum `spec` (computed at the sweep's final tau).
pub fn select_spurious_mode(sw: &SpectrumSweep, spec: &Spectrum, window: [f64; 2], factor: f64) -> Option<SpuriousMode> {
    let modes = find_returning_modes(sw, window, factor);
    let best = modes
        .into_iter()
        .filter(|m| m.im_end >= 0.0)
        .max_by(|a, b| a.re_peak.abs().total_cmp(&b.re_peak.abs()).then(b.path.cmp(&a.path)))?;
    let target = c64::new(best.re_end, best.im_end);
    let index = (0..spec.len()).min_by(|&a, &b| {
        (spec.eigenvalues[a] - target)
            .norm()
            .total_cmp(&(spec.eigenvalues[b] - target).norm())
    })?;
    Some(SpuriousMode {
        tau: spec.tau,
        eigenvalue: spec.eigenvalues[index],
        index,
        returning: best,
    })
}
