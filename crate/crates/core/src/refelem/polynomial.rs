//! Orthonormal Jacobi polynomials and the modal bases built from them.
//!
//! The interval basis is the normalized Legendre family; the triangle basis is
//! the collapsed-coordinate (Dubiner) family, orthonormal on the reference
//! triangle with vertices (-1,-1), (1,-1), (-1,1).

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Gamma function at a positive integer argument.
fn gamma_int(x: f64) -> f64 {
    debug_assert!(x >= 1.0 && x.fract() == 0.0);
    factorial(x as u32 - 1)
}

/// Orthonormal Jacobi polynomial `P_n^{(alpha,beta)}(x)` for integer `alpha`, `beta`.
pub fn jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let ab = alpha + beta;
    let gamma0 = 2f64.powf(ab + 1.0) / (ab + 1.0) * gamma_int(alpha + 1.0) * gamma_int(beta + 1.0)
        / gamma_int(ab + 1.0);
    let p0 = 1.0 / gamma0.sqrt();
    if n == 0 {
        return p0;
    }
    let gamma1 = (alpha + 1.0) * (beta + 1.0) / (ab + 3.0) * gamma0;
    let p1 = ((ab + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return p1;
    }

    let mut a_old = 2.0 / (2.0 + ab) * ((alpha + 1.0) * (beta + 1.0) / (ab + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + ab;
        let a_new = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + ab) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let next = (-a_old * pm1 + (x - b_new) * p) / a_new;
        pm1 = p;
        p = next;
        a_old = a_new;
    }
    p
}

/// Derivative of [`jacobi_p`] with respect to `x`.
pub fn grad_jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + alpha + beta + 1.0)).sqrt() * jacobi_p(x, alpha + 1.0, beta + 1.0, n - 1)
}

/// Orthonormal Legendre mode `j` on [-1, 1].
pub fn legendre(x: f64, j: usize) -> f64 {
    jacobi_p(x, 0.0, 0.0, j)
}

pub fn grad_legendre(x: f64, j: usize) -> f64 {
    grad_jacobi_p(x, 0.0, 0.0, j)
}

/// Collapsed coordinates `(a, b)` of a point `(r, s)` in the reference triangle.
fn rs_to_ab(r: f64, s: f64) -> (f64, f64) {
    let a = if (s - 1.0).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

/// Index pairs `(i, j)` of the triangle modes, ordered as in the Vandermonde columns.
pub fn simplex_mode_indices(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for i in 0..=degree {
        for j in 0..=(degree - i) {
            out.push((i, j));
        }
    }
    out
}

/// Orthonormal triangle mode `(i, j)` evaluated at `(r, s)`.
pub fn simplex_2d(r: f64, s: f64, i: usize, j: usize) -> f64 {
    let (a, b) = rs_to_ab(r, s);
    let h1 = jacobi_p(a, 0.0, 0.0, i);
    let h2 = jacobi_p(b, 2.0 * i as f64 + 1.0, 0.0, j);
    std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32)
}

/// Gradient `(d/dr, d/ds)` of [`simplex_2d`].
pub fn grad_simplex_2d(r: f64, s: f64, i: usize, j: usize) -> (f64, f64) {
    let (a, b) = rs_to_ab(r, s);
    let alpha2 = 2.0 * i as f64 + 1.0;
    let fa = jacobi_p(a, 0.0, 0.0, i);
    let dfa = grad_jacobi_p(a, 0.0, 0.0, i);
    let gb = jacobi_p(b, alpha2, 0.0, j);
    let dgb = grad_jacobi_p(b, alpha2, 0.0, j);
    let half_1mb = 0.5 * (1.0 - b);

    let mut dr = dfa * gb;
    let mut ds = dfa * (gb * 0.5 * (1.0 + a));
    if i > 0 {
        let w = half_1mb.powi(i as i32 - 1);
        dr *= w;
        ds *= w;
    }
    let mut tmp = dgb * half_1mb.powi(i as i32);
    if i > 0 {
        tmp -= 0.5 * i as f64 * gb * half_1mb.powi(i as i32 - 1);
    }
    ds += fa * tmp;

    let scale = 2f64.powf(i as f64 + 0.5);
    (dr * scale, ds * scale)
}
