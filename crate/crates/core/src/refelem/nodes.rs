//! Interpolation node sets on the reference interval and triangle.

use serde::{Deserialize, Serialize};

/// Which family of interpolation nodes to place on the reference element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeFamily {
    /// Gauss-Lobatto-Legendre points (1D) and warp-and-blend points (2D).
    #[default]
    Optimized,
    /// Uniformly spaced points; same polynomial space, worse conditioning.
    Equispaced,
}

/// Legendre-Gauss-Lobatto points on [-1, 1], ascending.
pub fn gauss_lobatto(degree: usize) -> Vec<f64> {
    if degree == 0 {
        return vec![0.0];
    }
    let n = degree;
    let n1 = n + 1;
    let mut x: Vec<f64> = (0..n1)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let mut p = vec![vec![0.0; n1]; n1];
    for _ in 0..200 {
        let x_old = x.clone();
        for i in 0..n1 {
            p[i][0] = 1.0;
            p[i][1] = x[i];
            for k in 2..=n {
                p[i][k] = ((2 * k - 1) as f64 * x[i] * p[i][k - 1] - (k - 1) as f64 * p[i][k - 2])
                    / k as f64;
            }
            x[i] = x_old[i] - (x[i] * p[i][n] - p[i][n - 1]) / (n1 as f64 * p[i][n]);
        }
        let change = x
            .iter()
            .zip(&x_old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < 1e-16 {
            break;
        }
    }
    x.reverse();
    // Endpoints are exact by construction; clean up the interior for symmetry.
    x[0] = -1.0;
    x[n] = 1.0;
    for i in 0..n1 / 2 {
        let m = 0.5 * (x[n - i] - x[i]);
        x[i] = -m;
        x[n - i] = m;
    }
    if n1 % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x
}

pub fn equispaced(degree: usize) -> Vec<f64> {
    if degree == 0 {
        return vec![0.0];
    }
    (0..=degree)
        .map(|i| -1.0 + 2.0 * i as f64 / degree as f64)
        .collect()
}

pub fn interval_nodes(degree: usize, family: NodeFamily) -> Vec<f64> {
    match family {
        NodeFamily::Optimized => gauss_lobatto(degree),
        NodeFamily::Equispaced => equispaced(degree),
    }
}

/// Blend-optimized warp parameters for degrees 1..=15.
const ALPHA_OPT: [f64; 15] = [
    0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959,
    1.5743, 1.5770, 1.6223, 1.6258,
];

/// Evaluates the 1D warp function: the displacement from equispaced to
/// Gauss-Lobatto points, interpolated and divided by the edge bubble.
fn warp_factor(degree: usize, r: f64) -> f64 {
    let lgl = gauss_lobatto(degree);
    let eq = equispaced(degree);
    let mut warp = 0.0;
    for i in 0..=degree {
        let mut l = 1.0;
        for j in 0..=degree {
            if j != i {
                l *= (r - eq[j]) / (eq[i] - eq[j]);
            }
        }
        warp += l * (lgl[i] - eq[i]);
    }
    if r.abs() < 1.0 - 1e-10 {
        warp / (1.0 - r * r)
    } else {
        0.0
    }
}

/// Nodes on the reference triangle (-1,-1), (1,-1), (-1,1).
pub fn triangle_nodes(degree: usize, family: NodeFamily) -> Vec<[f64; 2]> {
    if degree == 0 {
        return vec![[-1.0 / 3.0, -1.0 / 3.0]];
    }
    let n = degree as f64;
    let alpha = match family {
        NodeFamily::Optimized if degree <= 15 => ALPHA_OPT[degree - 1],
        NodeFamily::Optimized => 5.0 / 3.0,
        NodeFamily::Equispaced => 0.0,
    };
    let sqrt3 = 3f64.sqrt();
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for i in 0..=degree {
        for j in 0..=(degree - i) {
            let l1 = i as f64 / n;
            let l3 = j as f64 / n;
            let l2 = 1.0 - l1 - l3;
            let mut x = -l2 + l3;
            let mut y = (-l2 - l3 + 2.0 * l1) / sqrt3;
            if family == NodeFamily::Optimized {
                let blend1 = 4.0 * l2 * l3;
                let blend2 = 4.0 * l1 * l3;
                let blend3 = 4.0 * l1 * l2;
                let w1 = blend1 * warp_factor(degree, l3 - l2) * (1.0 + (alpha * l1).powi(2));
                let w2 = blend2 * warp_factor(degree, l1 - l3) * (1.0 + (alpha * l2).powi(2));
                let w3 = blend3 * warp_factor(degree, l2 - l1) * (1.0 + (alpha * l3).powi(2));
                let (c2, s2) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
                let (c3, s3) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());
                x += w1 + c2 * w2 + c3 * w3;
                y += s2 * w2 + s3 * w3;
            }
            // equilateral -> reference right triangle
            let b1 = (sqrt3 * y + 1.0) / 3.0;
            let b2 = (-3.0 * x - sqrt3 * y + 2.0) / 6.0;
            let b3 = (3.0 * x - sqrt3 * y + 2.0) / 6.0;
            let mut r = -b2 + b3 - b1;
            let mut s = -b2 - b3 + b1;
            snap(&mut r);
            snap(&mut s);
            out.push([r, s]);
        }
    }
    out
}

fn snap(v: &mut f64) {
    for target in [-1.0, 0.0, 1.0] {
        if (*v - target).abs() < 1e-14 {
            *v = target;
        }
    }
}
