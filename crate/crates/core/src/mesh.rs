//! Uniform interval meshes and bisected-quadrilateral triangle meshes with
//! face connectivity, outward normals and periodic pairing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Periodic,
    /// Physical boundary faces, closed by a reflecting (rigid wall) ghost state.
    #[serde(alias = "bounded", alias = "reflective")]
    Wall,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "wall" | "bounded" | "reflective" => Ok(Self::Wall),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary condition {other:?} (expected periodic|wall)"
            ))),
        }
    }
}

/// How the neighbour traverses a shared face relative to the owning element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Aligned,
    Reversed,
}

impl Orientation {
    /// Maps the owner's face-node index to the neighbour's face-node index.
    pub fn permutation(self, n_face_nodes: usize) -> Vec<usize> {
        match self {
            Orientation::Aligned => (0..n_face_nodes).collect(),
            Orientation::Reversed => (0..n_face_nodes).rev().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FaceNeighbor {
    Interior {
        element: usize,
        local_face: usize,
        orientation: Orientation,
        /// Translation taking owner-side points to neighbour-side points
        /// (nonzero only across periodic identifications).
        shift: [f64; 2],
    },
    Boundary {
        tag: String,
    },
}

/// A mesh face seen from its owning element (the `-` side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub element: usize,
    pub local_face: usize,
    pub neighbor: FaceNeighbor,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        matches!(self.neighbor, FaceNeighbor::Interior { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub bc: BoundaryCondition,
    /// Domain box `[[xmin, xmax], [ymin, ymax]]`; the y-range is zero in 1D.
    pub domain: [[f64; 2]; 2],
    pub vertices: Vec<[f64; 2]>,
    /// Vertex indices per element (counter-clockwise for triangles).
    pub elements: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    /// Global face index for each `(element, local_face)`.
    pub element_faces: Vec<Vec<usize>>,
    /// Outward unit normal for each `(element, local_face)`.
    pub normals: Vec<Vec<[f64; 2]>>,
    /// Determinant of the affine reference-to-physical map per element.
    pub jacobians: Vec<f64>,
    /// `d(ref_dir)/d(phys_dir)` per element, indexed `[ref][phys]`.
    pub inverse_jacobians: Vec<[[f64; 2]; 2]>,
    /// Face measure per unit face parameter, for each `(element, local_face)`.
    pub face_jacobians: Vec<Vec<f64>>,
    /// Vertex id after periodic identification (equals the index otherwise).
    pub topological_vertex: Vec<usize>,
}

/// Uniform 1D mesh of `n_elements` intervals on `[a, b]`.
pub fn build_mesh_1d(n_elements: usize, domain: [f64; 2], bc: BoundaryCondition) -> Result<Mesh> {
    let [a, b] = domain;
    if n_elements == 0 {
        return Err(Error::InvalidArgument("n_elements must be at least 1".into()));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    let h = (b - a) / n_elements as f64;
    let vertices: Vec<[f64; 2]> = (0..=n_elements)
        .map(|i| {
            let x = if i == n_elements { b } else { a + i as f64 * h };
            [x, 0.0]
        })
        .collect();
    let elements: Vec<Vec<usize>> = (0..n_elements).map(|k| vec![k, k + 1]).collect();

    let mut faces = Vec::new();
    let mut element_faces = vec![vec![usize::MAX; 2]; n_elements];
    for k in 0..n_elements.saturating_sub(1) {
        element_faces[k][1] = faces.len();
        element_faces[k + 1][0] = faces.len();
        faces.push(Face {
            element: k,
            local_face: 1,
            neighbor: FaceNeighbor::Interior {
                element: k + 1,
                local_face: 0,
                orientation: Orientation::Aligned,
                shift: [0.0, 0.0],
            },
        });
    }
    let last = n_elements - 1;
    match bc {
        BoundaryCondition::Periodic => {
            element_faces[last][1] = faces.len();
            element_faces[0][0] = faces.len();
            faces.push(Face {
                element: last,
                local_face: 1,
                neighbor: FaceNeighbor::Interior {
                    element: 0,
                    local_face: 0,
                    orientation: Orientation::Aligned,
                    shift: [a - b, 0.0],
                },
            });
        }
        BoundaryCondition::Wall => {
            element_faces[0][0] = faces.len();
            faces.push(Face {
                element: 0,
                local_face: 0,
                neighbor: FaceNeighbor::Boundary { tag: "left".into() },
            });
            element_faces[last][1] = faces.len();
            faces.push(Face {
                element: last,
                local_face: 1,
                neighbor: FaceNeighbor::Boundary { tag: "right".into() },
            });
        }
    }

    let mut topological_vertex: Vec<usize> = (0..=n_elements).collect();
    if bc == BoundaryCondition::Periodic {
        topological_vertex[n_elements] = 0;
    }

    Ok(Mesh {
        dim: 1,
        bc,
        domain: [[a, b], [0.0, 0.0]],
        vertices,
        faces,
        element_faces,
        normals: vec![vec![[-1.0, 0.0], [1.0, 0.0]]; n_elements],
        jacobians: vec![0.5 * h; n_elements],
        inverse_jacobians: vec![[[2.0 / h, 0.0], [0.0, 0.0]]; n_elements],
        face_jacobians: vec![vec![1.0, 1.0]; n_elements],
        elements,
        topological_vertex,
    })
}

/// Uniform `nx × ny` quadrilateral grid on `[a,b]×[c,d]`, each quad split along
/// its lower-left to upper-right diagonal.
pub fn build_mesh_2d_bisected(
    nx: usize,
    ny: usize,
    domain: [[f64; 2]; 2],
    bc: BoundaryCondition,
) -> Result<Mesh> {
    let [[a, b], [c, d]] = domain;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("nx and ny must be at least 1".into()));
    }
    if !(a < b && c < d) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "degenerate domain [{a}, {b}] x [{c}, {d}]"
        )));
    }
    let hx = (b - a) / nx as f64;
    let hy = (d - c) / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut grid = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { b } else { a + i as f64 * hx };
            let y = if j == ny { d } else { c + j as f64 * hy };
            vertices.push([x, y]);
            grid.push((i, j));
        }
    }
    let periodic = bc == BoundaryCondition::Periodic;
    let topological_vertex: Vec<usize> = grid
        .iter()
        .map(|&(i, j)| {
            if periodic {
                (j % ny) * (nx + 1) + (i % nx)
            } else {
                vid(i, j)
            }
        })
        .collect();

    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            elements.push(vec![v00, v10, v11]);
            elements.push(vec![v00, v11, v01]);
        }
    }

    let n_el = elements.len();
    let mut normals = vec![vec![[0.0; 2]; 3]; n_el];
    let mut face_jacobians = vec![vec![0.0; 3]; n_el];
    let mut jacobians = vec![0.0; n_el];
    let mut inverse_jacobians = vec![[[0.0; 2]; 2]; n_el];
    for (k, el) in elements.iter().enumerate() {
        let p: Vec<[f64; 2]> = el.iter().map(|&v| vertices[v]).collect();
        let xr = 0.5 * (p[1][0] - p[0][0]);
        let xs = 0.5 * (p[2][0] - p[0][0]);
        let yr = 0.5 * (p[1][1] - p[0][1]);
        let ys = 0.5 * (p[2][1] - p[0][1]);
        let jac = xr * ys - xs * yr;
        jacobians[k] = jac;
        inverse_jacobians[k] = [[ys / jac, -xs / jac], [-yr / jac, xr / jac]];
        for f in 0..3 {
            let (s, e) = (p[f], p[(f + 1) % 3]);
            let (dx, dy) = (e[0] - s[0], e[1] - s[1]);
            let len = (dx * dx + dy * dy).sqrt();
            normals[k][f] = [dy / len, -dx / len];
            face_jacobians[k][f] = 0.5 * len;
        }
    }

    // Edges are keyed by their midpoint in half-cell units, wrapped when periodic.
    let key_of = |k: usize, f: usize| -> (usize, usize) {
        let el = &elements[k];
        let (i0, j0) = grid[el[f]];
        let (i1, j1) = grid[el[(f + 1) % 3]];
        let (mut sx, mut sy) = (i0 + i1, j0 + j1);
        if periodic {
            sx %= 2 * nx;
            sy %= 2 * ny;
        }
        (sx, sy)
    };

    let mut pending: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut faces = Vec::new();
    let mut element_faces = vec![vec![usize::MAX; 3]; n_el];
    for k in 0..n_el {
        for f in 0..3 {
            let key = key_of(k, f);
            if let Some((k0, f0)) = pending.remove(&key) {
                let e0 = &elements[k0];
                let (a0, b0) = (vertices[e0[f0]], vertices[e0[(f0 + 1) % 3]]);
                let e1 = &elements[k];
                let (a1, b1) = (vertices[e1[f]], vertices[e1[(f + 1) % 3]]);
                let shift = [
                    0.5 * (a1[0] + b1[0]) - 0.5 * (a0[0] + b0[0]),
                    0.5 * (a1[1] + b1[1]) - 0.5 * (a0[1] + b0[1]),
                ];
                let close = |p: [f64; 2], q: [f64; 2]| {
                    (p[0] + shift[0] - q[0]).abs() + (p[1] + shift[1] - q[1]).abs() < 1e-12 * (1.0 + hx + hy)
                };
                let orientation = if close(a0, a1) && close(b0, b1) {
                    Orientation::Aligned
                } else if close(a0, b1) && close(b0, a1) {
                    Orientation::Reversed
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "edge matching failed between element {k0} face {f0} and element {k} face {f}"
                    )));
                };
                let shift = [snap_zero(shift[0], hx), snap_zero(shift[1], hy)];
                element_faces[k0][f0] = faces.len();
                element_faces[k][f] = faces.len();
                faces.push(Face {
                    element: k0,
                    local_face: f0,
                    neighbor: FaceNeighbor::Interior {
                        element: k,
                        local_face: f,
                        orientation,
                        shift,
                    },
                });
            } else {
                pending.insert(key, (k, f));
            }
        }
    }
    let mut leftovers: Vec<(usize, usize)> = pending.into_values().collect();
    leftovers.sort_unstable();
    for (k, f) in leftovers {
        if periodic {
            return Err(Error::InvalidArgument(format!(
                "periodic mesh left element {k} face {f} unmatched"
            )));
        }
        let n = normals[k][f];
        let tag = if n[0] < -0.5 {
            "left"
        } else if n[0] > 0.5 {
            "right"
        } else if n[1] < -0.5 {
            "bottom"
        } else {
            "top"
        };
        element_faces[k][f] = faces.len();
        faces.push(Face {
            element: k,
            local_face: f,
            neighbor: FaceNeighbor::Boundary { tag: tag.into() },
        });
    }

    Ok(Mesh {
        dim: 2,
        bc,
        domain,
        vertices,
        elements,
        faces,
        element_faces,
        normals,
        jacobians,
        inverse_jacobians,
        face_jacobians,
        topological_vertex,
    })
}

fn snap_zero(v: f64, h: f64) -> f64 {
    if v.abs() < 1e-12 * h {
        0.0
    } else {
        v
    }
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.n_interior_faces()
    }

    /// Number of distinct vertices after periodic identification.
    pub fn n_topological_vertices(&self) -> usize {
        let mut ids = self.topological_vertex.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Physical coordinates of a reference point inside element `k`.
    pub fn map_to_physical(&self, k: usize, p: [f64; 2]) -> [f64; 2] {
        let el = &self.elements[k];
        match self.dim {
            1 => {
                let (x0, x1) = (self.vertices[el[0]][0], self.vertices[el[1]][0]);
                [x0 + 0.5 * (1.0 + p[0]) * (x1 - x0), 0.0]
            }
            _ => {
                let (v0, v1, v2) = (self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]);
                let (w0, w1, w2) = (-0.5 * (p[0] + p[1]), 0.5 * (1.0 + p[0]), 0.5 * (1.0 + p[1]));
                [
                    w0 * v0[0] + w1 * v1[0] + w2 * v2[0],
                    w0 * v0[1] + w1 * v1[1] + w2 * v2[1],
                ]
            }
        }
    }

    /// Signed element measure (length or area).
    pub fn element_measure(&self, k: usize) -> f64 {
        // both reference elements have measure 2
        2.0 * self.jacobians[k]
    }

    /// Length (2D) or unit point measure (1D) of face `f` of element `k`.
    pub fn face_measure(&self, k: usize, f: usize) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            2.0 * self.face_jacobians[k][f]
        }
    }

    pub fn domain_measure(&self) -> f64 {
        let [[a, b], [c, d]] = self.domain;
        if self.dim == 1 {
            b - a
        } else {
            (b - a) * (d - c)
        }
    }

    /// The `(element, local_face)` on the other side of `(k, f)`, if interior.
    pub fn neighbor_of(&self, k: usize, f: usize) -> Option<(usize, usize)> {
        let face = &self.faces[self.element_faces[k][f]];
        match &face.neighbor {
            FaceNeighbor::Interior {
                element,
                local_face,
                ..
            } => {
                if face.element == k && face.local_face == f {
                    Some((*element, *local_face))
                } else {
                    Some((face.element, face.local_face))
                }
            }
            FaceNeighbor::Boundary { .. } => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_periodic_interval_is_its_own_neighbor() {
        let m = build_mesh_1d(1, [-1.0, 1.0], BoundaryCondition::Periodic).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.neighbor_of(0, 0), Some((0, 1)));
        assert_eq!(m.neighbor_of(0, 1), Some((0, 0)));
    }

    #[test]
    fn eight_periodic_intervals_have_eight_interior_faces() {
        let m = build_mesh_1d(8, [-1.0, 1.0], BoundaryCondition::Periodic).unwrap();
        assert_eq!(m.faces.len(), 8);
        assert_eq!(m.n_interior_faces(), 8);
    }

    #[test]
    fn bounded_intervals_tag_two_boundary_faces() {
        let m = build_mesh_1d(4, [-1.0, 1.0], BoundaryCondition::Wall).unwrap();
        assert_eq!(m.n_interior_faces(), 3);
        assert_eq!(m.n_boundary_faces(), 2);
    }

    #[test]
    fn rejects_empty_1d_inputs() {
        assert!(build_mesh_1d(0, [-1.0, 1.0], BoundaryCondition::Periodic).is_err());
        assert!(build_mesh_1d(3, [1.0, 1.0], BoundaryCondition::Periodic).is_err());
    }

    #[test]
    fn single_quad_wall() {
        let m = build_mesh_2d_bisected(1, 1, [[0.0, 1.0], [0.0, 1.0]], BoundaryCondition::Wall).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.n_interior_faces(), 1);
        assert_eq!(m.n_boundary_faces(), 4);
    }

    #[test]
    fn periodic_4x4_counts() {
        let m = build_mesh_2d_bisected(4, 4, [[-1.0, 1.0], [-1.0, 1.0]], BoundaryCondition::Periodic)
            .unwrap();
        assert_eq!(m.n_elements(), 32);
        assert_eq!(m.faces.len(), 48);
        assert_eq!(m.n_boundary_faces(), 0);
        assert_eq!(m.n_topological_vertices(), 16);
    }

    #[test]
    fn rejects_degenerate_2d_domain() {
        assert!(build_mesh_2d_bisected(2, 2, [[0.0, 0.0], [0.0, 1.0]], BoundaryCondition::Wall).is_err());
        assert!(build_mesh_2d_bisected(0, 2, [[0.0, 1.0], [0.0, 1.0]], BoundaryCondition::Wall).is_err());
    }

    #[test]
    fn bc_parses() {
        assert_eq!("bounded".parse::<BoundaryCondition>().unwrap(), BoundaryCondition::Wall);
        assert!("open".parse::<BoundaryCondition>().is_err());
    }
}
