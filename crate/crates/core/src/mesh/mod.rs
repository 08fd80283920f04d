//! Voronoi/Delaunay C-grids in the TRiSK layout.
//!
//! Orientation conventions: the normal of edge `e` points from
//! `cells_on_edge[e][0]` to `cells_on_edge[e][1]`, so `n_eic` is `+1` for the
//! first cell and `-1` for the second. The tangent is `k x n`, and
//! `vertices_on_edge[e][1]` lies on its positive side, giving `t_ev = -1, +1`
//! for the two vertices. Cell edges are stored counter-clockwise and
//! `vertices_on_cell[k]` sits between `edges_on_cell[k]` and `edges_on_cell[k+1]`.
//! `edges_on_vertex[k]` joins `cells_on_vertex[k]` and `cells_on_vertex[k+1]`.

mod build;
mod io;
mod mask;
mod weights;

pub use build::{build_planar_hex_mesh, build_spherical_mesh};
pub use io::{load_mesh, mesh_from_container, mesh_to_container, save_mesh, save_mesh_text};
pub use mask::{apply_dry_mask, DryMask, LayerMask};
pub use weights::{compute_edge_weights, masked_edge_weights, weight_relation_residual};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    PlanarPeriodic { lx: f64, ly: f64 },
    Sphere { radius: f64 },
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::PlanarPeriodic { .. } => "planar-periodic",
            Geometry::Sphere { .. } => "sphere",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub geometry: Geometry,
    pub n_cells: usize,
    pub n_edges: usize,
    pub n_vertices: usize,
    /// Row stride of the per-cell arrays.
    pub max_edges: usize,
    /// Row stride of `edges_on_edge` and `w_ee`.
    pub max_edges_on_edge: usize,

    pub cell_center: Vec<[f64; 3]>,
    pub vertex_pos: Vec<[f64; 3]>,
    pub edge_pos: Vec<[f64; 3]>,
    /// Unit normal of each edge, derived from the geometry.
    pub edge_normal: Vec<[f64; 3]>,

    pub n_edges_on_cell: Vec<usize>,
    pub edges_on_cell: Vec<i32>,
    pub vertices_on_cell: Vec<i32>,
    pub cells_on_edge: Vec<[i32; 2]>,
    pub vertices_on_edge: Vec<[i32; 2]>,
    pub edges_on_vertex: Vec<[i32; 3]>,
    pub cells_on_vertex: Vec<[i32; 3]>,
    pub n_edges_on_edge: Vec<usize>,
    pub edges_on_edge: Vec<i32>,

    /// `n_{e,i}` aligned with `edges_on_cell` (0 in padding).
    pub n_eic: Vec<f64>,
    /// `t_{e,v}` aligned with `edges_on_vertex`.
    pub t_ev: Vec<[f64; 3]>,
    /// `n_{e,i}` aligned with `cells_on_edge`.
    pub n_on_edge: Vec<[f64; 2]>,
    /// `t_{e,v}` aligned with `vertices_on_edge`.
    pub t_on_edge: Vec<[f64; 2]>,

    pub a_i: Vec<f64>,
    pub a_v: Vec<f64>,
    pub a_e: Vec<f64>,
    pub l_e: Vec<f64>,
    pub d_e: Vec<f64>,
    /// Kite fractions `R_{i,v}` aligned with `cells_on_vertex`.
    pub r_iv: Vec<[f64; 3]>,
    pub w_ee: Vec<f64>,

    pub edge_is_boundary: Vec<bool>,
    pub cell_is_dry: Vec<bool>,
}

impl Mesh {
    pub fn cell_edges(&self, i: usize) -> &[i32] {
        let s = i * self.max_edges;
        &self.edges_on_cell[s..s + self.n_edges_on_cell[i]]
    }

    pub fn cell_vertices(&self, i: usize) -> &[i32] {
        let s = i * self.max_edges;
        &self.vertices_on_cell[s..s + self.n_edges_on_cell[i]]
    }

    pub fn cell_signs(&self, i: usize) -> &[f64] {
        let s = i * self.max_edges;
        &self.n_eic[s..s + self.n_edges_on_cell[i]]
    }

    pub fn edge_neighbors(&self, e: usize) -> (&[i32], &[f64]) {
        let s = e * self.max_edges_on_edge;
        let n = self.n_edges_on_edge[e];
        (&self.edges_on_edge[s..s + n], &self.w_ee[s..s + n])
    }

    /// Kite fraction of cell `i` at vertex `v`, zero if not adjacent.
    pub fn kite(&self, i: usize, v: usize) -> f64 {
        self.cells_on_vertex[v]
            .iter()
            .position(|&c| c == i as i32)
            .map_or(0.0, |k| self.r_iv[v][k])
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.geometry, Geometry::Sphere { .. })
    }

    pub fn is_boundaryless(&self) -> bool {
        !self.edge_is_boundary.iter().any(|&b| b)
    }

    /// Displacement `b - a` using the minimum image on periodic planes.
    pub fn displacement(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let mut d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        if let Geometry::PlanarPeriodic { lx, ly } = self.geometry {
            d[0] -= lx * (d[0] / lx).round();
            d[1] -= ly * (d[1] / ly).round();
        }
        d
    }

    /// Horizontal position used for analytic fields: `(x, y)` on the plane,
    /// `(longitude, latitude)` in radians on the sphere.
    pub fn horizontal(p: [f64; 3], geometry: Geometry) -> (f64, f64) {
        match geometry {
            Geometry::PlanarPeriodic { .. } => (p[0], p[1]),
            Geometry::Sphere { .. } => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                (p[1].atan2(p[0]), (p[2] / r).asin())
            }
        }
    }

    /// Check all structural invariants. Returns the first violation found.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMesh(m));
        let (nc, ne, nv) = (self.n_cells as i32, self.n_edges as i32, self.n_vertices as i32);
        let in_range = |x: i32, n: i32| x == -1 || (0..n).contains(&x);

        let lens = [
            (self.cell_center.len(), self.n_cells, "cell_center"),
            (self.vertex_pos.len(), self.n_vertices, "vertex_pos"),
            (self.edge_pos.len(), self.n_edges, "edge_pos"),
            (self.n_edges_on_cell.len(), self.n_cells, "n_edges_on_cell"),
            (self.edges_on_cell.len(), self.n_cells * self.max_edges, "edges_on_cell"),
            (self.vertices_on_cell.len(), self.n_cells * self.max_edges, "vertices_on_cell"),
            (self.n_eic.len(), self.n_cells * self.max_edges, "n_eic"),
            (self.cells_on_edge.len(), self.n_edges, "cells_on_edge"),
            (self.vertices_on_edge.len(), self.n_edges, "vertices_on_edge"),
            (self.edges_on_vertex.len(), self.n_vertices, "edges_on_vertex"),
            (self.cells_on_vertex.len(), self.n_vertices, "cells_on_vertex"),
            (self.t_ev.len(), self.n_vertices, "t_ev"),
            (self.r_iv.len(), self.n_vertices, "r_iv"),
            (self.a_i.len(), self.n_cells, "a_i"),
            (self.a_v.len(), self.n_vertices, "a_v"),
            (self.a_e.len(), self.n_edges, "a_e"),
            (self.l_e.len(), self.n_edges, "l_e"),
            (self.d_e.len(), self.n_edges, "d_e"),
            (self.n_edges_on_edge.len(), self.n_edges, "n_edges_on_edge"),
            (self.edges_on_edge.len(), self.n_edges * self.max_edges_on_edge, "edges_on_edge"),
            (self.w_ee.len(), self.n_edges * self.max_edges_on_edge, "w_ee"),
            (self.edge_is_boundary.len(), self.n_edges, "edge_is_boundary"),
            (self.cell_is_dry.len(), self.n_cells, "cell_is_dry"),
        ];
        for (got, want, name) in lens {
            if got != want {
                return bad(format!("{name} has length {got}, expected {want}"));
            }
        }

        for i in 0..self.n_cells {
            let n = self.n_edges_on_cell[i];
            if n > self.max_edges || n < 3 {
                return bad(format!("cell {i} has {n} edges"));
            }
            for (k, (&e, &s)) in self.cell_edges(i).iter().zip(self.cell_signs(i)).enumerate() {
                if !(0..ne).contains(&e) {
                    return bad(format!("edges_on_cell[{i}][{k}] = {e} out of range"));
                }
                let ce = self.cells_on_edge[e as usize];
                let j = match ce.iter().position(|&c| c == i as i32) {
                    Some(j) => j,
                    None => return bad(format!("cell {i} lists edge {e} which does not list it back")),
                };
                if s != self.n_on_edge[e as usize][j] || s.abs() != 1.0 {
                    return bad(format!("n_eic of cell {i}, edge {e} is {s}"));
                }
            }
            for &v in self.cell_vertices(i) {
                if !(0..nv).contains(&v) {
                    return bad(format!("vertices_on_cell of cell {i} out of range"));
                }
            }
        }

        for e in 0..self.n_edges {
            let [c0, c1] = self.cells_on_edge[e];
            let [v0, v1] = self.vertices_on_edge[e];
            if !in_range(c0, nc) || !in_range(c1, nc) || !in_range(v0, nv) || !in_range(v1, nv) {
                return bad(format!("edge {e} references an index out of range"));
            }
            let interior = c0 >= 0 && c1 >= 0;
            if !interior && !self.edge_is_boundary[e] {
                return bad(format!("edge {e} is missing a cell but not marked boundary"));
            }
            if interior {
                let [s0, s1] = self.n_on_edge[e];
                if s0 != -s1 || s0.abs() != 1.0 {
                    return bad(format!("edge {e} has normal signs {s0}, {s1}"));
                }
                let [t0, t1] = self.t_on_edge[e];
                if v0 < 0 || v1 < 0 || t0 != -t1 || t0.abs() != 1.0 {
                    return bad(format!("edge {e} has tangent signs {t0}, {t1}"));
                }
            }
            if !(self.l_e[e] > 0.0 && self.d_e[e] > 0.0 && self.a_e[e] > 0.0) {
                return bad(format!("edge {e} has non-positive length or area"));
            }
            let (eoe, _) = self.edge_neighbors(e);
            if eoe.iter().any(|&x| !(0..ne).contains(&x)) {
                return bad(format!("edges_on_edge of edge {e} out of range"));
            }
        }

        let mut kite_sum = vec![0.0; self.n_cells];
        for v in 0..self.n_vertices {
            for k in 0..3 {
                let c = self.cells_on_vertex[v][k];
                let e = self.edges_on_vertex[v][k];
                if !in_range(c, nc) || !in_range(e, ne) {
                    return bad(format!("vertex {v} references an index out of range"));
                }
                if e >= 0 {
                    let ve = self.vertices_on_edge[e as usize];
                    match ve.iter().position(|&x| x == v as i32) {
                        Some(j) if self.t_on_edge[e as usize][j] == self.t_ev[v][k] => {}
                        _ => return bad(format!("t_ev inconsistent at vertex {v}, edge {e}")),
                    }
                }
                if c >= 0 {
                    kite_sum[c as usize] += self.r_iv[v][k];
                }
            }
            if self.a_v[v] <= 0.0 {
                return bad(format!("vertex {v} has non-positive area"));
            }
        }
        for (i, s) in kite_sum.iter().enumerate() {
            if self.a_i[i] <= 0.0 {
                return bad(format!("cell {i} has non-positive area"));
            }
            if (s - 1.0).abs() > 1e-12 {
                return bad(format!("kite fractions of cell {i} sum to {s}"));
            }
        }

        if self.is_boundaryless() {
            let sum_i: f64 = self.a_i.iter().sum();
            let sum_v: f64 = self.a_v.iter().sum();
            let sum_e: f64 = self.a_e.iter().sum();
            if ((sum_i - sum_v) / sum_i).abs() > 1e-10 {
                return bad(format!("cell area {sum_i} and dual area {sum_v} differ"));
            }
            // Geodesic l*d only approximates the diamond area on the sphere.
            let tol = if self.is_sphere() { 0.1 } else { 1e-10 };
            if ((0.5 * sum_e - sum_i) / sum_i).abs() > tol {
                return bad(format!("half edge area {} differs from cell area {sum_i}", 0.5 * sum_e));
            }
            let res = weight_relation_residual(self);
            if res > 1e-10 {
                return bad(format!("weight relation residual {res:e}"));
            }
        }

        let outside = self.circumcenters_outside();
        if !outside.is_empty() {
            return Err(Error::CircumcenterOutside(outside));
        }
        Ok(())
    }

    /// Vertices whose position is not inside the triangle of its three cells.
    pub fn circumcenters_outside(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for v in 0..self.n_vertices {
            let cv = self.cells_on_vertex[v];
            if cv.iter().any(|&c| c < 0) {
                continue;
            }
            let xv = self.vertex_pos[v];
            let p: Vec<[f64; 3]> = cv.iter().map(|&c| self.cell_center[c as usize]).collect();
            let inside = match self.geometry {
                Geometry::Sphere { .. } => (0..3).all(|k| {
                    let n = cross(p[k], p[(k + 1) % 3]);
                    dot(n, xv) >= -1e-12 * norm(n) * norm(xv)
                }),
                Geometry::PlanarPeriodic { .. } => {
                    let q: Vec<[f64; 3]> = p.iter().map(|&x| self.displacement(xv, x)).collect();
                    (0..3).all(|k| {
                        let (a, b) = (q[k], q[(k + 1) % 3]);
                        // Origin (the vertex) must be left of each directed side.
                        a[0] * b[1] - a[1] * b[0] >= -1e-12 * (norm(a) * norm(b))
                    })
                }
            };
            if !inside {
                out.push(v);
            }
        }
        out
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}
