//! Matrix-free TRiSK operators.
//!
//! Inputs are expected to vanish on eliminated entries; outputs are zeroed
//! on eliminated entries when a [`LayerMask`] is attached.

use crate::mesh::{LayerMask, Mesh};

/// `<a, b>_I`
pub fn inner_i(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    weighted(&mesh.a_i, a, b)
}

/// `<a, b>_V`
pub fn inner_v(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    weighted(&mesh.a_v, a, b)
}

/// `<a, b>_E`
pub fn inner_e(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    weighted(&mesh.a_e, a, b)
}

fn weighted(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct Ops<'a> {
    pub mesh: &'a Mesh,
    pub mask: Option<&'a LayerMask>,
}

macro_rules! alloc {
    ($name:ident, $into:ident, $n:ident) => {
        pub fn $name(&self, x: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; self.mesh.$n];
            self.$into(x, &mut out);
            out
        }
    };
}

impl<'a> Ops<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        Ops { mesh, mask: None }
    }

    pub fn masked(mesh: &'a Mesh, mask: &'a LayerMask) -> Self {
        Ops {
            mesh,
            mask: Some(mask),
        }
    }

    fn finish_cells(&self, out: &mut [f64]) {
        if let Some(m) = self.mask {
            out.iter_mut().zip(&m.cell).for_each(|(o, w)| *o *= w);
        }
    }

    fn finish_edges(&self, out: &mut [f64]) {
        if let Some(m) = self.mask {
            out.iter_mut().zip(&m.edge).for_each(|(o, w)| *o *= w);
        }
    }

    fn finish_vertices(&self, out: &mut [f64]) {
        if let Some(m) = self.mask {
            out.iter_mut().zip(&m.vertex).for_each(|(o, w)| *o *= w);
        }
    }

    /// `(1/A_i) sum_e n_{e,i} l_e y_e`
    pub fn div_ei_into(&self, y: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for i in 0..m.n_cells {
            let mut s = 0.0;
            for (&e, &n) in m.cell_edges(i).iter().zip(m.cell_signs(i)) {
                s += n * m.l_e[e as usize] * y[e as usize];
            }
            out[i] = s / m.a_i[i];
        }
        self.finish_cells(out);
    }

    /// `(1/d_e) sum_i -n_{e,i} phi_i`
    pub fn grad_ie_into(&self, phi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for e in 0..m.n_edges {
            let mut s = 0.0;
            for (&c, &n) in m.cells_on_edge[e].iter().zip(&m.n_on_edge[e]) {
                if c >= 0 {
                    s -= n * phi[c as usize];
                }
            }
            out[e] = s / m.d_e[e];
        }
        self.finish_edges(out);
    }

    /// `(1/A_v) sum_e t_{e,v} d_e y_e`
    pub fn curl_ev_into(&self, y: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for v in 0..m.n_vertices {
            let mut s = 0.0;
            for (&e, &t) in m.edges_on_vertex[v].iter().zip(&m.t_ev[v]) {
                if e >= 0 {
                    s += t * m.d_e[e as usize] * y[e as usize];
                }
            }
            out[v] = s / m.a_v[v];
        }
        self.finish_vertices(out);
    }

    /// `(1/l_e) sum_v t_{e,v} psi_v`
    pub fn perp_grad_ve_into(&self, psi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for e in 0..m.n_edges {
            let mut s = 0.0;
            for (&v, &t) in m.vertices_on_edge[e].iter().zip(&m.t_on_edge[e]) {
                if v >= 0 {
                    s += t * psi[v as usize];
                }
            }
            out[e] = s / m.l_e[e];
        }
        self.finish_edges(out);
    }

    /// `(1/d_e) sum_e' w_{e,e'} l_e' y_e'`
    pub fn perp_flux_ee_into(&self, y: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for e in 0..m.n_edges {
            let (eoe, w) = m.edge_neighbors(e);
            let mut s = 0.0;
            for (&ep, &wk) in eoe.iter().zip(w) {
                s += wk * m.l_e[ep as usize] * y[ep as usize];
            }
            out[e] = s / m.d_e[e];
        }
        self.finish_edges(out);
    }

    /// Cell to edge: two-point average.
    pub fn interp_i2e_into(&self, phi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for e in 0..m.n_edges {
            let mut s = 0.0;
            for &c in &m.cells_on_edge[e] {
                if c >= 0 {
                    s += phi[c as usize];
                }
            }
            out[e] = 0.5 * s;
        }
        self.finish_edges(out);
    }

    /// Edge to cell: `(1/A_i) sum_e (A_e/2) y_e`, the transpose of `interp_i2e`.
    pub fn interp_e2i_into(&self, y: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for i in 0..m.n_cells {
            let mut s = 0.0;
            for &e in m.cell_edges(i) {
                s += 0.5 * m.a_e[e as usize] * y[e as usize];
            }
            out[i] = s / m.a_i[i];
        }
        self.finish_cells(out);
    }

    /// Cell to vertex: `(1/A_v) sum_i R_{i,v} A_i phi_i`.
    pub fn interp_i2v_into(&self, phi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for v in 0..m.n_vertices {
            let mut s = 0.0;
            for (&c, &r) in m.cells_on_vertex[v].iter().zip(&m.r_iv[v]) {
                if c >= 0 {
                    s += r * m.a_i[c as usize] * phi[c as usize];
                }
            }
            out[v] = s / m.a_v[v];
        }
        self.finish_vertices(out);
    }

    /// Vertex to cell: `sum_v R_{i,v} psi_v`, the transpose of `interp_i2v`.
    pub fn interp_v2i_into(&self, psi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        out.iter_mut().for_each(|o| *o = 0.0);
        for v in 0..m.n_vertices {
            for (&c, &r) in m.cells_on_vertex[v].iter().zip(&m.r_iv[v]) {
                if c >= 0 {
                    out[c as usize] += r * psi[v];
                }
            }
        }
        self.finish_cells(out);
    }

    /// Vertex to edge: two-point average.
    pub fn interp_v2e_into(&self, psi: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for e in 0..m.n_edges {
            let mut s = 0.0;
            for &v in &m.vertices_on_edge[e] {
                if v >= 0 {
                    s += psi[v as usize];
                }
            }
            out[e] = 0.5 * s;
        }
        self.finish_edges(out);
    }

    /// Edge to vertex: `(1/A_v) sum_e (A_e/2) y_e`, the transpose of `interp_v2e`.
    pub fn interp_e2v_into(&self, y: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        for v in 0..m.n_vertices {
            let mut s = 0.0;
            for &e in &m.edges_on_vertex[v] {
                if e >= 0 {
                    s += 0.5 * m.a_e[e as usize] * y[e as usize];
                }
            }
            out[v] = s / m.a_v[v];
        }
        self.finish_vertices(out);
    }

    alloc!(div_ei, div_ei_into, n_cells);
    alloc!(grad_ie, grad_ie_into, n_edges);
    alloc!(curl_ev, curl_ev_into, n_vertices);
    alloc!(perp_grad_ve, perp_grad_ve_into, n_edges);
    alloc!(perp_flux_ee, perp_flux_ee_into, n_edges);
    alloc!(interp_i2e, interp_i2e_into, n_edges);
    alloc!(interp_e2i, interp_e2i_into, n_cells);
    alloc!(interp_i2v, interp_i2v_into, n_vertices);
    alloc!(interp_v2i, interp_v2i_into, n_cells);
    alloc!(interp_v2e, interp_v2e_into, n_edges);
    alloc!(interp_e2v, interp_e2v_into, n_vertices);
}
