use std::collections::HashMap;

use super::Mesh;

/// TRiSK weights aligned with `edges_on_edge`.
///
/// For cell edges `e_0..e_{n-1}` in counter-clockwise order with vertex `v_l`
/// between `e_l` and `e_{l+1}`, the weight of `e_m` in the reconstruction at
/// `e_k` is `n_k n_m (sum_{l=m}^{k-1} R_{v_l} - 1/2)`, the sum running
/// counter-clockwise from `m`.
pub fn compute_edge_weights(mesh: &Mesh) -> Vec<f64> {
    let stride = mesh.max_edges_on_edge;
    let mut w = vec![0.0; mesh.n_edges * stride];
    for i in 0..mesh.n_cells {
        let edges = mesh.cell_edges(i);
        let signs = mesh.cell_signs(i);
        let n = edges.len();
        let r: Vec<f64> = mesh
            .cell_vertices(i)
            .iter()
            .map(|&v| if v < 0 { 0.0 } else { mesh.kite(i, v as usize) })
            .collect();
        for k in 0..n {
            let e = edges[k] as usize;
            // Fill the slots of the cell in the order `edges_on_edge` uses.
            let base = if mesh.cells_on_edge[e][0] == i as i32 { 0 } else { n_first(mesh, e) };
            for off in 1..n {
                let m = (k + off) % n;
                let mut s = 0.0;
                let mut l = m;
                while l != k {
                    s += r[l];
                    l = (l + 1) % n;
                }
                w[e * stride + base + off - 1] = signs[k] * signs[m] * (s - 0.5);
            }
        }
    }
    w
}

fn n_first(mesh: &Mesh, e: usize) -> usize {
    let c0 = mesh.cells_on_edge[e][0];
    if c0 < 0 {
        0
    } else {
        mesh.n_edges_on_cell[c0 as usize] - 1
    }
}

/// Weights with every entry touching a masked edge set to zero.
pub fn masked_edge_weights(mesh: &Mesh, edge_mask: &[f64]) -> Vec<f64> {
    let stride = mesh.max_edges_on_edge;
    let mut w = mesh.w_ee.clone();
    for e in 0..mesh.n_edges {
        for k in 0..mesh.n_edges_on_edge[e] {
            let ep = mesh.edges_on_edge[e * stride + k] as usize;
            if edge_mask[e] == 0.0 || edge_mask[ep] == 0.0 {
                w[e * stride + k] = 0.0;
            }
        }
    }
    w
}

/// `max |(TW + RN)_{v,e}|` assembled sparsely.
pub fn weight_relation_residual(mesh: &Mesh) -> f64 {
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for e in 0..mesh.n_edges {
        let (eoe, w) = mesh.edge_neighbors(e);
        for (j, &v) in mesh.vertices_on_edge[e].iter().enumerate() {
            if v < 0 {
                continue;
            }
            let t = mesh.t_on_edge[e][j];
            for (&ep, &wk) in eoe.iter().zip(w) {
                *acc.entry((v as usize, ep as usize)).or_default() += t * wk;
            }
        }
    }
    for v in 0..mesh.n_vertices {
        for k in 0..3 {
            let i = mesh.cells_on_vertex[v][k];
            if i < 0 {
                continue;
            }
            let r = mesh.r_iv[v][k];
            for (&ep, &s) in mesh.cell_edges(i as usize).iter().zip(mesh.cell_signs(i as usize)) {
                *acc.entry((v, ep as usize)).or_default() += r * s;
            }
        }
    }
    acc.values().fold(0.0, |m, x| m.max(x.abs()))
}
