use super::Mesh;
use crate::error::{Error, Result};

/// Wet multipliers for one layer: 1.0 active, 0.0 eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMask {
    pub cell: Vec<f64>,
    pub edge: Vec<f64>,
    /// Vertices touching at least one active edge.
    pub vertex: Vec<f64>,
}

impl LayerMask {
    pub fn all_wet(mesh: &Mesh) -> Self {
        LayerMask {
            cell: vec![1.0; mesh.n_cells],
            edge: vec![1.0; mesh.n_edges],
            vertex: vec![1.0; mesh.n_vertices],
        }
    }

    fn from_cells(mesh: &Mesh, cell: Vec<f64>) -> Self {
        let edge: Vec<f64> = (0..mesh.n_edges)
            .map(|e| {
                let ok = !mesh.edge_is_boundary[e]
                    && mesh.cells_on_edge[e]
                        .iter()
                        .all(|&c| c >= 0 && cell[c as usize] == 1.0);
                if ok { 1.0 } else { 0.0 }
            })
            .collect();
        let vertex = (0..mesh.n_vertices)
            .map(|v| {
                let any = mesh.edges_on_vertex[v]
                    .iter()
                    .any(|&e| e >= 0 && edge[e as usize] == 1.0);
                if any { 1.0 } else { 0.0 }
            })
            .collect();
        LayerMask { cell, edge, vertex }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DryMask {
    pub layers: Vec<LayerMask>,
    /// Reference thickness per layer, zero where dry.
    pub h0: Vec<Vec<f64>>,
}

/// Per-layer masks from the reference interfaces.
///
/// The rest thickness of layer `k` is `max(b, eta0_k) - max(b, eta0_{k+1})`
/// with the bottom interface at `b`. Cells with zero rest thickness, land
/// cells (`b >= 0`) and cells flagged dry on the mesh are eliminated; an edge
/// is eliminated when either neighbour is.
pub fn apply_dry_mask(mesh: &Mesh, bathymetry: &[f64], eta0: &[f64]) -> Result<DryMask> {
    if bathymetry.len() != mesh.n_cells {
        return Err(Error::Config(format!(
            "bathymetry has {} entries for {} cells",
            bathymetry.len(),
            mesh.n_cells
        )));
    }
    if eta0.is_empty() {
        return Err(Error::Config("no layers".into()));
    }
    let l = eta0.len();
    let mut layers = Vec::with_capacity(l);
    let mut h0 = Vec::with_capacity(l);
    for k in 0..l {
        let mut hk = vec![0.0; mesh.n_cells];
        let mut cell = vec![0.0; mesh.n_cells];
        for i in 0..mesh.n_cells {
            let b = bathymetry[i];
            if b >= 0.0 || mesh.cell_is_dry[i] {
                continue;
            }
            let lower = if k + 1 < l { b.max(eta0[k + 1]) } else { b };
            let t = b.max(eta0[k]) - lower;
            if t > 0.0 {
                hk[i] = t;
                cell[i] = 1.0;
            }
        }
        let mask = LayerMask::from_cells(mesh, cell);
        if mask.cell.iter().all(|&c| c == 0.0) {
            return Err(Error::DryLayer { layer: k });
        }
        layers.push(mask);
        h0.push(hk);
    }
    Ok(DryMask { layers, h0 })
}
