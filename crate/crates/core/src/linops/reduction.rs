//! Projection of the reference operator onto one vertical mode per stack.

use super::ReferenceOperator;
use crate::krylov::{phi_gamma_apply, Dissipation, KrylovSettings, LinearOperator};
use crate::model::LayeredState;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Standard,
    MassConserving,
}

/// Per-stack blocks of `Psi`, `Psi^dagger` and the reduced Hamiltonian, with one reduced layer.
///
/// Blocks are stored stack-major: entry `(i, k)` of a cell block is `psi_h[i * layers + k]`.
#[derive(Debug, Clone)]
pub struct LayerReduction {
    pub kind: ReductionKind,
    pub layers: usize,
    pub n_cells: usize,
    pub n_edges: usize,
    /// `y_k = hbar_k / hhat` per cell.
    pub psi_h: Vec<f64>,
    pub psi_u: Vec<f64>,
    pub psi_dag_h: Vec<f64>,
    pub psi_dag_u: Vec<f64>,
    /// Reduced Hamiltonian on cells (`g rhat` or `g rhohat`) and edges (`sum rho <hbar>_E`).
    pub d2h_h: Vec<f64>,
    pub d2h_u: Vec<f64>,
    /// Pressure weights used by the reduced operator: `(R y)_k` or `rho_k`.
    coupling: Vec<f64>,
    pub hhat: Vec<f64>,
}

impl LayerReduction {
    pub fn barotropic(op: &ReferenceOperator) -> Self {
        Self::build(op, ReductionKind::Standard)
    }

    pub fn mass_conserving(op: &ReferenceOperator) -> Self {
        Self::build(op, ReductionKind::MassConserving)
    }

    pub fn build(op: &ReferenceOperator, kind: ReductionKind) -> Self {
        let model = op.model;
        let l = model.layers();
        let (nc, ne) = (model.mesh.n_cells, model.mesh.n_edges);
        let g = model.cfg.g;
        let rho = &model.cfg.rho;
        let mut psi_h = vec![0.0; nc * l];
        let mut psi_dag_h = vec![0.0; nc * l];
        let mut coupling = vec![0.0; nc * l];
        let mut d2h_h = vec![0.0; nc];
        let mut hhat = vec![0.0; nc];
        for i in 0..nc {
            let hb: Vec<f64> = (0..l).map(|k| op.hbar[k][i] * model.mask(k).cell[i]).collect();
            let ht: f64 = hb.iter().sum();
            hhat[i] = ht;
            if ht <= 0.0 {
                d2h_h[i] = g * rho[0];
                continue;
            }
            let y: Vec<f64> = hb.iter().map(|h| h / ht).collect();
            let ry: Vec<f64> = (0..l)
                .map(|k| (0..l).map(|m| rho[k.min(m)] * y[m]).sum())
                .collect();
            psi_h[i * l..(i + 1) * l].copy_from_slice(&y);
            match kind {
                ReductionKind::Standard => {
                    let rhat: f64 = y.iter().zip(&ry).map(|(a, b)| a * b).sum();
                    for k in 0..l {
                        psi_dag_h[i * l + k] = ry[k] / rhat * model.mask(k).cell[i];
                        coupling[i * l + k] = ry[k];
                    }
                    d2h_h[i] = g * rhat;
                }
                ReductionKind::MassConserving => {
                    let rhohat: f64 = y.iter().zip(rho).map(|(a, b)| a * b).sum();
                    for k in 0..l {
                        psi_dag_h[i * l + k] = rho[k] / rhohat * model.mask(k).cell[i];
                        coupling[i * l + k] = rho[k];
                    }
                    d2h_h[i] = g * rhohat;
                }
            }
        }
        let mut psi_u = vec![0.0; ne * l];
        let mut psi_dag_u = vec![0.0; ne * l];
        let mut d2h_u = vec![0.0; ne];
        for e in 0..ne {
            let w: Vec<f64> = (0..l)
                .map(|k| model.mask(k).edge[e] * rho[k] * op.hbar_e[k][e])
                .collect();
            let s: f64 = w.iter().sum();
            if s <= 0.0 {
                d2h_u[e] = rho[0];
                continue;
            }
            for k in 0..l {
                psi_u[e * l + k] = model.mask(k).edge[e];
                psi_dag_u[e * l + k] = w[k] / s;
            }
            d2h_u[e] = s;
        }
        LayerReduction {
            kind,
            layers: l,
            n_cells: nc,
            n_edges: ne,
            psi_h,
            psi_u,
            psi_dag_h,
            psi_dag_u,
            d2h_h,
            d2h_u,
            coupling,
            hhat,
        }
    }

    pub fn reduced_dim(&self) -> usize {
        self.n_cells + self.n_edges
    }

    /// `Psi w_hat`
    pub fn psi(&self, w: &[f64]) -> Vec<f64> {
        let (l, nc, ne) = (self.layers, self.n_cells, self.n_edges);
        let mut out = vec![0.0; l * (nc + ne)];
        for k in 0..l {
            for i in 0..nc {
                out[k * nc + i] = self.psi_h[i * l + k] * w[i];
            }
            for e in 0..ne {
                out[l * nc + k * ne + e] = self.psi_u[e * l + k] * w[nc + e];
            }
        }
        out
    }

    /// `Psi^dagger w`
    pub fn psi_dag(&self, w: &[f64]) -> Vec<f64> {
        let (l, nc, ne) = (self.layers, self.n_cells, self.n_edges);
        let mut out = vec![0.0; nc + ne];
        for k in 0..l {
            for i in 0..nc {
                out[i] += self.psi_dag_h[i * l + k] * w[k * nc + i];
            }
            for e in 0..ne {
                out[nc + e] += self.psi_dag_u[e * l + k] * w[l * nc + k * ne + e];
            }
        }
        out
    }

    /// `P w = Psi Psi^dagger w`
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        self.psi(&self.psi_dag(w))
    }

    /// Reduced state as a one-layer container.
    pub fn as_state(&self, w: Vec<f64>) -> LayeredState {
        LayeredState::from_vec(1, self.n_cells, self.n_edges, w)
    }
}

/// `A_hat = Psi^dagger J d2H Psi` with the reduced `M_hat` inner product.
#[derive(Debug, Clone, Copy)]
pub struct ReducedOperator<'a> {
    pub red: &'a LayerReduction,
    pub op: &'a ReferenceOperator<'a>,
}

impl<'a> ReducedOperator<'a> {
    pub fn new(red: &'a LayerReduction, op: &'a ReferenceOperator<'a>) -> Self {
        ReducedOperator { red, op }
    }
}

impl LinearOperator for ReducedOperator<'_> {
    fn dim(&self) -> usize {
        self.red.reduced_dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self.red;
        let (l, nc, ne) = (r.layers, r.n_cells, r.n_edges);
        let g = self.op.model.cfg.g;
        let rho = &self.op.model.cfg.rho;
        let mut z = vec![0.0; l * (nc + ne)];
        for k in 0..l {
            let m = &self.op.model.mask(k).cell;
            for i in 0..nc {
                z[k * nc + i] = g * r.coupling[i * l + k] * x[i] * m[i];
            }
            for e in 0..ne {
                z[l * nc + k * ne + e] = rho[k] * self.op.hbar_e[k][e] * r.psi_u[e * l + k] * x[nc + e];
            }
        }
        let mut jz = vec![0.0; z.len()];
        self.op.j_apply(&z, &mut jz);
        y.copy_from_slice(&r.psi_dag(&jz));
    }

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = self.red;
        let mesh = &self.op.model.mesh;
        let nc = r.n_cells;
        let mut s = 0.0;
        for i in 0..nc {
            s += mesh.a_i[i] * r.d2h_h[i] * x[i] * y[i];
        }
        for e in 0..r.n_edges {
            s += mesh.a_e[e] * r.d2h_u[e] * x[nc + e] * y[nc + e];
        }
        s
    }
}

/// `A_P = Psi A_hat Psi^dagger` on the full space.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedOperator<'a> {
    pub reduced: ReducedOperator<'a>,
}

impl LinearOperator for ProjectedOperator<'_> {
    fn dim(&self) -> usize {
        self.reduced.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self.reduced.red;
        let xr = r.psi_dag(x);
        let mut yr = vec![0.0; xr.len()];
        self.reduced.apply(&xr, &mut yr);
        y.copy_from_slice(&r.psi(&yr));
    }

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.reduced.op.inner_mh(x, y)
    }
}

fn inv_factorial(s: usize) -> f64 {
    (1..=s).fold(1.0, |a, k| a / k as f64)
}

/// `phi_s(dt A_P) b = (b - P b) / s! + Psi phi_s(dt A_hat) Psi^dagger b`.
pub fn phi_of_projected(
    reduced: &ReducedOperator,
    s: usize,
    dt: f64,
    b: &[f64],
    diss: Option<Dissipation>,
    settings: &KrylovSettings,
) -> Result<Vec<f64>> {
    let r = reduced.red;
    let bh = r.psi_dag(b);
    let pb = r.psi(&bh);
    let (ph, _) = phi_gamma_apply(reduced, s, dt, &bh, diss, settings)?;
    let lift = r.psi(&ph);
    let f = inv_factorial(s);
    Ok(b.iter()
        .zip(&pb)
        .zip(&lift)
        .map(|((b, p), l)| f * (b - p) + l)
        .collect())
}
