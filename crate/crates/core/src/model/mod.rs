//! Multilayer rotating shallow water: state, Hamiltonian and tendency.

mod dynamics;
mod forcing;
mod layers;
mod state;

use std::sync::Arc;

pub use dynamics::{kinetic_energy, q_apply_into, Workspace};
pub use forcing::vector_laplacian;
pub use layers::{vertical_modes, LayerMatrices};
pub use state::LayeredState;

use crate::error::{Error, Result};
use crate::mesh::{apply_dry_mask, DryMask, LayerMask, Mesh};
use crate::trisk_ops::Ops;

/// Switches for the non-conservative terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Terms {
    pub wind: bool,
    pub drag: bool,
    pub biharmonic: bool,
    pub vertical_viscosity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub g: f64,
    /// Layer densities, top to bottom.
    pub rho: Vec<f64>,
    /// Coriolis parameter on vertices.
    pub f: Vec<f64>,
    /// Bathymetry on cells, negative below sea level.
    pub b: Vec<f64>,
    /// Rest interfaces, `eta0[0] = 0` then decreasing.
    pub eta0: Vec<f64>,
    /// Normal wind stress on edges (N/m^2); empty means none.
    pub tau: Vec<f64>,
    pub c_drag: f64,
    pub nu_h: f64,
    pub nu_v: f64,
    pub terms: Terms,
    /// Thinnest admissible wet layer.
    pub h_min: f64,
}

impl ModelConfig {
    /// Flat-bottom, unforced configuration with interfaces split evenly.
    pub fn flat(mesh: &Mesh, depth: f64, rho: Vec<f64>, f0: f64) -> Self {
        let l = rho.len();
        ModelConfig {
            g: 9.81,
            eta0: (0..l).map(|k| -depth * k as f64 / l as f64).collect(),
            rho,
            f: vec![f0; mesh.n_vertices],
            b: vec![-depth; mesh.n_cells],
            tau: Vec::new(),
            c_drag: 0.0,
            nu_h: 0.0,
            nu_v: 0.0,
            terms: Terms::default(),
            h_min: 1e-3,
        }
    }

    pub fn layers(&self) -> usize {
        self.rho.len()
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let l = self.rho.len();
        if l == 0 {
            return Err(Error::Config("at least one layer is required".into()));
        }
        if self.eta0.len() != l {
            return Err(Error::Config(format!("{} interfaces for {l} layers", self.eta0.len())));
        }
        if self.rho.iter().any(|&r| r <= 0.0) || self.rho.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("densities must be positive and strictly increasing".into()));
        }
        if self.eta0[0] != 0.0 || self.eta0.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("interfaces must start at 0 and strictly decrease".into()));
        }
        if !(self.g > 0.0) {
            return Err(Error::Config("gravity must be positive".into()));
        }
        if self.f.len() != mesh.n_vertices || self.b.len() != mesh.n_cells {
            return Err(Error::Config("Coriolis or bathymetry has the wrong length".into()));
        }
        if !self.tau.is_empty() && self.tau.len() != mesh.n_edges {
            return Err(Error::Config("wind stress has the wrong length".into()));
        }
        if self.c_drag < 0.0 || self.nu_h < 0.0 || self.nu_v < 0.0 || !(self.h_min >= 0.0) {
            return Err(Error::Config("dissipation coefficients must be non-negative".into()));
        }
        Ok(())
    }
}

/// A configured model: mesh, parameters, masks and layer algebra.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: Arc<Mesh>,
    pub cfg: ModelConfig,
    pub masks: DryMask,
    pub layer_mats: LayerMatrices,
    /// Deepest wet layer at each edge, `usize::MAX` where none.
    pub l_bot: Vec<usize>,
}

impl Model {
    pub fn new(mesh: Arc<Mesh>, cfg: ModelConfig) -> Result<Self> {
        cfg.validate(&mesh)?;
        let masks = apply_dry_mask(&mesh, &cfg.b, &cfg.eta0)?;
        let l_bot = (0..mesh.n_edges)
            .map(|e| {
                (0..cfg.layers())
                    .rev()
                    .find(|&k| masks.layers[k].edge[e] == 1.0)
                    .unwrap_or(usize::MAX)
            })
            .collect();
        let layer_mats = LayerMatrices::new(&cfg.rho);
        Ok(Model {
            mesh,
            cfg,
            masks,
            layer_mats,
            l_bot,
        })
    }

    pub fn layers(&self) -> usize {
        self.cfg.layers()
    }

    pub fn mask(&self, k: usize) -> &LayerMask {
        &self.masks.layers[k]
    }

    pub fn ops(&self, k: usize) -> Ops<'_> {
        Ops::masked(&self.mesh, &self.masks.layers[k])
    }

    pub fn zeros(&self) -> LayeredState {
        LayeredState::zeros(self.layers(), self.mesh.n_cells, self.mesh.n_edges)
    }

    /// State at rest on the reference interfaces.
    pub fn rest_state(&self) -> LayeredState {
        let mut s = self.zeros();
        for k in 0..self.layers() {
            s.h_mut(k).copy_from_slice(&self.masks.h0[k]);
        }
        s
    }

    /// Zero every eliminated entry in place.
    pub fn apply_mask(&self, s: &mut LayeredState) {
        for k in 0..self.layers() {
            let m = &self.masks.layers[k];
            s.h_mut(k).iter_mut().zip(&m.cell).for_each(|(x, w)| *x *= w);
            s.u_mut(k).iter_mut().zip(&m.edge).for_each(|(x, w)| *x *= w);
        }
    }

    /// Layer volumes `<1, h_k>_I`.
    pub fn layer_volumes(&self, s: &LayeredState) -> Vec<f64> {
        (0..self.layers())
            .map(|k| s.h(k).iter().zip(&self.mesh.a_i).map(|(h, a)| h * a).sum())
            .collect()
    }

    /// `m[h] = sum_k rho_k <1, h_k>_I`
    pub fn total_mass(&self, s: &LayeredState) -> f64 {
        self.layer_volumes(s)
            .iter()
            .zip(&self.cfg.rho)
            .map(|(v, r)| v * r)
            .sum()
    }

    /// `<a, b>_X`: cell product on thicknesses, edge product on velocities.
    pub fn inner_x(&self, a: &[f64], b: &[f64]) -> f64 {
        let (l, nc, ne) = (self.layers(), self.mesh.n_cells, self.mesh.n_edges);
        let mut s = 0.0;
        for k in 0..l {
            for i in 0..nc {
                s += self.mesh.a_i[i] * a[k * nc + i] * b[k * nc + i];
            }
        }
        let o = l * nc;
        for k in 0..l {
            for e in 0..ne {
                s += self.mesh.a_e[e] * a[o + k * ne + e] * b[o + k * ne + e];
            }
        }
        s
    }

    /// Largest `|u|` over wet edges.
    pub fn max_speed(&self, s: &LayeredState) -> f64 {
        s.u_all().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Sea surface height `b + sum_k h_k` on cells.
    pub fn ssh(&self, s: &LayeredState) -> Vec<f64> {
        let mut eta = self.cfg.b.clone();
        for k in 0..self.layers() {
            eta.iter_mut().zip(s.h(k)).for_each(|(e, h)| *e += h);
        }
        eta
    }
}
