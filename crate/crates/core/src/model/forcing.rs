use super::{LayeredState, Model};
use crate::error::{Error, Result};
use crate::trisk_ops::Ops;

fn thin_edge(layer: usize, index: usize, value: f64) -> Error {
    Error::OutCrop {
        layer,
        entity: "edge",
        index,
        value,
    }
}

/// `L u = grad div u - sqrt(3) perp_grad curl u`
pub fn vector_laplacian(ops: &Ops, u: &[f64]) -> Vec<f64> {
    let mut a = ops.grad_ie(&ops.div_ei(u));
    let b = ops.perp_grad_ve(&ops.curl_ev(u));
    let s3 = 3f64.sqrt();
    a.iter_mut().zip(&b).for_each(|(a, b)| *a -= s3 * b);
    a
}

impl Model {
    pub fn has_forcing(&self) -> bool {
        let t = self.cfg.terms;
        (t.wind && !self.cfg.tau.is_empty())
            || (t.drag && self.cfg.c_drag > 0.0)
            || (t.biharmonic && self.cfg.nu_h > 0.0)
            || (t.vertical_viscosity && self.cfg.nu_v > 0.0 && self.layers() > 1)
    }

    /// Sum of the enabled forcing and dissipation terms `G[V]`.
    pub fn forcing(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut g = self.zeros();
        let t = self.cfg.terms;
        if t.wind && !self.cfg.tau.is_empty() {
            let w = self.forcing_wind(s)?;
            g.u_mut(0).iter_mut().zip(&w).for_each(|(g, w)| *g += w);
        }
        if t.drag && self.cfg.c_drag > 0.0 {
            g.axpy(1.0, &self.forcing_drag(s)?);
        }
        if t.biharmonic && self.cfg.nu_h > 0.0 {
            g.axpy(1.0, &self.forcing_biharmonic(s)?);
        }
        if t.vertical_viscosity && self.cfg.nu_v > 0.0 && self.layers() > 1 {
            g.axpy(1.0, &self.forcing_vertical(s)?);
        }
        Ok(g)
    }

    /// `tau / <rho_1 h_1>_E` on the top layer.
    pub fn forcing_wind(&self, s: &LayeredState) -> Result<Vec<f64>> {
        let ops = self.ops(0);
        let he = ops.interp_i2e(s.h(0));
        let m = &self.mask(0).edge;
        let rho = self.cfg.rho[0];
        let mut out = vec![0.0; self.mesh.n_edges];
        for e in 0..self.mesh.n_edges {
            if m[e] == 0.0 || self.cfg.tau.is_empty() {
                continue;
            }
            if he[e] <= 0.0 {
                return Err(thin_edge(0, e, he[e]));
            }
            out[e] = self.cfg.tau[e] / (rho * he[e]);
        }
        Ok(out)
    }

    /// `-c <sqrt(2K)>_E / (rho <h>_E) * u` in the deepest wet layer of each edge.
    pub fn forcing_drag(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut out = self.zeros();
        for k in 0..self.layers() {
            if !self.l_bot.contains(&k) {
                continue;
            }
            let ops = self.ops(k);
            let speed: Vec<f64> = self
                .kinetic_energy(k, s.u(k))
                .iter()
                .map(|x| (2.0 * x).sqrt())
                .collect();
            let se = ops.interp_i2e(&speed);
            let he = ops.interp_i2e(s.h(k));
            let rho = self.cfg.rho[k];
            let u = s.u(k).to_vec();
            for (e, o) in out.u_mut(k).iter_mut().enumerate() {
                if self.l_bot[e] != k {
                    continue;
                }
                if he[e] <= 0.0 {
                    return Err(thin_edge(k, e, he[e]));
                }
                *o = -self.cfg.c_drag * se[e] / (rho * he[e]) * u[e];
            }
        }
        Ok(out)
    }

    /// `-(1/<h>_E) L(nu <h>_E L u)` in every layer.
    pub fn forcing_biharmonic(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut out = self.zeros();
        for k in 0..self.layers() {
            let ops = self.ops(k);
            let he = ops.interp_i2e(s.h(k));
            let mut lu = vector_laplacian(&ops, s.u(k));
            lu.iter_mut().zip(&he).for_each(|(x, h)| *x *= self.cfg.nu_h * h);
            let llu = vector_laplacian(&ops, &lu);
            let m = &self.mask(k).edge;
            for (e, o) in out.u_mut(k).iter_mut().enumerate() {
                if m[e] == 0.0 {
                    continue;
                }
                if he[e] <= 0.0 {
                    return Err(thin_edge(k, e, he[e]));
                }
                *o = -llu[e] / he[e];
            }
        }
        Ok(out)
    }

    /// Interface momentum exchange `nu_v (u_k - u_{k+1}) / dz` between
    /// adjacent wet layers, with `dz` the mean edge thickness of the pair.
    pub fn forcing_vertical(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut out = self.zeros();
        let l = self.layers();
        let he: Vec<Vec<f64>> = (0..l).map(|k| self.ops(k).interp_i2e(s.h(k))).collect();
        for k in 0..l - 1 {
            let (mu, ml) = (&self.mask(k).edge, &self.mask(k + 1).edge);
            for e in 0..self.mesh.n_edges {
                if mu[e] == 0.0 || ml[e] == 0.0 {
                    continue;
                }
                let (hu, hl) = (he[k][e], he[k + 1][e]);
                if hu <= 0.0 || hl <= 0.0 {
                    return Err(thin_edge(k, e, hu.min(hl)));
                }
                let flux = self.cfg.nu_v * (s.u(k)[e] - s.u(k + 1)[e]) / (0.5 * (hu + hl));
                out.u_mut(k)[e] -= flux / hu;
                out.u_mut(k + 1)[e] += flux / hl;
            }
        }
        Ok(out)
    }
}
