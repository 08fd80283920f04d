use super::{LayeredState, Model};
use crate::error::{Error, Result};
use crate::trisk_ops::{inner_i, Ops};

/// Scratch buffers for one tendency evaluation.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub(crate) cell: [Vec<f64>; 3],
    pub(crate) edge: [Vec<f64>; 5],
    pub(crate) vert: [Vec<f64>; 2],
    pub(crate) press: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(model: &Model) -> Self {
        let (nc, ne, nv) = (model.mesh.n_cells, model.mesh.n_edges, model.mesh.n_vertices);
        Workspace {
            cell: std::array::from_fn(|_| vec![0.0; nc]),
            edge: std::array::from_fn(|_| vec![0.0; ne]),
            vert: std::array::from_fn(|_| vec![0.0; nv]),
            press: vec![vec![0.0; nc]; model.layers()],
        }
    }
}

/// `K = 1/2 <u * u>_I`
pub fn kinetic_energy(ops: &Ops, u: &[f64]) -> Vec<f64> {
    let u2: Vec<f64> = u.iter().map(|x| x * x).collect();
    let mut k = ops.interp_e2i(&u2);
    k.iter_mut().for_each(|x| *x *= 0.5);
    k
}

/// `Q y = 1/2 (<q>_E * perp(y) + perp(<q>_E * y))`, with `tmp` as scratch.
pub fn q_apply_into(ops: &Ops, qe: &[f64], y: &[f64], out: &mut [f64], tmp: &mut [f64]) {
    tmp.iter_mut().zip(qe).zip(y).for_each(|((t, q), y)| *t = q * y);
    ops.perp_flux_ee_into(tmp, out);
    ops.perp_flux_ee_into(y, tmp);
    out.iter_mut()
        .zip(tmp.iter())
        .zip(qe)
        .for_each(|((o, t), q)| *o = 0.5 * (*o + q * t));
}

impl Model {
    /// Interfaces `eta_k = b + sum_{l >= k} h_l`.
    pub fn interfaces(&self, h: &LayeredState) -> Vec<Vec<f64>> {
        let l = self.layers();
        let mut eta = vec![self.cfg.b.clone(); l];
        for k in (0..l).rev() {
            if k + 1 < l {
                eta[k] = eta[k + 1].clone();
            }
            eta[k].iter_mut().zip(h.h(k)).for_each(|(e, x)| *e += x);
        }
        eta
    }

    /// `p_k = rho_k eta_k + sum_{l<k} rho_l h_l`
    pub fn pressure(&self, s: &LayeredState) -> Vec<Vec<f64>> {
        let mut p = vec![vec![0.0; self.mesh.n_cells]; self.layers()];
        self.pressure_into(s, &mut p);
        p
    }

    fn pressure_into(&self, s: &LayeredState, p: &mut [Vec<f64>]) {
        let l = self.layers();
        let nc = self.mesh.n_cells;
        let rho = &self.cfg.rho;
        for i in 0..nc {
            let mut eta = self.cfg.b[i];
            for k in 0..l {
                eta += s.h(k)[i];
            }
            let mut above = 0.0;
            for k in 0..l {
                p[k][i] = rho[k] * eta + above;
                above += rho[k] * s.h(k)[i];
                eta -= s.h(k)[i];
            }
        }
    }

    pub fn kinetic_energy(&self, k: usize, u: &[f64]) -> Vec<f64> {
        kinetic_energy(&self.ops(k), u)
    }

    /// `q = (curl u + f) / <h>_V`, zero on inactive vertices.
    pub fn potential_vorticity(&self, k: usize, h: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let ops = self.ops(k);
        let mut q = vec![0.0; self.mesh.n_vertices];
        let mut hv = vec![0.0; self.mesh.n_vertices];
        self.pv_into(&ops, k, h, u, &mut q, &mut hv)?;
        Ok(q)
    }

    fn pv_into(&self, ops: &Ops, k: usize, h: &[f64], u: &[f64], q: &mut [f64], hv: &mut [f64]) -> Result<()> {
        ops.interp_i2v_into(h, hv);
        ops.curl_ev_into(u, q);
        let active = &self.masks.layers[k].vertex;
        for v in 0..q.len() {
            if active[v] == 0.0 {
                q[v] = 0.0;
            } else if hv[v] > 0.0 {
                q[v] = (q[v] + self.cfg.f[v]) / hv[v];
            } else {
                return Err(Error::OutCrop {
                    layer: k,
                    entity: "vertex",
                    index: v,
                    value: hv[v],
                });
            }
        }
        Ok(())
    }

    pub fn q_apply(&self, k: usize, h: &[f64], u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let ops = self.ops(k);
        let q = self.potential_vorticity(k, h, u)?;
        let qe = ops.interp_v2e(&q);
        let mut out = vec![0.0; self.mesh.n_edges];
        let mut tmp = vec![0.0; self.mesh.n_edges];
        q_apply_into(&ops, &qe, y, &mut out, &mut tmp);
        Ok(out)
    }

    fn check_thickness(&self, s: &LayeredState) -> Result<()> {
        for k in 0..self.layers() {
            let m = &self.masks.layers[k].cell;
            for (i, (&h, &w)) in s.h(k).iter().zip(m).enumerate() {
                if !h.is_finite() {
                    return Err(Error::NonFinite {
                        field: "h",
                        layer: k,
                        index: i,
                    });
                }
                if w == 1.0 && h < self.cfg.h_min {
                    return Err(Error::OutCrop {
                        layer: k,
                        entity: "cell",
                        index: i,
                        value: h,
                    });
                }
            }
            if let Some(e) = s.u(k).iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    field: "u",
                    layer: k,
                    index: e,
                });
            }
        }
        Ok(())
    }

    /// Conservative part `J[V] dH[V]`.
    pub fn ideal_tendency(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut out = self.zeros();
        let mut ws = Workspace::new(self);
        self.ideal_tendency_into(s, &mut out, &mut ws)?;
        Ok(out)
    }

    pub fn ideal_tendency_into(&self, s: &LayeredState, out: &mut LayeredState, ws: &mut Workspace) -> Result<()> {
        self.check_thickness(s)?;
        let mut press = std::mem::take(&mut ws.press);
        self.pressure_into(s, &mut press);
        let g = self.cfg.g;
        for k in 0..self.layers() {
            let ops = self.ops(k);
            let (h, u) = (s.h(k), s.u(k));
            let [he, flux, qe, perp, tmp] = &mut ws.edge;
            let [kin, bern, dh] = &mut ws.cell;
            let [q, hv] = &mut ws.vert;

            ops.interp_i2e_into(h, he);
            flux.iter_mut().zip(he.iter()).zip(u).for_each(|((f, h), u)| *f = h * u);
            ops.div_ei_into(flux, dh);
            out.h_mut(k).iter_mut().zip(dh.iter()).for_each(|(o, d)| *o = -d);

            tmp.iter_mut().zip(u).for_each(|(t, u)| *t = u * u);
            ops.interp_e2i_into(tmp, kin);
            let rk = self.cfg.rho[k];
            bern.iter_mut()
                .zip(kin.iter())
                .zip(&press[k])
                .for_each(|((b, kk), p)| *b = 0.5 * kk + g * p / rk);

            self.pv_into(&ops, k, h, u, q, hv)?;
            ops.interp_v2e_into(q, qe);
            q_apply_into(&ops, qe, flux, perp, tmp);
            ops.grad_ie_into(bern, tmp);
            out.u_mut(k)
                .iter_mut()
                .zip(perp.iter())
                .zip(tmp.iter())
                .for_each(|((o, p), gr)| *o = p - gr);
        }
        ws.press = press;
        Ok(())
    }

    /// Full right-hand side `F[V] = J dH + G`.
    pub fn tendency(&self, s: &LayeredState) -> Result<LayeredState> {
        let mut out = self.zeros();
        let mut ws = Workspace::new(self);
        self.tendency_into(s, &mut out, &mut ws)?;
        Ok(out)
    }

    pub fn tendency_into(&self, s: &LayeredState, out: &mut LayeredState, ws: &mut Workspace) -> Result<()> {
        self.ideal_tendency_into(s, out, ws)?;
        if self.has_forcing() {
            let g = self.forcing(s)?;
            out.axpy(1.0, &g);
        }
        if let Some((k, i)) = out
            .data
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| locate(out, p))
        {
            return Err(Error::NonFinite {
                field: "tendency",
                layer: k,
                index: i,
            });
        }
        Ok(())
    }

    /// `H = sum_k rho_k <h_k, K_k>_I + g/2 sum_k drho_k <eta_k, eta_k>_I`
    pub fn hamiltonian(&self, s: &LayeredState) -> f64 {
        let eta = self.interfaces(s);
        let mut e = 0.0;
        for k in 0..self.layers() {
            let kin = self.kinetic_energy(k, s.u(k));
            e += self.cfg.rho[k] * inner_i(&self.mesh, s.h(k), &kin);
            e += 0.5 * self.cfg.g * self.layer_mats.drho[k] * inner_i(&self.mesh, &eta[k], &eta[k]);
        }
        e
    }

    /// `H[V] - H[rest]`, evaluated without cancellation in the potential part.
    pub fn energy_anomaly(&self, s: &LayeredState) -> f64 {
        let eta = self.interfaces(s);
        let eta0 = self.interfaces(&self.rest_state());
        let mut e = 0.0;
        for k in 0..self.layers() {
            let kin = self.kinetic_energy(k, s.u(k));
            e += self.cfg.rho[k] * inner_i(&self.mesh, s.h(k), &kin);
            let d: Vec<f64> = eta[k].iter().zip(&eta0[k]).map(|(a, b)| a - b).collect();
            let sum: Vec<f64> = eta[k].iter().zip(&eta0[k]).map(|(a, b)| a + b).collect();
            e += 0.5 * self.cfg.g * self.layer_mats.drho[k] * inner_i(&self.mesh, &d, &sum);
        }
        e
    }

    /// `dH = (rho_k K_k + g p_k ; rho_k <h_k>_E * u_k)`
    pub fn delta_h(&self, s: &LayeredState) -> LayeredState {
        let mut out = self.zeros();
        let p = self.pressure(s);
        for k in 0..self.layers() {
            let ops = self.ops(k);
            let kin = self.kinetic_energy(k, s.u(k));
            let (rk, g) = (self.cfg.rho[k], self.cfg.g);
            let m = &self.masks.layers[k].cell;
            for (i, o) in out.h_mut(k).iter_mut().enumerate() {
                *o = m[i] * (rk * kin[i] + g * p[k][i]);
            }
            let he = ops.interp_i2e(s.h(k));
            for (e, o) in out.u_mut(k).iter_mut().enumerate() {
                *o = rk * he[e] * s.u(k)[e];
            }
        }
        out
    }
}

fn locate(s: &LayeredState, p: usize) -> (usize, usize) {
    let o = s.layers * s.n_cells;
    if p < o {
        (p / s.n_cells, p % s.n_cells)
    } else {
        ((p - o) / s.n_edges, (p - o) % s.n_edges)
    }
}
