//! Linearizations of the model around a state at rest and layer reduction.

mod reduction;

pub use reduction::{phi_of_projected, LayerReduction, ProjectedOperator, ReducedOperator, ReductionKind};

use crate::krylov::{KrylovBasis, LinearOperator, Reorth};
use crate::model::{q_apply_into, LayeredState, Model};
use crate::trisk_ops::Ops;

/// `A = J[Vbar] d2H[Vbar]` for `Vbar = (hbar, 0)`.
#[derive(Debug, Clone)]
pub struct ReferenceOperator<'a> {
    pub model: &'a Model,
    /// Reference thickness per layer.
    pub hbar: Vec<Vec<f64>>,
    pub hbar_e: Vec<Vec<f64>>,
    /// `<f / <hbar>_V>_E` per layer.
    pub qbar_e: Vec<Vec<f64>>,
}

impl<'a> ReferenceOperator<'a> {
    pub fn new(model: &'a Model, hbar: &LayeredState) -> Self {
        let l = model.layers();
        let mut hbar_v = Vec::with_capacity(l);
        let mut hbar_e = Vec::with_capacity(l);
        let mut qbar_e = Vec::with_capacity(l);
        for k in 0..l {
            let ops = model.ops(k);
            let hv = ops.interp_i2v(hbar.h(k));
            let q: Vec<f64> = hv
                .iter()
                .zip(&model.cfg.f)
                .zip(&model.mask(k).vertex)
                .map(|((h, f), m)| if *m == 1.0 && *h > 0.0 { f / h } else { 0.0 })
                .collect();
            qbar_e.push(ops.interp_v2e(&q));
            hbar_e.push(ops.interp_i2e(hbar.h(k)));
            hbar_v.push(hv);
        }
        ReferenceOperator {
            model,
            hbar: (0..l).map(|k| hbar.h(k).to_vec()).collect(),
            hbar_e,
            qbar_e,
        }
    }

    /// Linearization at the rest state of the model.
    pub fn at_rest(model: &'a Model) -> Self {
        Self::new(model, &model.rest_state())
    }

    fn layout(&self) -> (usize, usize, usize) {
        (self.model.layers(), self.model.mesh.n_cells, self.model.mesh.n_edges)
    }

    /// `d2H[Vbar] W = (g R w^h ; rho_k <hbar_k>_E w^u_k)`.
    pub fn d2h_apply(&self, w: &[f64], out: &mut [f64]) {
        let (l, nc, ne) = self.layout();
        let g = self.model.cfg.g;
        let rho = &self.model.cfg.rho;
        for i in 0..nc {
            for k in 0..l {
                // R[k][m] = rho[min(k, m)]
                let mut s = 0.0;
                for m in 0..l {
                    s += rho[k.min(m)] * w[m * nc + i];
                }
                out[k * nc + i] = g * s * self.model.mask(k).cell[i];
            }
        }
        let o = l * nc;
        for k in 0..l {
            for e in 0..ne {
                out[o + k * ne + e] = rho[k] * self.hbar_e[k][e] * w[o + k * ne + e];
            }
        }
    }

    /// `J[Vbar] z = (-div(z^u / rho_k) ; (Qbar z^u - grad z^h) / rho_k)`.
    pub fn j_apply(&self, z: &[f64], out: &mut [f64]) {
        let (l, nc, ne) = self.layout();
        let o = l * nc;
        let mut flux = vec![0.0; ne];
        let mut tmp = vec![0.0; ne];
        let mut qy = vec![0.0; ne];
        let mut gr = vec![0.0; ne];
        for k in 0..l {
            let ops = self.model.ops(k);
            let rk = self.model.cfg.rho[k];
            flux.iter_mut()
                .zip(&z[o + k * ne..o + (k + 1) * ne])
                .for_each(|(f, z)| *f = z / rk);
            ops.div_ei_into(&flux, &mut out[k * nc..(k + 1) * nc]);
            out[k * nc..(k + 1) * nc].iter_mut().for_each(|x| *x = -*x);
            q_apply_into(&ops, &self.qbar_e[k], &flux, &mut qy, &mut tmp);
            ops.grad_ie_into(&z[k * nc..(k + 1) * nc], &mut gr);
            for e in 0..ne {
                out[o + k * ne + e] = qy[e] - gr[e] / rk;
            }
        }
    }

    /// `<x, y>_{M_H} = <x, d2H y>_X`.
    pub fn inner_mh(&self, x: &[f64], y: &[f64]) -> f64 {
        let (l, nc, ne) = self.layout();
        let g = self.model.cfg.g;
        let rho = &self.model.cfg.rho;
        let mesh = &self.model.mesh;
        let mut s = 0.0;
        for i in 0..nc {
            let mut c = 0.0;
            for k in 0..l {
                for m in 0..l {
                    c += x[k * nc + i] * rho[k.min(m)] * y[m * nc + i];
                }
            }
            s += mesh.a_i[i] * g * c;
        }
        let o = l * nc;
        for k in 0..l {
            let w = rho[k];
            for e in 0..ne {
                s += mesh.a_e[e] * w * self.hbar_e[k][e] * x[o + k * ne + e] * y[o + k * ne + e];
            }
        }
        s
    }
}

impl LinearOperator for ReferenceOperator<'_> {
    fn dim(&self) -> usize {
        let (l, nc, ne) = self.layout();
        l * (nc + ne)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (l, nc, ne) = self.layout();
        let o = l * nc;
        let mut rw = vec![0.0; nc];
        let mut flux = vec![0.0; ne];
        let mut tmp = vec![0.0; ne];
        let mut qy = vec![0.0; ne];
        let mut gr = vec![0.0; ne];
        let g = self.model.cfg.g;
        let rho = &self.model.cfg.rho;
        for k in 0..l {
            let ops = self.model.ops(k);
            for (i, r) in rw.iter_mut().enumerate() {
                let mut s = 0.0;
                for m in 0..l {
                    s += rho[k.min(m)] * x[m * nc + i];
                }
                *r = s;
            }
            flux.iter_mut()
                .zip(&self.hbar_e[k])
                .zip(&x[o + k * ne..o + (k + 1) * ne])
                .for_each(|((f, h), u)| *f = h * u);
            let yh = &mut y[k * nc..(k + 1) * nc];
            ops.div_ei_into(&flux, yh);
            yh.iter_mut().for_each(|v| *v = -*v);
            q_apply_into(&ops, &self.qbar_e[k], &flux, &mut qy, &mut tmp);
            ops.grad_ie_into(&rw, &mut gr);
            let gk = g / rho[k];
            for e in 0..ne {
                y[o + k * ne + e] = qy[e] - gk * gr[e];
            }
        }
    }

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.inner_mh(x, y)
    }
}

/// `d2H[V] W` at a general state.
pub fn d2h_apply(model: &Model, v: &LayeredState, w: &LayeredState) -> LayeredState {
    let l = model.layers();
    let mut out = model.zeros();
    let (g, rho) = (model.cfg.g, &model.cfg.rho);
    for k in 0..l {
        let ops = model.ops(k);
        let uw: Vec<f64> = v.u(k).iter().zip(w.u(k)).map(|(a, b)| a * b).collect();
        let kin = ops.interp_e2i(&uw);
        let m = &model.mask(k).cell;
        for i in 0..model.mesh.n_cells {
            let mut s = 0.0;
            for j in 0..l {
                s += rho[k.min(j)] * w.h(j)[i];
            }
            out.h_mut(k)[i] = m[i] * (g * s + rho[k] * kin[i]);
        }
        let he = ops.interp_i2e(v.h(k));
        let we = ops.interp_i2e(w.h(k));
        for e in 0..model.mesh.n_edges {
            out.u_mut(k)[e] = rho[k] * (v.u(k)[e] * we[e] + he[e] * w.u(k)[e]);
        }
    }
    out
}

/// Directional derivative `F'[V; W]` of the conservative tendency.
pub fn full_jacobian_apply(model: &Model, v: &LayeredState, w: &LayeredState) -> crate::Result<LayeredState> {
    let l = model.layers();
    let mesh = &model.mesh;
    let (ne, nv) = (mesh.n_edges, mesh.n_vertices);
    let mut out = model.zeros();
    let g = model.cfg.g;
    let rho = &model.cfg.rho;
    let mut tmp = vec![0.0; ne];
    let mut a = vec![0.0; ne];
    let mut b = vec![0.0; ne];
    for k in 0..l {
        let ops: Ops = model.ops(k);
        let (h, u, wh, wu) = (v.h(k), v.u(k), w.h(k), w.u(k));
        let he = ops.interp_i2e(h);
        let whe = ops.interp_i2e(wh);
        let flux: Vec<f64> = he.iter().zip(u).map(|(h, u)| h * u).collect();
        let dflux: Vec<f64> = (0..ne).map(|e| whe[e] * u[e] + he[e] * wu[e]).collect();
        let dh = ops.div_ei(&dflux);
        out.h_mut(k).iter_mut().zip(&dh).for_each(|(o, d)| *o = -d);

        let q = model.potential_vorticity(k, h, u)?;
        let hv = ops.interp_i2v(h);
        let whv = ops.interp_i2v(wh);
        let cw = ops.curl_ev(wu);
        let act = &model.mask(k).vertex;
        let dq: Vec<f64> = (0..nv)
            .map(|vx| if act[vx] == 1.0 { (cw[vx] - q[vx] * whv[vx]) / hv[vx] } else { 0.0 })
            .collect();
        let qe = ops.interp_v2e(&q);
        let dqe = ops.interp_v2e(&dq);
        q_apply_into(&ops, &dqe, &flux, &mut a, &mut tmp);
        q_apply_into(&ops, &qe, &dflux, &mut b, &mut tmp);

        let uw: Vec<f64> = u.iter().zip(wu).map(|(x, y)| x * y).collect();
        let dk = ops.interp_e2i(&uw);
        let bern: Vec<f64> = (0..mesh.n_cells)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..l {
                    s += rho[k.min(j)] * w.h(j)[i];
                }
                dk[i] + g * s / rho[k]
            })
            .collect();
        let gr = ops.grad_ie(&bern);
        for e in 0..ne {
            out.u_mut(k)[e] = a[e] + b[e] - gr[e];
        }
    }
    Ok(out)
}

/// How the spectral radius `|A_0|` is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusMethod {
    /// Power iteration on `A^2` in the `M_H` inner product.
    Power { max_iter: usize, rel_tol: f64 },
    /// Extreme Ritz value of a skew-Lanczos run with full reorthogonalization.
    Lanczos { m: usize },
}

impl Default for RadiusMethod {
    fn default() -> Self {
        RadiusMethod::Power {
            max_iter: 200,
            rel_tol: 1e-6,
        }
    }
}

/// Deterministic pseudo-random start vector with zero-mean entries.
fn start_vector(n: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Estimate of the largest `|lambda|` of an `inner`-skew operator.
pub fn spectral_radius(op: &dyn LinearOperator, method: RadiusMethod) -> f64 {
    let n = op.dim();
    let mut x = start_vector(n);
    match method {
        RadiusMethod::Power { max_iter, rel_tol } => {
            let nx = op.norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let mut y = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut lam = 0.0f64;
            for _ in 0..max_iter {
                op.apply(&x, &mut y);
                op.apply(&y, &mut z);
                let nz = op.norm(&z);
                if nz == 0.0 {
                    return 0.0;
                }
                let change = (nz - lam).abs() / nz;
                lam = nz;
                x.iter_mut().zip(&z).for_each(|(x, z)| *x = z / nz);
                if change < rel_tol {
                    break;
                }
            }
            lam.sqrt()
        }
        RadiusMethod::Lanczos { m } => {
            let k = KrylovBasis::skew_lanczos(op, &x, m.min(n), Reorth::Always);
            let beta = k.subdiagonal();
            let mm = beta.len() + 1;
            let s = nalgebra::DMatrix::from_fn(mm, mm, |i, j| {
                if i == j + 1 {
                    beta[j]
                } else if j == i + 1 {
                    beta[i]
                } else {
                    0.0
                }
            });
            s.symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
        }
    }
}

