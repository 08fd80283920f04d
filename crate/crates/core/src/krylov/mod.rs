//! Weighted Arnoldi and skew-Lanczos processes and Krylov phi-functions.

mod dense;

pub use dense::{phi_augmented, phi_general_e1, phi_scalar, phi_skew_tridiagonal_e1, phi_taylor, Dissipation};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A linear map together with the inner product it is analysed in.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn inner(&self, x: &[f64], y: &[f64]) -> f64;

    fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }
}

/// Full reorthogonalization schedule for skew-Lanczos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reorth {
    #[default]
    Off,
    Every(usize),
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    Arnoldi,
    SkewLanczos,
}

/// `A V_M = V_M H_M + h_{M+1,M} v_{M+1} e_M^T` in a weighted inner product.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub process: Process,
    /// `M + 1` vectors unless the process broke down.
    pub v: Vec<Vec<f64>>,
    /// Column `m` holds `h_{0..=m+1, m}`.
    pub h: Vec<Vec<f64>>,
    /// `||b||` in the weighted norm.
    pub beta0: f64,
    pub breakdown: bool,
    pub orthogonality_warning: bool,
    pub inner_products: usize,
    pub matvecs: usize,
    pub reorth: Reorth,
}

const BREAKDOWN: f64 = 1e-13;

impl KrylovBasis {
    fn start(op: &dyn LinearOperator, b: &[f64], process: Process, reorth: Reorth) -> Self {
        let beta0 = op.norm(b);
        let v = if beta0 > 0.0 {
            vec![b.iter().map(|x| x / beta0).collect()]
        } else {
            vec![vec![0.0; b.len()]]
        };
        KrylovBasis {
            process,
            v,
            h: Vec::new(),
            beta0,
            breakdown: beta0 == 0.0,
            orthogonality_warning: false,
            inner_products: 1,
            matvecs: 0,
            reorth,
        }
    }

    pub fn arnoldi(op: &dyn LinearOperator, b: &[f64], m: usize) -> Self {
        let mut k = Self::start(op, b, Process::Arnoldi, Reorth::Off);
        k.extend(op, m);
        k
    }

    pub fn skew_lanczos(op: &dyn LinearOperator, b: &[f64], m: usize, reorth: Reorth) -> Self {
        let mut k = Self::start(op, b, Process::SkewLanczos, reorth);
        k.extend(op, m);
        k
    }

    /// Current dimension `M`.
    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// `h_{M+1,M}`, zero after breakdown.
    pub fn h_next(&self) -> f64 {
        self.h.last().map_or(0.0, |c| c[c.len() - 1])
    }

    /// Grow the basis to dimension `m`; existing columns are not touched.
    pub fn extend(&mut self, op: &dyn LinearOperator, m: usize) {
        let n = op.dim();
        while self.dim() < m && !self.breakdown {
            let j = self.dim();
            let mut w = vec![0.0; n];
            op.apply(&self.v[j], &mut w);
            self.matvecs += 1;
            let mut col = vec![0.0; j + 2];
            match self.process {
                Process::Arnoldi => {
                    for i in 0..=j {
                        let hij = op.inner(&self.v[i], &w);
                        self.inner_products += 1;
                        col[i] = hij;
                        w.iter_mut().zip(&self.v[i]).for_each(|(w, v)| *w -= hij * v);
                    }
                }
                Process::SkewLanczos => {
                    if j > 0 {
                        let b = self.h[j - 1][j];
                        col[j - 1] = -b;
                        w.iter_mut().zip(&self.v[j - 1]).for_each(|(w, v)| *w += b * v);
                    }
                    let full = match self.reorth {
                        Reorth::Off => false,
                        Reorth::Always => true,
                        Reorth::Every(k) => k > 0 && (j + 1) % k == 0,
                    };
                    if full {
                        // both vectors of the recurrence are cleaned, otherwise
                        // the error in v_j is fed straight back
                        if j > 0 {
                            let mut vj = std::mem::take(&mut self.v[j]);
                            for i in 0..j {
                                let c = op.inner(&self.v[i], &vj);
                                self.inner_products += 1;
                                vj.iter_mut().zip(&self.v[i]).for_each(|(x, v)| *x -= c * v);
                            }
                            let nv = op.norm(&vj);
                            self.inner_products += 1;
                            vj.iter_mut().for_each(|x| *x /= nv);
                            self.v[j] = vj;
                        }
                        for i in 0..=j {
                            let c = op.inner(&self.v[i], &w);
                            self.inner_products += 1;
                            w.iter_mut().zip(&self.v[i]).for_each(|(w, v)| *w -= c * v);
                        }
                    }
                }
            }
            let hn = op.norm(&w);
            self.inner_products += 1;
            col[j + 1] = hn;
            self.h.push(col);
            if hn <= BREAKDOWN * self.column_scale() {
                self.breakdown = true;
                *self.h.last_mut().unwrap().last_mut().unwrap() = 0.0;
            } else {
                self.v.push(w.iter().map(|x| x / hn).collect());
            }
            if self.process == Process::SkewLanczos && self.v.len() > 2 {
                let c = op.inner(&self.v[0], self.v.last().unwrap()).abs();
                if c > 1e-6 && !self.orthogonality_warning {
                    log::warn!("skew-Lanczos lost orthogonality at step {}: {c:e}", self.dim());
                    self.orthogonality_warning = true;
                }
            }
        }
    }

    fn column_scale(&self) -> f64 {
        let c = self.h.last().unwrap();
        let s = c[..c.len() - 1].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let prev = self.h.iter().rev().nth(1).map_or(0.0, |c| c[c.len() - 1]);
        s.max(prev).max(1e-300)
    }

    /// The square Hessenberg matrix `H_M`.
    pub fn hessenberg(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| if i < self.h[j].len() { self.h[j][i] } else { 0.0 })
    }

    /// Subdiagonal of a skew-Lanczos `H_M`.
    pub fn subdiagonal(&self) -> Vec<f64> {
        (0..self.dim().saturating_sub(1)).map(|j| self.h[j][j + 1]).collect()
    }

    /// `phi_s(c dt H_M) e_1` with optional dissipation.
    pub fn small_phi(&self, s: usize, dt: f64, c: f64, diss: Option<Dissipation>) -> Vec<f64> {
        match self.process {
            Process::SkewLanczos => phi_skew_tridiagonal_e1(&self.subdiagonal(), s, dt, c, diss),
            Process::Arnoldi => phi_general_e1(&self.hessenberg(), s, dt, c, diss),
        }
    }

    /// Relative residual estimate `c dt h_{M+1,M} |e_M^T phi_s e_1|`.
    pub fn residual_estimate(&self, s: usize, dt: f64, c: f64, diss: Option<Dissipation>) -> f64 {
        if self.dim() == 0 {
            return f64::INFINITY;
        }
        let y = self.small_phi(s, dt, c, diss);
        (c * dt * self.h_next() * y[y.len() - 1]).abs()
    }

    /// `||b|| V_M phi_s(c dt H_M) e_1`.
    pub fn apply_phi(&self, s: usize, dt: f64, c: f64, diss: Option<Dissipation>) -> Vec<f64> {
        let n = self.v[0].len();
        let mut out = vec![0.0; n];
        if self.beta0 == 0.0 {
            return out;
        }
        if self.dim() == 0 {
            let f = 1.0 / (1..=s).map(|k| k as f64).product::<f64>();
            out.iter_mut().zip(&self.v[0]).for_each(|(o, v)| *o = self.beta0 * f * v);
            return out;
        }
        let y = self.small_phi(s, dt, c, diss);
        for (yk, vk) in y.iter().zip(&self.v) {
            let a = self.beta0 * yk;
            out.iter_mut().zip(vk).for_each(|(o, v)| *o += a * v);
        }
        out
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthogonality_error(&self, op: &dyn LinearOperator) -> f64 {
        let m = self.dim().min(self.v.len());
        let mut err = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let g = op.inner(&self.v[i], &self.v[j]);
                err = err.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        err
    }
}

/// How the Krylov dimension is chosen for one phi evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MPolicy {
    Fixed(usize),
    /// Stop once the residual estimate drops below `tol`, checked from `min` on.
    Adaptive { tol: f64, min: usize, max: usize },
}

/// Settings shared by all phi evaluations of a stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    pub process: Process,
    pub reorth: Reorth,
    pub policy: MPolicy,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings {
            process: Process::SkewLanczos,
            reorth: Reorth::Off,
            policy: MPolicy::Adaptive {
                tol: 1e-6,
                min: 1,
                max: 1000,
            },
        }
    }
}

/// One requested evaluation `phi_s(c dt A) b` on a shared basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRequest {
    pub s: usize,
    pub c: f64,
}

/// Build one basis for `b` sized so that every request is resolved.
pub fn build_basis(
    op: &dyn LinearOperator,
    b: &[f64],
    dt: f64,
    requests: &[PhiRequest],
    diss: Option<Dissipation>,
    settings: &KrylovSettings,
) -> Result<KrylovBasis> {
    let mut basis = match settings.process {
        Process::Arnoldi => KrylovBasis::arnoldi(op, b, 0),
        Process::SkewLanczos => KrylovBasis::skew_lanczos(op, b, 0, settings.reorth),
    };
    let cap = op.dim();
    match settings.policy {
        MPolicy::Fixed(m) => basis.extend(op, m.min(cap)),
        MPolicy::Adaptive { tol, min, max } => {
            let max = max.min(cap);
            basis.extend(op, min.min(max).max(1));
            loop {
                let worst = requests
                    .iter()
                    .map(|r| basis.residual_estimate(r.s, dt, r.c, diss))
                    .fold(0.0f64, f64::max);
                if basis.breakdown || worst < tol {
                    break;
                }
                if basis.dim() >= max {
                    if max == cap {
                        break;
                    }
                    return Err(Error::KrylovNotConverged {
                        dim: basis.dim(),
                        residual: worst,
                    });
                }
                let next = basis.dim() + 1;
                basis.extend(op, next);
            }
        }
    }
    Ok(basis)
}

/// `phi_s(dt A) b` through a Krylov basis.
pub fn phi_apply(
    op: &dyn LinearOperator,
    s: usize,
    dt: f64,
    b: &[f64],
    settings: &KrylovSettings,
) -> Result<(Vec<f64>, KrylovBasis)> {
    phi_gamma_apply(op, s, dt, b, None, settings)
}

/// As [`phi_apply`] with the dissipative modification applied to `H_M`.
pub fn phi_gamma_apply(
    op: &dyn LinearOperator,
    s: usize,
    dt: f64,
    b: &[f64],
    diss: Option<Dissipation>,
    settings: &KrylovSettings,
) -> Result<(Vec<f64>, KrylovBasis)> {
    let basis = build_basis(op, b, dt, &[PhiRequest { s, c: 1.0 }], diss, settings)?;
    Ok((basis.apply_phi(s, dt, 1.0, diss), basis))
}

/// Weighted inner product `sum w x y` with a fixed summation order.
pub fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// Dense matrix with a diagonal weight, for tests and small problems.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub a: DMatrix<f64>,
    /// Symmetric positive definite Gram matrix of the inner product.
    pub m: DMatrix<f64>,
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.a.nrows() {
            y[i] = (0..self.a.ncols()).map(|j| self.a[(i, j)] * x[j]).sum();
        }
    }

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m.nrows() {
            for j in 0..self.m.ncols() {
                s += x[i] * self.m[(i, j)] * y[j];
            }
        }
        s
    }
}
