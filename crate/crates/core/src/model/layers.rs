use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Summation, difference and density matrices of an `L`-layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMatrices {
    /// `eta = T h + b`: `T[k][l] = 1` for `l >= k`.
    pub t: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// `R = T^T diag(drho) T`, equal to `rho[min(k, l)]`.
    pub r: DMatrix<f64>,
    pub drho: Vec<f64>,
}

impl LayerMatrices {
    pub fn new(rho: &[f64]) -> Self {
        let l = rho.len();
        let t = DMatrix::from_fn(l, l, |k, m| if m >= k { 1.0 } else { 0.0 });
        let d = DMatrix::from_fn(l, l, |k, m| {
            if m == k {
                1.0
            } else if m == k + 1 {
                -1.0
            } else {
                0.0
            }
        });
        let drho: Vec<f64> = (0..l).map(|k| rho[k] - if k > 0 { rho[k - 1] } else { 0.0 }).collect();
        let r = t.transpose() * DMatrix::from_diagonal(&DVector::from_vec(drho.clone())) * &t;
        LayerMatrices { t, d, r, drho }
    }
}

/// Eigenpairs of `g diag(h0 / rho) R`, fastest mode first.
///
/// The eigenvectors are scaled to unit sum of absolute values.
pub fn vertical_modes(h0: &[f64], rho: &[f64], g: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let l = h0.len();
    let r = LayerMatrices::new(rho).r;
    let s: Vec<f64> = (0..l).map(|k| (g * h0[k] / rho[k]).sqrt()).collect();
    let sym = DMatrix::from_fn(l, l, |i, j| s[i] * r[(i, j)] * s[j]);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = (0..l).map(|i| s[i] * eig.eigenvectors[(i, k)]).collect();
            let n: f64 = v.iter().map(|x| x.abs()).sum();
            let sgn = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            v.iter_mut().for_each(|x| *x *= sgn / n);
            v
        })
        .collect();
    (values, vectors)
}
