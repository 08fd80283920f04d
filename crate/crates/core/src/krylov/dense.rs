//! Small dense phi-functions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Scalar `phi_s(z) = sum_k z^k / (k+s)!`.
pub fn phi_scalar(s: usize, z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        let mut term = Complex64::new(1.0 / factorial(s), 0.0);
        let mut sum = term;
        for k in 1..40 {
            term = term * z / (k + s) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let mut p = z.exp();
        for k in 0..s {
            p = (p - 1.0 / factorial(k)) / z;
        }
        p
    }
}

/// Artificial dissipation: the argument `c z` becomes `c (z - (-z^2/gamma^2)^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    pub gamma: f64,
    pub p: u32,
}

impl Dissipation {
    pub fn modify(&self, z: Complex64) -> Complex64 {
        z - (-(z * z) / (self.gamma * self.gamma)).powu(self.p)
    }

    pub fn modify_matrix(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = -(z * z) / (self.gamma * self.gamma);
        let base = w.clone();
        for _ in 1..self.p {
            w = &w * &base;
        }
        z - w
    }
}

/// `phi_s(c (Z - diss)) e_1` for `Z = dt H`, `H` skew tridiagonal with
/// subdiagonal `beta`, through the eigendecomposition of the symmetric
/// tridiagonal matrix with the same off-diagonal.
pub fn phi_skew_tridiagonal_e1(beta: &[f64], s: usize, dt: f64, c: f64, diss: Option<Dissipation>) -> Vec<f64> {
    let m = beta.len() + 1;
    let sym = DMatrix::from_fn(m, m, |i, j| {
        if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(sym);
    // H = D (-i S) D^{-1} with D = diag(i^k).
    let f: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| {
            let z = Complex64::new(0.0, -dt * lam);
            let w = match diss {
                Some(d) => d.modify(z),
                None => z,
            };
            phi_scalar(s, c * w)
        })
        .collect();
    let q = &eig.eigenvectors;
    let ipow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    (0..m)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += f[j] * (q[(k, j)] * q[(0, j)]);
            }
            (ipow[k % 4] * acc).re
        })
        .collect()
}

/// `phi_s(X)` applied to the columns of `B` through the exponential of the
/// augmented block matrix `[[X, B, 0], [0, 0, I], [0, 0, 0]]`.
pub fn phi_augmented(x: &DMatrix<f64>, b: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let n = x.nrows();
    if s == 0 {
        return x.clone().exp() * b;
    }
    let q = b.ncols();
    let size = n + s * q;
    let mut aug = DMatrix::zeros(size, size);
    aug.view_mut((0, 0), (n, n)).copy_from(x);
    aug.view_mut((0, n), (n, q)).copy_from(b);
    for j in 1..s {
        for c in 0..q {
            aug[(n + (j - 1) * q + c, n + j * q + c)] = 1.0;
        }
    }
    let e = aug.exp();
    e.view((0, n + (s - 1) * q), (n, q)).into_owned()
}

/// `phi_s(c (Z - diss)) e_1` for a general small matrix `Z = dt H`.
pub fn phi_general_e1(h: &DMatrix<f64>, s: usize, dt: f64, c: f64, diss: Option<Dissipation>) -> Vec<f64> {
    let z = h * dt;
    let x = match diss {
        Some(d) => d.modify_matrix(&z),
        None => z,
    } * c;
    let mut e1 = DMatrix::zeros(h.nrows(), 1);
    e1[(0, 0)] = 1.0;
    phi_augmented(&x, &e1, s).column(0).iter().copied().collect()
}

/// Dense `phi_s(X)` by a truncated Taylor series, for moderate `||X||`.
pub fn phi_taylor(x: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let mut term = DMatrix::identity(n, n) / factorial(s);
    let mut sum = term.clone();
    for k in 1..400 {
        term = (&term * x) / (k + s) as f64;
        sum += &term;
        if term.amax() < 1e-20 * sum.amax() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_zero_is_reciprocal_factorial() {
        for s in 0..5 {
            let v = phi_scalar(s, Complex64::new(0.0, 0.0));
            assert!((v.re - 1.0 / factorial(s)).abs() < 1e-16);
        }
    }

    #[test]
    fn phi1_at_one() {
        let v = phi_scalar(1, Complex64::new(1.0, 0.0));
        assert!((v.re - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!((v.re - 1.718281828).abs() < 1e-9);
    }

    #[test]
    fn augmented_matches_scalar() {
        let x = DMatrix::from_element(1, 1, -0.7);
        let b = DMatrix::from_element(1, 1, 1.0);
        for s in 0..4 {
            let a = phi_augmented(&x, &b, s)[(0, 0)];
            let r = phi_scalar(s, Complex64::new(-0.7, 0.0)).re;
            assert!((a - r).abs() < 1e-14, "s = {s}: {a} vs {r}");
        }
    }
}
