use num_complex::Complex64;

use crate::krylov::phi_scalar;

/// `coef * phi_s(c z)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerm {
    pub coef: f64,
    pub s: usize,
    pub c: f64,
}

impl PhiTerm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coef * phi_scalar(self.s, self.c * z)
    }
}

/// Exponential Runge-Kutta tableau in remainder form.
///
/// Only the coefficients acting on remainders of stages `j >= 2` are stored; the first
/// column follows from `sum_j a_ij = c_i phi_1(c_i z)` and `sum_j b_j = phi_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub c: Vec<f64>,
    /// `a[i][j]` for `i > j >= 1` (0-based stages).
    pub a: Vec<Vec<Vec<PhiTerm>>>,
    pub b: Vec<Vec<PhiTerm>>,
}

fn t(coef: f64, s: usize, c: f64) -> PhiTerm {
    PhiTerm { coef, s, c }
}

impl Tableau {
    pub fn euler() -> Self {
        Tableau {
            c: vec![0.0],
            a: vec![vec![]],
            b: vec![vec![]],
        }
    }

    pub fn etd2(c2: f64) -> Self {
        Tableau {
            c: vec![0.0, c2],
            a: vec![vec![], vec![vec![]]],
            b: vec![vec![], vec![t(1.0 / c2, 2, 1.0)]],
        }
    }

    pub fn etd3(c2: f64, c3: f64) -> Self {
        let g = etd3_gamma(c2, c3);
        let d = g * c2 + c3;
        Tableau {
            c: vec![0.0, c2, c3],
            a: vec![
                vec![],
                vec![vec![]],
                vec![vec![], vec![t(g * c2, 2, c2), t(c3 * c3 / c2, 2, c3)]],
            ],
            b: vec![vec![], vec![t(g / d, 2, 1.0)], vec![t(1.0 / d, 2, 1.0)]],
        }
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// `a_ij(z)` including the implied first column.
    pub fn eval_a(&self, i: usize, j: usize, z: Complex64) -> Complex64 {
        if j >= i {
            return Complex64::new(0.0, 0.0);
        }
        if j == 0 {
            let ci = self.c[i];
            let rest: Complex64 = (1..i).map(|j| self.eval_a(i, j, z)).sum();
            return ci * phi_scalar(1, ci * z) - rest;
        }
        self.a[i][j].iter().map(|p| p.eval(z)).sum()
    }

    pub fn eval_b(&self, j: usize, z: Complex64) -> Complex64 {
        if j == 0 {
            let rest: Complex64 = (1..self.stages()).map(|j| self.eval_b(j, z)).sum();
            return phi_scalar(1, z) - rest;
        }
        self.b[j].iter().map(|p| p.eval(z)).sum()
    }
}

/// Free parameter of the three-stage method.
pub fn etd3_gamma(c2: f64, c3: f64) -> f64 {
    if (c3 - 2.0 / 3.0).abs() < 1e-14 {
        0.0
    } else {
        -(3.0 * c3 * c3 - 2.0 * c3) / (3.0 * c2 * c2 - 2.0 * c2)
    }
}
