use std::f64::consts::E;

use mlswe::krylov::*;
use mlswe::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `A = W^{-1} S` with `S` skew and `W` diagonal positive: skew in `<x, y>_W`.
fn skew_operator(n: usize, seed: u64, scale: f64) -> DenseOperator {
    let mut r = rng(seed);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let x = r.gen_range(-1.0..1.0) * scale;
            s[(i, j)] = x;
            s[(j, i)] = -x;
        }
    }
    let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..2.0)).collect();
    let a = DMatrix::from_fn(n, n, |i, j| s[(i, j)] / w[i]);
    DenseOperator {
        a,
        m: DMatrix::from_diagonal(&DVector::from_vec(w)),
    }
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Dense `phi_s(X) b` from the exponential of `[[X, b, 0..], [0, J]]` with
/// `J` the shift block, assembled here independently of the library.
fn oracle_phi(x: &DMatrix<f64>, b: &[f64], s: usize) -> Vec<f64> {
    let n = x.nrows();
    let bv = DVector::from_column_slice(b);
    if s == 0 {
        return (x.clone().exp() * bv).iter().copied().collect();
    }
    let mut aug = DMatrix::zeros(n + s, n + s);
    aug.view_mut((0, 0), (n, n)).copy_from(x);
    for i in 0..n {
        aug[(i, n)] = b[i];
    }
    for j in 0..s - 1 {
        aug[(n + j, n + j + 1)] = 1.0;
    }
    let e = aug.exp();
    (0..n).map(|i| e[(i, n + s - 1)]).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / n.max(1e-300)
}

fn fixed(m: usize, reorth: Reorth) -> KrylovSettings {
    KrylovSettings {
        process: Process::SkewLanczos,
        reorth,
        policy: MPolicy::Fixed(m),
    }
}

#[test]
fn scalar_phi_values() {
    for s in 0..6 {
        let v = phi_scalar(s, Complex64::new(0.0, 0.0));
        assert!((v.re - 1.0 / fact(s)).abs() < 1e-16 && v.im == 0.0);
    }
    let p1 = phi_scalar(1, Complex64::new(1.0, 0.0));
    assert!((p1.re - (E - 1.0)).abs() < 1e-15);
    assert!((p1.re - 1.718281828).abs() < 1e-9);
    let p0 = phi_scalar(0, Complex64::new(0.0, 1.3));
    assert!((p0 - Complex64::new(0.0, 1.3).exp()).norm() < 1e-15);
}

#[test]
fn scalar_phi_recurrence() {
    let mut r = rng(1);
    for _ in 0..20 {
        let z = Complex64::new(r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0));
        for s in 0..5 {
            let lhs = phi_scalar(s + 1, z);
            let rhs = (phi_scalar(s, z) - 1.0 / fact(s)) / z;
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1e-3 / fact(s + 1)), "{z} {s}");
        }
    }
}

#[test]
fn arnoldi_single_step() {
    let op = skew_operator(8, 2, 1.0);
    let mut op = op;
    op.a += DMatrix::identity(8, 8) * 0.7;
    let b = random_vec(8, 3);
    let k = KrylovBasis::arnoldi(&op, &b, 1);
    let mut ab = vec![0.0; 8];
    op.apply(&b, &mut ab);
    let expect = op.inner(&b, &ab) / op.inner(&b, &b);
    assert!((k.hessenberg()[(0, 0)] - expect).abs() < 1e-14);
}

#[test]
fn arnoldi_full_dimension_is_similar() {
    let n = 50;
    let mut r = rng(4);
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let op = DenseOperator {
        a: a.clone(),
        m: DMatrix::identity(n, n),
    };
    let k = KrylovBasis::arnoldi(&op, &random_vec(n, 5), n);
    assert_eq!(k.dim(), n);
    let ea = a.complex_eigenvalues();
    let eh = k.hessenberg().complex_eigenvalues();
    for x in ea.iter() {
        let d = eh.iter().map(|y| (x - y).norm()).fold(f64::MAX, f64::min);
        assert!(d < 1e-8 * ea.iter().map(|z| z.norm()).fold(0.0, f64::max), "{x}");
    }
}

#[test]
fn arnoldi_decomposition_identity() {
    let n = 40;
    let op = skew_operator(n, 6, 1.0);
    let m = 15;
    let k = KrylovBasis::arnoldi(&op, &random_vec(n, 7), m);
    let vm = DMatrix::from_fn(n, m + 1, |i, j| k.v[j][i]);
    let ht = DMatrix::from_fn(m + 1, m, |i, j| if i < k.h[j].len() { k.h[j][i] } else { 0.0 });
    let av = &op.a * vm.columns(0, m);
    let res = (av - &vm * ht).amax();
    assert!(res < 1e-9 * op.a.amax() * n as f64);
}

#[test]
fn eigenvector_gives_breakdown() {
    let n = 6;
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, 4.0, -1.0]));
    let op = DenseOperator {
        a: a.clone(),
        m: DMatrix::identity(n, n),
    };
    let mut b = vec![0.0; n];
    b[2] = 2.0;
    let k = KrylovBasis::arnoldi(&op, &b, 5);
    assert!(k.breakdown);
    assert_eq!(k.dim(), 1);
    let y = k.apply_phi(1, 0.3, 1.0, None);
    let exact = 2.0 * ((0.9f64).exp() - 1.0) / 0.9;
    assert!((y[2] - exact).abs() < 1e-14 * exact);
    assert!(y.iter().enumerate().all(|(i, x)| i == 2 || *x == 0.0));
}

#[test]
fn rotation_generator() {
    let w = 2.75;
    let op = DenseOperator {
        a: DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]),
        m: DMatrix::identity(2, 2),
    };
    let k = KrylovBasis::skew_lanczos(&op, &[1.0, 0.0], 2, Reorth::Off);
    let h = k.hessenberg();
    assert_eq!(h[(0, 1)], -w);
    assert_eq!(h[(1, 0)], w);
    assert_eq!(h[(0, 0)], 0.0);
    assert_eq!(h[(1, 1)], 0.0);
}

#[test]
fn lanczos_agrees_with_arnoldi() {
    let n = 200;
    let op = skew_operator(n, 8, 1.0);
    let b = random_vec(n, 9);
    let m = 20;
    let kl = KrylovBasis::skew_lanczos(&op, &b, m, Reorth::Every(20));
    let ka = KrylovBasis::arnoldi(&op, &b, m);
    let d = (kl.hessenberg() - ka.hessenberg()).amax();
    assert!(d < 1e-8 * ka.hessenberg().amax(), "{d}");
    let hl = kl.hessenberg();
    assert!((&hl + hl.transpose()).amax() == 0.0);
    for i in 0..m {
        for j in 0..m {
            if i.abs_diff(j) > 1 {
                assert_eq!(hl[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn inner_product_counts() {
    let n = 200;
    let op = skew_operator(n, 10, 1.0);
    let b = random_vec(n, 11);
    let mut lanczos = Vec::new();
    let mut arnoldi = Vec::new();
    for m in [10usize, 20, 40] {
        lanczos.push(KrylovBasis::skew_lanczos(&op, &b, m, Reorth::Off).inner_products);
        arnoldi.push(KrylovBasis::arnoldi(&op, &b, m).inner_products);
    }
    assert_eq!(lanczos, vec![11, 21, 41]);
    for (m, a) in [10usize, 20, 40].iter().zip(&arnoldi) {
        assert_eq!(*a, 1 + m * (m + 1) / 2 + m);
    }
}

#[test]
fn orthogonality_with_reorthogonalization() {
    let n = 200;
    let op = skew_operator(n, 12, 1.0);
    let k = KrylovBasis::skew_lanczos(&op, &random_vec(n, 13), 60, Reorth::Every(20));
    assert!(k.orthogonality_error(&op) < 1e-10);
    let k = KrylovBasis::skew_lanczos(&op, &random_vec(n, 13), 150, Reorth::Every(10));
    assert!(k.orthogonality_error(&op) < 1e-10);
    // without any pass the recurrence drifts once Ritz values converge
    let k = KrylovBasis::skew_lanczos(&op, &random_vec(n, 13), 100, Reorth::Off);
    assert!(k.orthogonality_error(&op) > 1e-6);
    let k = KrylovBasis::skew_lanczos(&op, &random_vec(n, 13), 60, Reorth::Always);
    assert!(k.orthogonality_error(&op) < 1e-10);
    let k = KrylovBasis::arnoldi(&op, &random_vec(n, 13), 60);
    assert!(k.orthogonality_error(&op) < 1e-10);
}

#[test]
fn phi_matches_dense_oracle() {
    let n = 200;
    let op = skew_operator(n, 14, 0.3);
    let b = random_vec(n, 15);
    let dt = 0.8;
    for s in 0..3 {
        let (y, _) = phi_apply(&op, s, dt, &b, &fixed(n, Reorth::Always)).unwrap();
        let exact = oracle_phi(&(&op.a * dt), &b, s);
        assert!(rel_err(&y, &exact) < 1e-8, "s {s} {}", rel_err(&y, &exact));
        let (y, _) = phi_apply(
            &op,
            s,
            dt,
            &b,
            &KrylovSettings {
                process: Process::Arnoldi,
                ..fixed(n, Reorth::Off)
            },
        )
        .unwrap();
        assert!(rel_err(&y, &exact) < 1e-8);
    }
}

#[test]
fn adaptive_policy_meets_tolerance() {
    let n = 200;
    let op = skew_operator(n, 16, 0.3);
    let b = random_vec(n, 17);
    let dt = 0.5;
    let st = KrylovSettings::default();
    for s in 0..3 {
        let (y, k) = phi_apply(&op, s, dt, &b, &st).unwrap();
        assert!(k.dim() < n);
        let exact = oracle_phi(&(&op.a * dt), &b, s);
        assert!(rel_err(&y, &exact) < 1e-5);
    }
}

#[test]
fn adaptive_cap_is_an_error() {
    let n = 100;
    let op = skew_operator(n, 18, 1.0);
    let st = KrylovSettings {
        policy: MPolicy::Adaptive {
            tol: 1e-12,
            min: 1,
            max: 5,
        },
        ..Default::default()
    };
    let r = phi_apply(&op, 1, 50.0, &random_vec(n, 19), &st);
    match r {
        Err(Error::KrylovNotConverged { dim, residual }) => {
            assert_eq!(dim, 5);
            assert!(residual > 1e-12);
        }
        other => panic!("expected a convergence error, got {:?}", other.map(|x| x.1.dim())),
    }
}

#[test]
fn zero_step() {
    let op = skew_operator(30, 20, 1.0);
    let b = random_vec(30, 21);
    for s in 0..4 {
        let (y, _) = phi_apply(&op, s, 0.0, &b, &KrylovSettings::default()).unwrap();
        for (y, b) in y.iter().zip(&b) {
            assert!((y - b / fact(s)).abs() < 1e-14);
        }
    }
}

#[test]
fn zero_vector() {
    let op = skew_operator(10, 22, 1.0);
    let (y, k) = phi_apply(&op, 1, 1.0, &[0.0; 10], &KrylovSettings::default()).unwrap();
    assert!(y.iter().all(|&x| x == 0.0));
    assert!(k.breakdown);
}

#[test]
fn exponential_preserves_the_weighted_norm() {
    let n = 150;
    let op = skew_operator(n, 23, 1.0);
    let b = random_vec(n, 24);
    let st = KrylovSettings {
        policy: MPolicy::Adaptive {
            tol: 1e-12,
            min: 1,
            max: n,
        },
        reorth: Reorth::Every(20),
        ..Default::default()
    };
    let (y, _) = phi_apply(&op, 0, 3.0, &b, &st).unwrap();
    assert!((op.norm(&y) - op.norm(&b)).abs() < 1e-10 * op.norm(&b));
}

#[test]
fn invariant_subspace_is_exact() {
    // block diagonal rotations; b lives in the first block
    let n = 8;
    let mut a = DMatrix::zeros(n, n);
    for (k, w) in [1.5, 0.3, 2.0, 4.0].iter().enumerate() {
        a[(2 * k, 2 * k + 1)] = -w;
        a[(2 * k + 1, 2 * k)] = *w;
    }
    let op = DenseOperator {
        a: a.clone(),
        m: DMatrix::identity(n, n),
    };
    let mut b = vec![0.0; n];
    b[0] = 0.6;
    b[1] = -0.8;
    let (y, k) = phi_apply(&op, 0, 2.0, &b, &fixed(6, Reorth::Off)).unwrap();
    assert!(k.breakdown);
    assert_eq!(k.dim(), 2);
    let (c, s) = ((3.0f64).cos(), (3.0f64).sin());
    let exact = [c * 0.6 + s * 0.8, s * 0.6 - c * 0.8];
    assert!((y[0] - exact[0]).abs() < 1e-12 && (y[1] - exact[1]).abs() < 1e-12);
    assert!(y[2..].iter().all(|x| x.abs() < 1e-15));
}

/// Terminal value of `y' = X y + t^{s-1}/(s-1)! b`, `y(0) = 0` (or `y(0) = b`
/// for `s = 0`) on `[0, 1]` by classical RK4 with a tiny step.
fn ode_oracle(x: &DMatrix<f64>, b: &[f64], s: usize) -> Vec<f64> {
    let bv = DVector::from_column_slice(b);
    let rhs = |t: f64, y: &DVector<f64>| -> DVector<f64> {
        let mut d = x * y;
        if s > 0 {
            d += &bv * (t.powi(s as i32 - 1) / fact(s - 1));
        }
        d
    };
    let mut y = if s == 0 { bv.clone() } else { DVector::zeros(b.len()) };
    let steps = 4000;
    let h = 1.0 / steps as f64;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + h / 2.0, &(&y + &k1 * (h / 2.0)));
        let k3 = rhs(t + h / 2.0, &(&y + &k2 * (h / 2.0)));
        let k4 = rhs(t + h, &(&y + &k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y.iter().copied().collect()
}

#[test]
fn phi_is_the_terminal_value_of_the_forced_ode() {
    let n = 12;
    let op = skew_operator(n, 25, 1.0);
    let b = random_vec(n, 26);
    let dt = 1.7;
    for s in 0..4 {
        let (y, _) = phi_apply(&op, s, dt, &b, &fixed(n, Reorth::Always)).unwrap();
        let exact = ode_oracle(&(&op.a * dt), &b, s);
        assert!(rel_err(&y, &exact) < 1e-8, "{s} {}", rel_err(&y, &exact));
    }
}

#[test]
fn dense_paths_agree() {
    let mut r = rng(27);
    for m in [1usize, 2, 5, 12] {
        let beta: Vec<f64> = (0..m - 1).map(|_| r.gen_range(0.1..2.0)).collect();
        let h = DMatrix::from_fn(m, m, |i, j| {
            if i == j + 1 {
                beta[j]
            } else if j == i + 1 {
                -beta[i]
            } else {
                0.0
            }
        });
        for s in 0..4 {
            for diss in [None, Some(Dissipation { gamma: 3.0, p: 2 })] {
                let a = phi_skew_tridiagonal_e1(&beta, s, 0.9, 0.6, diss);
                let b = phi_general_e1(&h, s, 0.9, 0.6, diss);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-12, "{m} {s} {x} {y}");
                }
            }
            let t = phi_taylor(&(&h * 0.5), s);
            let e1 = phi_general_e1(&h, s, 0.5, 1.0, None);
            for i in 0..m {
                assert!((t[(i, 0)] - e1[i]).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn huge_gamma_recovers_plain_phi() {
    let n = 80;
    let op = skew_operator(n, 28, 1.0);
    let b = random_vec(n, 29);
    let st = fixed(40, Reorth::Every(20));
    for s in 0..3 {
        let (a, _) = phi_apply(&op, s, 0.7, &b, &st).unwrap();
        let (g, _) = phi_gamma_apply(&op, s, 0.7, &b, Some(Dissipation { gamma: 1e9, p: 2 }), &st).unwrap();
        assert!(rel_err(&g, &a) < 1e-12);
    }
}

#[test]
fn dissipation_damps_a_rotation() {
    for (theta, gamma) in [(1.0, 1.0), (2.0, 3.0), (0.5, 0.4)] {
        let op = DenseOperator {
            a: DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]),
            m: DMatrix::identity(2, 2),
        };
        for c in [0.5, 1.0] {
            let k = KrylovBasis::skew_lanczos(&op, &[1.0, 0.0], 2, Reorth::Off);
            let y = k.apply_phi(0, 1.0, c, Some(Dissipation { gamma, p: 2 }));
            let amp = (y[0] * y[0] + y[1] * y[1]).sqrt();
            let expect = (-c * theta.powi(4) / gamma.powi(4)).exp();
            assert!((amp - expect).abs() < 1e-13, "{amp} {expect}");
        }
    }
}

#[test]
fn gamma_keeps_the_basis() {
    let n = 60;
    let op = skew_operator(n, 30, 1.0);
    let b = random_vec(n, 31);
    let st = fixed(25, Reorth::Off);
    let (_, k1) = phi_apply(&op, 1, 0.5, &b, &st).unwrap();
    let (_, k2) = phi_gamma_apply(&op, 1, 0.5, &b, Some(Dissipation { gamma: 2.0, p: 2 }), &st).unwrap();
    assert_eq!(k1.v, k2.v);
    assert_eq!(k1.h, k2.h);
}

#[test]
fn extension_keeps_prefix_bitwise() {
    let n = 100;
    let op = skew_operator(n, 32, 1.0);
    let b = random_vec(n, 33);
    let mut k = KrylovBasis::skew_lanczos(&op, &b, 10, Reorth::Off);
    let (v, h) = (k.v.clone(), k.h.clone());
    k.extend(&op, 25);
    assert_eq!(k.dim(), 25);
    for (a, b) in v.iter().zip(&k.v) {
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
    assert_eq!(&k.h[..10], &h[..]);
    let fresh = KrylovBasis::skew_lanczos(&op, &b, 25, Reorth::Off);
    assert_eq!(fresh.v, k.v);
}

#[test]
fn one_basis_serves_several_requests() {
    let n = 120;
    let op = skew_operator(n, 34, 0.5);
    let b = random_vec(n, 35);
    let reqs = [PhiRequest { s: 1, c: 0.5 }, PhiRequest { s: 2, c: 1.0 }, PhiRequest { s: 1, c: 1.0 }];
    let st = KrylovSettings::default();
    let k = build_basis(&op, &b, 2.0, &reqs, None, &st).unwrap();
    for r in reqs {
        let y = k.apply_phi(r.s, 2.0, r.c, None);
        let exact = oracle_phi(&(&op.a * (2.0 * r.c)), &b, r.s);
        assert!(rel_err(&y, &exact) < 1e-5);
        assert!(k.residual_estimate(r.s, 2.0, r.c, None) < 1e-6);
    }
    let other = build_basis(&op, &random_vec(n, 36), 2.0, &reqs, None, &st).unwrap();
    assert_ne!(other.v[0], k.v[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recurrence_random_complex(re in -6.0f64..6.0, im in -6.0f64..6.0, s in 0usize..6) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 1e-3);
        let lhs = phi_scalar(s + 1, z);
        let rhs = (phi_scalar(s, z) - 1.0 / fact(s)) / z;
        prop_assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm().max(1.0 / fact(s + 1)));
    }

    #[test]
    fn lanczos_exponential_is_isometric(seed in any::<u64>(), dt in 0.01f64..5.0) {
        let op = skew_operator(40, seed, 1.0);
        let b = random_vec(40, seed ^ 0xff);
        let st = KrylovSettings { reorth: Reorth::Always, policy: MPolicy::Fixed(40), ..Default::default() };
        let (y, _) = phi_apply(&op, 0, dt, &b, &st).unwrap();
        prop_assert!((op.norm(&y) - op.norm(&b)).abs() <= 1e-10 * op.norm(&b));
    }
}
