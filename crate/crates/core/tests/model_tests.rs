use std::sync::Arc;

use mlswe::mesh::{build_planar_hex_mesh, build_spherical_mesh, Mesh};
use mlswe::model::{q_apply_into, vector_laplacian, vertical_modes, LayerMatrices, LayeredState, Model, ModelConfig, Terms};
use mlswe::trisk_ops::{inner_e, inner_i};
use mlswe::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn planar() -> Arc<Mesh> {
    Arc::new(build_planar_hex_mesh(8, 8, 20e3).unwrap())
}

/// Three layers over a bumpy bottom with an island and a shelf where the
/// deepest layer vanishes.
fn bumpy_model(seed: u64) -> Model {
    let mesh = planar();
    let mut r = rng(seed);
    let mut cfg = ModelConfig::flat(&mesh, 3000.0, vec![1025.0, 1026.5, 1028.0], 1e-4);
    for (i, b) in cfg.b.iter_mut().enumerate() {
        *b = -3000.0 + r.gen_range(-200.0..200.0);
        if i % 13 == 0 {
            *b = -1500.0;
        }
    }
    cfg.b[17] = 10.0;
    cfg.f = (0..mesh.n_vertices).map(|_| 1e-4 + r.gen_range(-2e-5..2e-5)).collect();
    Model::new(mesh, cfg).unwrap()
}

fn random_state(model: &Model, seed: u64, amp_h: f64, amp_u: f64) -> LayeredState {
    let mut r = rng(seed);
    let mut s = model.rest_state();
    for k in 0..model.layers() {
        for (h, m) in s.h_mut(k).iter_mut().zip(&model.mask(k).cell) {
            *h += m * amp_h * r.gen_range(-1.0..1.0);
        }
        s.u_mut(k).iter_mut().for_each(|u| *u = amp_u * r.gen_range(-1.0..1.0));
    }
    model.apply_mask(&mut s);
    s
}

fn xnorm(model: &Model, s: &LayeredState) -> f64 {
    model.inner_x(&s.data, &s.data).sqrt()
}

#[test]
fn layer_matrices() {
    let rho = [1020.0, 1024.0, 1027.5, 1028.0];
    let lm = LayerMatrices::new(&rho);
    let l = rho.len();
    let id = &lm.t * &lm.d;
    assert!((id - DMatrix::<f64>::identity(l, l)).amax() == 0.0);
    for k in 0..l {
        for m in 0..l {
            assert!((lm.r[(k, m)] - rho[k.min(m)]).abs() < 1e-12);
        }
    }
    assert!((&lm.r - lm.r.transpose()).amax() == 0.0);
    assert!(lm.r.clone().cholesky().is_some());
}

#[test]
fn single_layer_mode() {
    let (mu, v) = vertical_modes(&[4000.0], &[1025.0], 9.81);
    assert!((mu[0] - 9.81 * 4000.0).abs() < 1e-9);
    assert!((v[0][0] - 1.0).abs() < 1e-15);
}

#[test]
fn three_layer_modes() {
    let h0 = [1000.0; 3];
    let rho = [1025.0, 1027.0, 1028.0];
    let (mu, v) = vertical_modes(&h0, &rho, 9.81);
    assert!(((mu[0] - 9.81 * 3000.0) / (9.81 * 3000.0)).abs() < 0.02);
    for x in &v[0] {
        assert!((x - 1.0 / 3.0).abs() < 0.02 / 3.0);
    }
    assert!(mu.iter().all(|&m| m > 0.0));
    assert!(mu.windows(2).all(|w| w[0] > w[1]));
    // oracle: dense non-symmetric eigenvalues of g diag(h0/rho) R
    let r = LayerMatrices::new(&rho).r;
    let a = DMatrix::from_fn(3, 3, |i, j| 9.81 * h0[i] / rho[i] * r[(i, j)]);
    let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in ev.iter().zip(&mu) {
        assert!((a - b).abs() < 1e-9 * ev[0]);
    }
}

#[test]
fn kinetic_energy_cases() {
    let mesh = planar();
    let model = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 100.0, vec![1000.0], 0.0)).unwrap();
    assert!(model.kinetic_energy(0, &vec![0.0; mesh.n_edges]).iter().all(|&k| k == 0.0));
    // the edge areas of a cell add up to twice its area
    let k = model.kinetic_energy(0, &vec![1.5; mesh.n_edges]);
    assert!(k.iter().all(|&k| (k - 1.5 * 1.5).abs() < 1e-12));
    let mut r = rng(3);
    let u: Vec<f64> = (0..mesh.n_edges).map(|_| r.gen_range(-2.0..2.0)).collect();
    assert!(model.kinetic_energy(0, &u).iter().all(|&k| k >= 0.0));
}

#[test]
fn potential_vorticity_cases() {
    let mesh = planar();
    let model = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 250.0, vec![1000.0], 1e-4)).unwrap();
    let h = vec![250.0; mesh.n_cells];
    let q = model.potential_vorticity(0, &h, &vec![0.0; mesh.n_edges]).unwrap();
    assert!(q.iter().all(|&q| (q - 1e-4 / 250.0).abs() < 1e-18));

    let mut r = rng(5);
    let h: Vec<f64> = (0..mesh.n_cells).map(|_| 250.0 + r.gen_range(-20.0..20.0)).collect();
    let phi: Vec<f64> = (0..mesh.n_cells).map(|_| r.gen_range(-1.0..1.0)).collect();
    let ops = model.ops(0);
    let u = ops.grad_ie(&phi);
    let q = model.potential_vorticity(0, &h, &u).unwrap();
    let hv = ops.interp_i2v(&h);
    for v in 0..mesh.n_vertices {
        assert!((q[v] - 1e-4 / hv[v]).abs() < 1e-12 * (1e-4 / hv[v]));
    }

    // dense oracle on a random state: (curl u + f) / <h>_V by explicit stencils
    let u: Vec<f64> = (0..mesh.n_edges).map(|_| r.gen_range(-1.0..1.0)).collect();
    let q = model.potential_vorticity(0, &h, &u).unwrap();
    for v in 0..mesh.n_vertices {
        let mut circ = 0.0;
        for (&e, &t) in mesh.edges_on_vertex[v].iter().zip(&mesh.t_ev[v]) {
            circ += t * mesh.d_e[e as usize] * u[e as usize];
        }
        let mut hv = 0.0;
        for (&c, &rr) in mesh.cells_on_vertex[v].iter().zip(&mesh.r_iv[v]) {
            hv += rr * mesh.a_i[c as usize] * h[c as usize];
        }
        let expect = (circ / mesh.a_v[v] + 1e-4) / (hv / mesh.a_v[v]);
        assert!((q[v] - expect).abs() < 1e-12 * expect.abs().max(1e-7));
    }

    let mut bad = h.clone();
    let c = mesh.cells_on_vertex[4];
    for i in c {
        bad[i as usize] = -1.0;
    }
    assert!(matches!(model.potential_vorticity(0, &bad, &u), Err(Error::OutCrop { entity: "vertex", .. })));
}

#[test]
fn pressure_forms() {
    let model = bumpy_model(1);
    let s = random_state(&model, 2, 10.0, 0.5);
    let p = model.pressure(&s);
    let lm = &model.layer_mats;
    let l = model.layers();
    for i in 0..model.mesh.n_cells {
        let h = DVector::from_fn(l, |k, _| s.h(k)[i]);
        let eta = &lm.t * h + DVector::from_element(l, model.cfg.b[i]);
        let alt = lm.t.transpose() * DMatrix::from_diagonal(&DVector::from_vec(lm.drho.clone())) * eta;
        for k in 0..l {
            // both forms cancel terms of size rho * depth
            assert!((p[k][i] - alt[k]).abs() < 1e-12 * 1028.0 * 3200.0);
        }
    }

    let mesh = planar();
    let single = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 500.0, vec![1020.0], 0.0)).unwrap();
    let mut s = single.rest_state();
    s.h_mut(0).iter_mut().enumerate().for_each(|(i, h)| *h += i as f64 * 0.1);
    let p = single.pressure(&s);
    for i in 0..mesh.n_cells {
        assert!((p[0][i] - 1020.0 * (single.cfg.b[i] + s.h(0)[i])).abs() < 1e-9);
    }
}

#[test]
fn rest_pressure_is_flat() {
    let mesh = planar();
    let model = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 3000.0, vec![1025.0, 1026.0, 1027.0], 1e-4)).unwrap();
    let p = model.pressure(&model.rest_state());
    for k in 0..3 {
        let g = model.ops(k).grad_ie(&p[k]);
        assert!(g.iter().all(|x| x.abs() < 1e-9));
    }
}

#[test]
fn q_operator() {
    let model = bumpy_model(4);
    let s = random_state(&model, 5, 20.0, 0.5);
    let mut r = rng(6);
    let n = model.mesh.n_edges;
    for k in 0..model.layers() {
        let m = &model.mask(k).edge;
        let v: Vec<f64> = (0..n).map(|e| m[e] * r.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|e| m[e] * r.gen_range(-1.0..1.0)).collect();
        let qv = model.q_apply(k, s.h(k), s.u(k), &v).unwrap();
        let qw = model.q_apply(k, s.h(k), s.u(k), &w).unwrap();
        let a = inner_e(&model.mesh, &v, &qw);
        let b = inner_e(&model.mesh, &qv, &w);
        let scale = inner_e(&model.mesh, &qv, &qv).sqrt() * inner_e(&model.mesh, &w, &w).sqrt();
        assert!((a + b).abs() < 1e-13 * scale);
    }
    let ops = model.ops(0);
    let qe = vec![2.5e-7; n];
    let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (mut out, mut tmp) = (vec![0.0; n], vec![0.0; n]);
    q_apply_into(&ops, &qe, &y, &mut out, &mut tmp);
    let pf = ops.perp_flux_ee(&y);
    for e in 0..n {
        assert!((out[e] - 2.5e-7 * pf[e]).abs() < 1e-20);
    }
}

#[test]
fn rest_is_an_equilibrium() {
    let model = bumpy_model(7);
    let f = model.tendency(&model.rest_state()).unwrap();
    let scale = 9.81 * 3000.0 / 20e3;
    assert!(f.data.iter().all(|x| x.abs() < 1e-12 * scale));
}

#[test]
fn energy_is_conserved_by_the_ideal_tendency() {
    for seed in 0..5 {
        let model = bumpy_model(seed);
        let s = random_state(&model, 100 + seed, 30.0, 1.0);
        let f = model.ideal_tendency(&s).unwrap();
        let dh = model.delta_h(&s);
        let p = model.inner_x(&dh.data, &f.data);
        assert!(p.abs() < 1e-11 * xnorm(&model, &dh) * xnorm(&model, &f), "{p}");
    }
}

#[test]
fn layer_volumes_and_mass_are_invariant() {
    let model = bumpy_model(9);
    let s = random_state(&model, 10, 30.0, 1.0);
    let f = model.ideal_tendency(&s).unwrap();
    let rates = model.layer_volumes(&f);
    for (k, r) in rates.iter().enumerate() {
        let scale: f64 = f.h(k).iter().zip(&model.mesh.a_i).map(|(x, a)| (x * a).abs()).sum();
        assert!(r.abs() < 1e-13 * scale);
    }
    let rate_mass = model.total_mass(&f);
    let scale: f64 = (0..3).map(|k| model.cfg.rho[k] * f.h(k).iter().zip(&model.mesh.a_i).map(|(x, a)| (x * a).abs()).sum::<f64>()).sum();
    assert!(rate_mass.abs() < 1e-13 * scale);
}

#[test]
fn total_mass_oracle() {
    let mesh = planar();
    let model = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 3000.0, vec![1025.0, 1026.0], 1e-4)).unwrap();
    let area: f64 = mesh.a_i.iter().sum();
    let rest = model.rest_state();
    assert!((model.total_mass(&rest) - (1025.0 + 1026.0) * 1500.0 * area).abs() < 1e-6 * model.total_mass(&rest));
    let s = random_state(&model, 3, 50.0, 0.0);
    let mut brute = 0.0;
    for k in 0..2 {
        for i in 0..mesh.n_cells {
            brute += model.cfg.rho[k] * mesh.a_i[i] * s.h(k)[i];
        }
    }
    assert!((model.total_mass(&s) - brute).abs() < 1e-12 * brute);
}

#[test]
fn hamiltonian_cases() {
    let mesh = planar();
    let model = Model::new(mesh.clone(), ModelConfig::flat(&mesh, 1000.0, vec![1025.0], 1e-4)).unwrap();
    let mut s = random_state(&model, 11, 5.0, 0.0);
    let eta: Vec<f64> = s.h(0).iter().zip(&model.cfg.b).map(|(h, b)| h + b).collect();
    let pot = 0.5 * 9.81 * 1025.0 * inner_i(&mesh, &eta, &eta);
    assert!((model.hamiltonian(&s) - pot).abs() < 1e-12 * pot);
    let mut r = rng(12);
    s.u_mut(0).iter_mut().for_each(|u| *u = r.gen_range(-1.0..1.0));
    let kin = model.kinetic_energy(0, s.u(0));
    let expect = 1025.0 * inner_i(&mesh, s.h(0), &kin) + pot;
    assert!((model.hamiltonian(&s) - expect).abs() < 1e-12 * expect);
    let dh = model.delta_h(&s);
    for i in 0..mesh.n_cells {
        let e = 1025.0 * (kin[i] + 9.81 * eta[i]);
        assert!((dh.h(0)[i] - e).abs() < 1e-12 * e.abs());
    }
    let zero_u = random_state(&model, 13, 5.0, 0.0);
    assert!(model.delta_h(&zero_u).u_all().iter().all(|&x| x == 0.0));
}

#[test]
fn rest_minimises_energy_at_fixed_volumes() {
    let model = bumpy_model(14);
    assert!(model.energy_anomaly(&model.rest_state()).abs() < 1e-6);
    let mut r = rng(15);
    for _ in 0..10 {
        let mut d = model.zeros();
        for k in 0..model.layers() {
            let m = &model.mask(k).cell;
            d.h_mut(k).iter_mut().zip(m).for_each(|(x, m)| *x = m * r.gen_range(-1.0..1.0));
            let vol: f64 = d.h(k).iter().zip(&model.mesh.a_i).map(|(x, a)| x * a).sum();
            let wet: f64 = m.iter().zip(&model.mesh.a_i).map(|(m, a)| m * a).sum();
            d.h_mut(k).iter_mut().zip(m).for_each(|(x, m)| *x -= m * vol / wet);
        }
        let mut s = model.rest_state();
        s.axpy(1.0, &d);
        assert!(model.energy_anomaly(&s) > 0.0);
    }
}

#[test]
fn delta_h_matches_finite_differences() {
    let model = bumpy_model(16);
    let s = random_state(&model, 17, 20.0, 0.5);
    let w = random_state(&model, 18, 1.0, 0.1);
    let mut w = w;
    w.axpy(-1.0, &model.rest_state());
    let dh = model.delta_h(&s);
    let exact = model.inner_x(&w.data, &dh.data);
    let mut errs = Vec::new();
    for eps in [8.0, 4.0, 2.0, 1.0] {
        let mut p = s.clone();
        p.axpy(eps, &w);
        let mut m = s.clone();
        m.axpy(-eps, &w);
        let fd = (model.energy_anomaly(&p) - model.energy_anomaly(&m)) / (2.0 * eps);
        errs.push((fd - exact).abs());
    }
    for pair in errs.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{errs:?}");
    }
}

#[test]
fn thin_or_nonfinite_states_are_rejected() {
    let model = bumpy_model(19);
    let mut s = model.rest_state();
    let i = model.mask(0).cell.iter().position(|&m| m == 1.0).unwrap();
    s.h_mut(0)[i] = -1.0;
    assert!(matches!(model.tendency(&s), Err(Error::OutCrop { layer: 0, entity: "cell", .. })));
    let mut s = model.rest_state();
    s.u_mut(1)[3] = f64::NAN;
    assert!(matches!(model.tendency(&s), Err(Error::NonFinite { field: "u", layer: 1, index: 3 })));
}

#[test]
fn masked_entries_stay_zero() {
    let model = bumpy_model(20);
    let s = random_state(&model, 21, 10.0, 0.5);
    let f = model.tendency(&s).unwrap();
    for k in 0..model.layers() {
        let m = model.mask(k);
        assert!(f.h(k).iter().zip(&m.cell).all(|(x, w)| *w == 1.0 || *x == 0.0));
        assert!(f.u(k).iter().zip(&m.edge).all(|(x, w)| *w == 1.0 || *x == 0.0));
    }
    assert!(model.mask(2).cell.iter().any(|&c| c == 0.0));
    assert_eq!(model.mask(0).cell[17], 0.0);
}

#[test]
fn config_validation() {
    let mesh = planar();
    let ok = ModelConfig::flat(&mesh, 1000.0, vec![1025.0, 1027.0], 1e-4);
    let mut c = ok.clone();
    c.rho = vec![1027.0, 1025.0];
    assert!(matches!(Model::new(mesh.clone(), c), Err(Error::Config(_))));
    let mut c = ok.clone();
    c.eta0 = vec![0.0, 10.0];
    assert!(Model::new(mesh.clone(), c).is_err());
    let mut c = ok.clone();
    c.eta0 = vec![-1.0, -500.0];
    assert!(Model::new(mesh.clone(), c).is_err());
    let mut c = ok.clone();
    c.b.pop();
    assert!(Model::new(mesh.clone(), c).is_err());
    let mut c = ok;
    c.nu_h = -1.0;
    assert!(Model::new(mesh, c).is_err());
}

fn forced_model(seed: u64) -> Model {
    let mut model = bumpy_model(seed);
    let mut r = rng(seed + 1000);
    let mut cfg = model.cfg.clone();
    cfg.tau = (0..model.mesh.n_edges).map(|_| r.gen_range(-0.1..0.1)).collect();
    cfg.c_drag = 1e-3;
    cfg.nu_h = 1e12;
    cfg.nu_v = 1e-2;
    cfg.terms = Terms {
        wind: true,
        drag: true,
        biharmonic: true,
        vertical_viscosity: false,
    };
    model = Model::new(model.mesh.clone(), cfg).unwrap();
    model
}

#[test]
fn forcing_energy_balance() {
    for seed in 0..3 {
        let model = forced_model(seed);
        let s = random_state(&model, 30 + seed, 20.0, 0.5);
        let mesh = &model.mesh;
        let dh = model.delta_h(&s);
        let rate = model.inner_x(&dh.data, &model.tendency(&s).unwrap().data);
        let mut expect = 0.0;
        for k in 0..model.layers() {
            let ops = model.ops(k);
            let lu = vector_laplacian(&ops, s.u(k));
            let he = ops.interp_i2e(s.h(k));
            let w: Vec<f64> = lu.iter().zip(&he).map(|(l, h)| model.cfg.nu_h * h * l).collect();
            expect -= model.cfg.rho[k] * inner_e(mesh, &w, &lu);
        }
        for e in 0..mesh.n_edges {
            let k = model.l_bot[e];
            if k == usize::MAX {
                continue;
            }
            let speed: Vec<f64> = model.kinetic_energy(k, s.u(k)).iter().map(|x| (2.0 * x).sqrt()).collect();
            let se = model.ops(k).interp_i2e(&speed)[e];
            expect -= model.cfg.c_drag * mesh.a_e[e] * se * s.u(k)[e] * s.u(k)[e];
        }
        expect += inner_e(mesh, s.u(0), &model.cfg.tau);
        assert!((rate - expect).abs() < 1e-10 * expect.abs(), "{rate} {expect}");
    }
}

#[test]
fn dissipation_terms_remove_energy() {
    let mut model = forced_model(40);
    model.cfg.terms.wind = false;
    for seed in 0..4 {
        let s = random_state(&model, 50 + seed, 20.0, 0.5);
        let dh = model.delta_h(&s);
        let g = model.forcing(&s).unwrap();
        assert!(model.inner_x(&dh.data, &g.data) < 0.0);
    }
}

#[test]
fn vertical_viscosity_exchange() {
    let mut model = forced_model(60);
    model.cfg.terms = Terms {
        vertical_viscosity: true,
        ..Terms::default()
    };
    let s = random_state(&model, 61, 20.0, 0.5);
    let dh = model.delta_h(&s);
    let rate = model.inner_x(&dh.data, &model.forcing(&s).unwrap().data);
    let mut expect = 0.0;
    for k in 0..model.layers() - 1 {
        let hu = model.ops(k).interp_i2e(s.h(k));
        let hl = model.ops(k + 1).interp_i2e(s.h(k + 1));
        for e in 0..model.mesh.n_edges {
            if model.mask(k).edge[e] == 0.0 || model.mask(k + 1).edge[e] == 0.0 {
                continue;
            }
            let (uk, ul) = (s.u(k)[e], s.u(k + 1)[e]);
            let flux = model.cfg.nu_v * (uk - ul) / (0.5 * (hu[e] + hl[e]));
            expect += model.mesh.a_e[e] * flux * (model.cfg.rho[k + 1] * ul - model.cfg.rho[k] * uk);
        }
    }
    assert!((rate - expect).abs() < 1e-10 * expect.abs());
    // momentum is exchanged, not created
    let g = model.forcing(&s).unwrap();
    let mut total = 0.0;
    let mut scale = 0.0;
    for k in 0..model.layers() {
        let he = model.ops(k).interp_i2e(s.h(k));
        total += inner_e(&model.mesh, &he, g.u(k));
        scale += inner_e(&model.mesh, &he, &g.u(k).iter().map(|x| x.abs()).collect::<Vec<_>>());
    }
    assert!(total.abs() < 1e-12 * scale);
}

#[test]
fn zero_velocity_has_no_dissipation() {
    let model = forced_model(70);
    let s = random_state(&model, 71, 20.0, 0.0);
    assert!(model.forcing_drag(&s).unwrap().data.iter().all(|&x| x == 0.0));
    assert!(model.forcing_biharmonic(&s).unwrap().data.iter().all(|&x| x == 0.0));
    let mut m = forced_model(72);
    m.cfg.nu_h = 0.0;
    let s = random_state(&m, 73, 20.0, 0.5);
    let g = m.forcing(&s).unwrap();
    let mut m2 = m.clone();
    m2.cfg.terms.biharmonic = false;
    assert_eq!(g, m2.forcing(&s).unwrap());
}

#[test]
fn sphere_energy_conservation() {
    let mesh = Arc::new(build_spherical_mesh(2, 5, 6.371e6).unwrap());
    let mut cfg = ModelConfig::flat(&mesh, 4000.0, vec![1025.0, 1027.0], 0.0);
    cfg.f = mesh.vertex_pos.iter().map(|p| 2.0 * 7.292e-5 * p[2] / 6.371e6).collect();
    let model = Model::new(mesh, cfg).unwrap();
    let s = random_state(&model, 80, 50.0, 1.0);
    let f = model.ideal_tendency(&s).unwrap();
    let dh = model.delta_h(&s);
    assert!(model.inner_x(&dh.data, &f.data).abs() < 1e-11 * xnorm(&model, &dh) * xnorm(&model, &f));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_conservation_random_states(seed in any::<u64>(), amp_h in 0.0f64..100.0, amp_u in 0.0f64..2.0) {
        let model = bumpy_model(seed % 7);
        let s = random_state(&model, seed, amp_h, amp_u);
        let f = model.ideal_tendency(&s).unwrap();
        let dh = model.delta_h(&s);
        let p = model.inner_x(&dh.data, &f.data);
        prop_assert!(p.abs() <= 1e-11 * xnorm(&model, &dh) * xnorm(&model, &f) + 1e-300);
        let vols = model.layer_volumes(&f);
        for (k, v) in vols.iter().enumerate() {
            let scale: f64 = f.h(k).iter().zip(&model.mesh.a_i).map(|(x, a)| (x * a).abs()).sum();
            prop_assert!(v.abs() <= 1e-12 * scale + 1e-300);
        }
    }
}
