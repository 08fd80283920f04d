use std::sync::Arc;

use super::config::{Bathymetry, MeshSource, RunConfig, ScenarioKind};
use crate::mesh::{build_planar_hex_mesh, build_spherical_mesh, load_mesh, Geometry, Mesh};
use crate::model::{LayeredState, Model, ModelConfig, Terms};
use crate::trisk_ops::Ops;
use crate::{Error, Result};

pub const OMEGA: f64 = 7.292e-5;

/// Mesh described by the configuration.
pub fn build_mesh(cfg: &RunConfig) -> Result<Mesh> {
    match &cfg.mesh {
        MeshSource::PlanarHex { nx, ny, dc } => build_planar_hex_mesh(*nx, *ny, *dc),
        MeshSource::Basin { dc } => basin_mesh(*dc, cfg.scenario.basin_radius),
        MeshSource::Sphere { level, lloyd, radius } => build_spherical_mesh(*level, *lloyd, *radius),
        MeshSource::File { path } => load_mesh(path),
    }
}

/// Smallest periodic hex mesh holding a disc of `radius` with two rows of land around it.
pub fn basin_mesh(dc: f64, radius: f64) -> Result<Mesh> {
    let span = 2.0 * radius + 4.0 * dc;
    let nx = (span / dc).ceil() as usize;
    let mut ny = (span / (dc * 3f64.sqrt() / 2.0)).ceil() as usize;
    ny += ny % 2;
    build_planar_hex_mesh(nx.max(2), ny.max(2), dc)
}

/// Geometric frame of a scenario: distances from the basin center and local coordinates.
struct Frame<'a> {
    mesh: &'a Mesh,
    cfg: &'a RunConfig,
}

impl Frame<'_> {
    fn center(&self) -> [f64; 3] {
        match self.mesh.geometry {
            Geometry::PlanarPeriodic { lx, ly } => [lx / 2.0, ly / 2.0, 0.0],
            Geometry::Sphere { radius } => lonlat_to_xyz(self.cfg.scenario.basin_center, radius),
        }
    }

    fn bump_center(&self) -> [f64; 3] {
        match (self.cfg.scenario.center, self.mesh.geometry) {
            (None, _) => self.center(),
            (Some([x, y]), Geometry::PlanarPeriodic { .. }) => [x, y, 0.0],
            (Some(c), Geometry::Sphere { radius }) => lonlat_to_xyz(c, radius),
        }
    }

    fn distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        match self.mesh.geometry {
            Geometry::PlanarPeriodic { .. } => {
                let d = self.mesh.displacement(b, a);
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            }
            Geometry::Sphere { radius } => {
                let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (radius * radius);
                radius * c.clamp(-1.0, 1.0).acos()
            }
        }
    }

    /// Meridional distance from the basin center (m).
    fn northing(&self, p: [f64; 3]) -> f64 {
        match self.mesh.geometry {
            Geometry::PlanarPeriodic { .. } => self.mesh.displacement(self.center(), p)[1],
            Geometry::Sphere { radius } => {
                let lat = (p[2] / radius).clamp(-1.0, 1.0).asin();
                radius * (lat - self.cfg.scenario.basin_center[1].to_radians())
            }
        }
    }

    /// Unit eastward vector at `p`.
    fn east(&self, p: [f64; 3]) -> [f64; 3] {
        match self.mesh.geometry {
            Geometry::PlanarPeriodic { .. } => [1.0, 0.0, 0.0],
            Geometry::Sphere { .. } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r == 0.0 {
                    [0.0, 0.0, 0.0]
                } else {
                    [-p[1] / r, p[0] / r, 0.0]
                }
            }
        }
    }

    fn coriolis(&self, p: [f64; 3]) -> f64 {
        let s = &self.cfg.scenario;
        match self.mesh.geometry {
            Geometry::PlanarPeriodic { .. } => {
                let lat = s.latitude.to_radians();
                let f0 = s.f0.unwrap_or(2.0 * OMEGA * lat.sin());
                let beta = s.beta.unwrap_or(2.0 * OMEGA * lat.cos() / 6_371_220.0);
                f0 + beta * self.northing(p)
            }
            Geometry::Sphere { radius } => 2.0 * OMEGA * (p[2] / radius),
        }
    }

    fn bathymetry(&self, p: [f64; 3]) -> f64 {
        let s = &self.cfg.scenario;
        match s.bathymetry {
            Bathymetry::Flat => -s.depth,
            Bathymetry::Bowl => {
                let r = self.distance(self.center(), p);
                bowl_depth(r, s.basin_radius, s.depth_max, s.depth_shelf, s.shelf_width)
            }
        }
    }
}

fn lonlat_to_xyz(ll: [f64; 2], radius: f64) -> [f64; 3] {
    let (lon, lat) = (ll[0].to_radians(), ll[1].to_radians());
    [radius * lat.cos() * lon.cos(), radius * lat.cos() * lon.sin(), radius * lat.sin()]
}

/// Radially symmetric bowl: `depth_max` in the middle, a `depth_shelf` shelf of width
/// `shelf_width` at the rim, land (`+1`) outside `radius`.
pub fn bowl_depth(r: f64, radius: f64, depth_max: f64, depth_shelf: f64, shelf_width: f64) -> f64 {
    if r >= radius {
        return 1.0;
    }
    let slope = (radius - shelf_width).max(1.0);
    let w = 0.25 * slope;
    let x = (r - 0.5 * slope) / w;
    -(depth_shelf + (depth_max - depth_shelf) * 0.5 * (1.0 - x.tanh()))
}

/// Rest interfaces for `l` layers: the configured list or an even split of the deepest point.
fn interfaces(cfg: &RunConfig, depth: f64) -> Vec<f64> {
    if !cfg.layers.interfaces.is_empty() {
        return cfg.layers.interfaces.clone();
    }
    let l = cfg.layers.rho.len();
    (0..l).map(|k| -depth * k as f64 / l as f64).collect()
}

/// Model configuration for the scenario on `mesh`.
pub fn model_config(cfg: &RunConfig, mesh: &Mesh) -> Result<ModelConfig> {
    let fr = Frame { mesh, cfg };
    let s = &cfg.scenario;
    let b: Vec<f64> = mesh.cell_center.iter().map(|&p| fr.bathymetry(p)).collect();
    let deepest = match s.bathymetry {
        Bathymetry::Flat => s.depth,
        Bathymetry::Bowl => s.depth_max,
    };
    let f: Vec<f64> = mesh.vertex_pos.iter().map(|&p| fr.coriolis(p)).collect();
    let fc = &cfg.forcing;
    let wind = fc.wind;
    let tau = if wind {
        mesh.edge_pos
            .iter()
            .zip(&mesh.edge_normal)
            .map(|(&p, n)| {
                let y = fr.northing(p) / s.basin_radius;
                let tx = -s.tau0 * (std::f64::consts::PI * y.clamp(-1.0, 1.0)).cos();
                let e = fr.east(p);
                tx * (e[0] * n[0] + e[1] * n[1] + e[2] * n[2])
            })
            .collect()
    } else {
        Vec::new()
    };
    let mc = ModelConfig {
        g: cfg.layers.g,
        rho: cfg.layers.rho.clone(),
        f,
        b,
        eta0: interfaces(cfg, deepest),
        tau,
        c_drag: fc.c_drag,
        nu_h: fc.nu_h,
        nu_v: fc.nu_v,
        terms: Terms {
            wind,
            drag: fc.drag,
            biharmonic: fc.biharmonic,
            vertical_viscosity: fc.vertical_viscosity,
        },
        h_min: 1e-3,
    };
    mc.validate(mesh)?;
    Ok(mc)
}

/// Gaussian SSH bump at cell centers and vertices.
fn bump(fr: &Frame, pts: &[[f64; 3]]) -> Vec<f64> {
    let s = &fr.cfg.scenario;
    let c = fr.bump_center();
    pts.iter()
        .map(|&p| {
            let r = fr.distance(c, p);
            s.eta_bar * (-r * r / (2.0 * s.sigma * s.sigma)).exp()
        })
        .collect()
}

/// Initial state of the scenario.
pub fn initial_state(cfg: &RunConfig, model: &Model) -> Result<LayeredState> {
    let mesh = &model.mesh;
    let fr = Frame { mesh, cfg };
    let mut s = model.rest_state();
    match cfg.scenario.name {
        ScenarioKind::Rest | ScenarioKind::Soma => {}
        ScenarioKind::GravityWave | ScenarioKind::Geostrophic => {
            let eta = bump(&fr, &mesh.cell_center);
            let m = &model.mask(0).cell;
            s.h_mut(0).iter_mut().zip(&eta).zip(m).for_each(|((h, e), m)| *h += e * m);
            if cfg.scenario.name == ScenarioKind::Geostrophic {
                let fc = fr.coriolis(fr.bump_center());
                if fc == 0.0 {
                    return Err(Error::Config("geostrophic balance needs f != 0 at the bump".into()));
                }
                let etav = bump(&fr, &mesh.vertex_pos);
                let u0 = geostrophic_velocity(&Ops::new(mesh), &etav, model.cfg.g, fc);
                for k in 0..model.layers() {
                    let me = &model.mask(k).edge;
                    s.u_mut(k).iter_mut().zip(&u0).zip(me).for_each(|((u, v), m)| *u = v * m);
                }
            }
        }
    }
    Ok(s)
}

/// `u = (g / f) k x grad eta` on edges from vertex values of `eta`.
pub fn geostrophic_velocity(ops: &Ops, eta_v: &[f64], g: f64, f: f64) -> Vec<f64> {
    ops.perp_grad_ve(eta_v).into_iter().map(|x| -g / f * x).collect()
}

/// Mesh, model and initial state for a configuration.
pub fn setup(cfg: &RunConfig) -> Result<(Model, LayeredState)> {
    let mesh = Arc::new(build_mesh(cfg)?);
    let mc = model_config(cfg, &mesh)?;
    let model = Model::new(mesh, mc)?;
    let s0 = initial_state(cfg, &model)?;
    Ok((model, s0))
}
