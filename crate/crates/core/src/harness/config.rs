use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::krylov::{Dissipation, KrylovSettings, MPolicy, Process, Reorth};
use crate::steppers::{LinearChoice, Scheme, StepperConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Planar periodic hex mesh `nx * ny` with spacing `dc`.
    PlanarHex { nx: usize, ny: usize, dc: f64 },
    /// Planar hex mesh just large enough to hold the basin plus a land margin.
    Basin { dc: f64 },
    Sphere {
        level: usize,
        #[serde(default = "default_lloyd")]
        lloyd: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    File { path: PathBuf },
}

fn default_lloyd() -> usize {
    20
}

fn default_radius() -> f64 {
    6_371_220.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Rest,
    GravityWave,
    Geostrophic,
    Soma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bathymetry {
    Flat,
    Bowl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    pub bathymetry: Bathymetry,
    /// Depth of a flat bottom (m).
    pub depth: f64,
    pub basin_radius: f64,
    pub depth_max: f64,
    pub depth_shelf: f64,
    pub shelf_width: f64,
    /// Amplitude and width of the Gaussian SSH bump.
    pub eta_bar: f64,
    pub sigma: f64,
    /// Bump center; the domain or basin center when absent. Planar: metres, sphere: degrees.
    pub center: Option<[f64; 2]>,
    /// Basin center on the sphere, degrees `[lon, lat]`.
    pub basin_center: [f64; 2],
    /// Reference latitude for `f0` and `beta` on planar meshes (degrees).
    pub latitude: f64,
    pub f0: Option<f64>,
    pub beta: Option<f64>,
    /// Peak wind stress (N/m^2).
    pub tau0: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: ScenarioKind::GravityWave,
            bathymetry: Bathymetry::Bowl,
            depth: 2500.0,
            basin_radius: 1_250_000.0,
            depth_max: 2500.0,
            depth_shelf: 100.0,
            shelf_width: 150_000.0,
            eta_bar: 2.0,
            sigma: 200_000.0,
            center: None,
            basin_center: [0.0, 35.0],
            latitude: 35.0,
            f0: None,
            beta: None,
            tau0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerConfig {
    pub rho: Vec<f64>,
    /// Rest interfaces, top first; even split of `depth_max` when empty.
    pub interfaces: Vec<f64>,
    pub g: f64,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig {
            rho: vec![1025.0],
            interfaces: Vec::new(),
            g: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub wind: bool,
    pub drag: bool,
    pub biharmonic: bool,
    pub vertical_viscosity: bool,
    pub c_drag: f64,
    pub nu_h: f64,
    pub nu_v: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            wind: false,
            drag: false,
            biharmonic: false,
            vertical_viscosity: false,
            c_drag: 1e-3,
            nu_h: 2e10,
            nu_v: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Rk4,
    Etd1,
    Etd2,
    Etd3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearName {
    Reference,
    Updated,
    Barotropic,
    BarotropicMass,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub scheme: SchemeName,
    pub c2: f64,
    pub c3: f64,
    pub linear: LinearName,
    /// Spectral cut-off and power of the artificial dissipation; off when `gamma` is absent.
    pub gamma: Option<f64>,
    pub p: u32,
    /// Step size (s); takes precedence over `courant`.
    pub dt: Option<f64>,
    pub courant: Option<f64>,
    /// Simulated time (s).
    pub horizon: f64,
    /// Diagnostics cadence in steps.
    pub output_every: usize,
    /// Snapshot cadence in steps, 0 for none.
    pub snapshot_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            scheme: SchemeName::Rk4,
            c2: 1.0,
            c3: 0.75,
            linear: LinearName::Reference,
            gamma: None,
            p: 2,
            dt: None,
            courant: Some(2.0),
            horizon: 86_400.0,
            output_every: 1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Adaptive,
    Fixed,
    /// `round(1.3 C + 15)` from the step's Courant number.
    Courant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovConfig {
    pub policy: PolicyName,
    pub m: usize,
    pub tol: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub arnoldi: bool,
    /// Full reorthogonalization every this many steps, 0 for off.
    pub reorth_every: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            policy: PolicyName::Adaptive,
            m: 30,
            tol: 1e-6,
            m_min: 1,
            m_max: 1000,
            arnoldi: false,
            reorth_every: 0,
        }
    }
}

/// Full description of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub scenario: ScenarioConfig,
    pub layers: LayerConfig,
    pub forcing: ForcingConfig,
    pub time: TimeConfig,
    pub krylov: KrylovConfig,
    /// Fixed summation order everywhere; always true in this build.
    pub deterministic: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshSource::Basin { dc: 50_000.0 },
            scenario: ScenarioConfig::default(),
            layers: LayerConfig::default(),
            forcing: ForcingConfig::default(),
            time: TimeConfig::default(),
            krylov: KrylovConfig::default(),
            deterministic: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if let MeshSource::File { path: p } = &mut cfg.mesh {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.time;
        if let Some(dt) = t.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt = {dt} must be positive")));
            }
            if t.horizon < dt {
                return Err(Error::Config("horizon must be at least one step".into()));
            }
        } else {
            match t.courant {
                Some(c) if c > 0.0 => {}
                _ => return Err(Error::Config("either dt or a positive courant is required".into())),
            }
        }
        if !(t.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if t.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        if let Some(g) = t.gamma {
            if !(g > 0.0) || t.p == 0 {
                return Err(Error::Config("dissipation needs gamma > 0 and p >= 1".into()));
            }
        }
        let s = &self.scenario;
        if s.sigma <= 0.0 || s.basin_radius <= 0.0 || s.depth <= 0.0 {
            return Err(Error::Config("scenario lengths must be positive".into()));
        }
        if s.depth_shelf <= 0.0 || s.depth_max < s.depth_shelf {
            return Err(Error::Config("bowl needs 0 < depth_shelf <= depth_max".into()));
        }
        if !(0.0..=s.basin_radius).contains(&s.shelf_width) {
            return Err(Error::Config("shelf_width must lie in [0, basin_radius]".into()));
        }
        if self.layers.rho.is_empty() {
            return Err(Error::Config("at least one layer is required".into()));
        }
        if !self.layers.interfaces.is_empty() && self.layers.interfaces.len() != self.layers.rho.len() {
            return Err(Error::Config("one interface per layer is required".into()));
        }
        if self.krylov.tol <= 0.0 || self.krylov.m == 0 || self.krylov.m_max == 0 {
            return Err(Error::Config("krylov tol and dimensions must be positive".into()));
        }
        self.scheme().validate()
    }

    pub fn scheme(&self) -> Scheme {
        let t = &self.time;
        match t.scheme {
            SchemeName::Rk4 => Scheme::Rk4,
            SchemeName::Etd1 => Scheme::EtdEuler,
            SchemeName::Etd2 => Scheme::Etd2 { c2: t.c2 },
            SchemeName::Etd3 => Scheme::Etd3 { c2: t.c2, c3: t.c3 },
        }
    }

    pub fn linear(&self) -> LinearChoice {
        match self.time.linear {
            LinearName::Reference => LinearChoice::ReferenceFixed,
            LinearName::Updated => LinearChoice::ReferenceUpdated,
            LinearName::Barotropic => LinearChoice::Barotropic,
            LinearName::BarotropicMass => LinearChoice::BarotropicMassConserving,
            LinearName::Zero => LinearChoice::Zero,
        }
    }

    /// Stepper settings for a step with Courant number `courant`.
    pub fn stepper(&self, courant: f64) -> StepperConfig {
        let k = &self.krylov;
        let policy = match k.policy {
            PolicyName::Adaptive => MPolicy::Adaptive {
                tol: k.tol,
                min: k.m_min,
                max: k.m_max,
            },
            PolicyName::Fixed => MPolicy::Fixed(k.m),
            PolicyName::Courant => MPolicy::Fixed(crate::steppers::default_krylov_dim(courant)),
        };
        StepperConfig {
            scheme: self.scheme(),
            linear: self.linear(),
            dissipation: self.time.gamma.map(|gamma| Dissipation { gamma, p: self.time.p }),
            krylov: KrylovSettings {
                process: if k.arnoldi { Process::Arnoldi } else { Process::SkewLanczos },
                reorth: if k.reorth_every == 0 { Reorth::Off } else { Reorth::Every(k.reorth_every) },
                policy,
            },
        }
    }
}
