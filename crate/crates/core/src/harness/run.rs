use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::config::RunConfig;
use super::scenario::setup;
use crate::container::{Array, Container};
use crate::linops::{spectral_radius, RadiusMethod, ReferenceOperator};
use crate::model::{LayeredState, Model};
use crate::steppers::Stepper;
use crate::{Error, Result};

/// Reference time step `dt_C = 1 / |A_0|` of the rest-state linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourantInfo {
    pub radius: f64,
    pub dt_c: f64,
}

impl CourantInfo {
    pub fn of(model: &Model) -> Self {
        let op = ReferenceOperator::at_rest(model);
        let radius = spectral_radius(&op, RadiusMethod::default());
        CourantInfo { radius, dt_c: 1.0 / radius }
    }

    pub fn courant(&self, dt: f64) -> f64 {
        dt * self.radius
    }
}

/// Step size of a configuration, resolving a Courant target.
pub fn resolve_dt(cfg: &RunConfig, courant: &CourantInfo) -> f64 {
    match cfg.time.dt {
        Some(dt) => dt,
        None => cfg.time.courant.unwrap_or(1.0) * courant.dt_c,
    }
}

/// Number of steps covering the horizon.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let n = horizon / dt;
    if (n - n.round()).abs() < 1e-9 * n.max(1.0) {
        n.round() as usize
    } else {
        n.ceil() as usize
    }
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub mass: f64,
    pub max_speed: f64,
    pub krylov_iters: usize,
    pub wall_seconds: f64,
    pub volumes: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn measure(model: &Model, s: &LayeredState, step: usize, time: f64, krylov: usize, wall: f64) -> Self {
        DiagnosticsRecord {
            step,
            time,
            energy: model.hamiltonian(s),
            mass: model.total_mass(s),
            max_speed: model.max_speed(s),
            krylov_iters: krylov,
            wall_seconds: wall,
            volumes: model.layer_volumes(s),
        }
    }

    pub fn header(layers: usize) -> Vec<String> {
        let mut h: Vec<String> = ["step", "time", "energy", "mass", "max_speed", "krylov_iters", "wall_seconds"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..layers).map(|k| format!("volume_{k}")));
        h
    }

    pub fn fields(&self) -> Vec<String> {
        let mut r = vec![
            self.step.to_string(),
            format!("{:?}", self.time),
            format!("{:?}", self.energy),
            format!("{:?}", self.mass),
            format!("{:?}", self.max_speed),
            self.krylov_iters.to_string(),
            format!("{:?}", self.wall_seconds),
        ];
        r.extend(self.volumes.iter().map(|v| format!("{v:?}")));
        r
    }

    fn check(&self) -> Result<()> {
        let vals = [self.energy, self.mass, self.max_speed];
        if vals.iter().chain(&self.volumes).any(|v| !v.is_finite()) {
            return Err(Error::Unstable {
                step: self.step,
                time: self.time,
                reason: "non-finite diagnostics".into(),
            });
        }
        Ok(())
    }
}

/// Read a diagnostics CSV written by [`run`].
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| fmt_err(path, e))?;
    let layers = rd.headers().map_err(|e| fmt_err(path, e))?.len().saturating_sub(7);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| fmt_err(path, e))?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fmt_err(path, format!("bad field {i}")))
        };
        out.push(DiagnosticsRecord {
            step: f(0)? as usize,
            time: f(1)?,
            energy: f(2)?,
            mass: f(3)?,
            max_speed: f(4)?,
            krylov_iters: f(5)? as usize,
            wall_seconds: f(6)?,
            volumes: (0..layers).map(|k| f(7 + k)).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

fn fmt_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: Some(path.to_path_buf()),
        msg: e.to_string(),
    }
}

/// Snapshot of a state as a container: arrays `h` (L x n_cells) and `u` (L x n_edges).
pub fn snapshot_container(s: &LayeredState, step: usize, time: f64) -> Container {
    let mut c = Container::default();
    c.header.insert("kind".into(), json!("snapshot"));
    c.header.insert("step".into(), json!(step));
    c.header.insert("time".into(), json!(time));
    c.insert("h", Array::f64(s.layers, s.n_cells, s.h_all().to_vec()));
    c.insert("u", Array::f64(s.layers, s.n_edges, s.u_all().to_vec()));
    c
}

/// `(state, step, time)` from a snapshot container.
pub fn snapshot_from_container(c: &Container, layers: usize, n_cells: usize, n_edges: usize) -> Result<(LayeredState, usize, f64)> {
    let (h, _) = c.f64_array("h", layers, n_cells)?;
    let (u, _) = c.f64_array("u", layers, n_edges)?;
    let step = c.header.get("step").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    let time = c.header.get("time").and_then(|v| v.as_f64()).unwrap_or(0.0);
    let mut data = h.to_vec();
    data.extend_from_slice(u);
    Ok((LayeredState::from_vec(layers, n_cells, n_edges, data), step, time))
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snap_{step:08}.mlc"))
}

/// Snapshot files in `dir`, ordered by step.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".mlc"))
        })
        .collect();
    v.sort();
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub state: LayeredState,
    pub dt: f64,
    pub courant: CourantInfo,
    pub steps: usize,
}

/// Options of [`run`] beyond the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Continue from the last snapshot in `out`.
    pub resume: bool,
    /// Known `|A_0|`, skipping the estimate.
    pub courant: Option<CourantInfo>,
}

/// Integrate a configuration to its horizon.
///
/// With an output directory, writes `config.toml`, `diagnostics.csv` and snapshots.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let (model, s0) = setup(cfg)?;
    run_model(cfg, &model, s0, opts)
}

/// [`run`] on an already assembled model and initial state.
pub fn run_model(cfg: &RunConfig, model: &Model, s0: LayeredState, opts: &RunOptions) -> Result<RunOutput> {
    let courant = opts.courant.unwrap_or_else(|| CourantInfo::of(model));
    let dt = resolve_dt(cfg, &courant);
    let n = step_count(cfg.time.horizon, dt);
    let mut stepper = Stepper::new(model, cfg.stepper(courant.courant(dt)))?;
    let (mut s, mut step) = (s0, 0usize);
    let mut csv_file = None;
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir)?;
        let diag = dir.join("diagnostics.csv");
        if opts.resume {
            if let Some(last) = list_snapshots(dir)?.pop() {
                let c = Container::load(&last)?;
                let (st, k, _) = snapshot_from_container(&c, model.layers(), model.mesh.n_cells, model.mesh.n_edges)?;
                s = st;
                step = k;
                log::info!("resuming from {} at step {k}", last.display());
            }
            let kept: Vec<DiagnosticsRecord> = if diag.exists() {
                read_diagnostics(&diag)?.into_iter().filter(|r| r.step <= step).collect()
            } else {
                Vec::new()
            };
            let mut f = fs::File::create(&diag)?;
            writeln!(f, "{}", DiagnosticsRecord::header(model.layers()).join(","))?;
            for r in &kept {
                writeln!(f, "{}", r.fields().join(","))?;
            }
            csv_file = Some(f);
        } else {
            fs::write(dir.join("config.toml"), cfg.to_toml())?;
            let mut f = fs::File::create(&diag)?;
            writeln!(f, "{}", DiagnosticsRecord::header(model.layers()).join(","))?;
            csv_file = Some(f);
        }
    }
    let t0 = Instant::now();
    let mut records = Vec::new();
    let mut emit = |r: DiagnosticsRecord, f: &mut Option<fs::File>| -> Result<()> {
        if let Some(f) = f {
            writeln!(f, "{}", r.fields().join(","))?;
        }
        let res = r.check();
        records.push(r);
        res
    };
    if step == 0 {
        emit(DiagnosticsRecord::measure(model, &s, 0, 0.0, 0, 0.0), &mut csv_file)?;
        if let (Some(dir), true) = (&opts.out, cfg.time.snapshot_every > 0) {
            snapshot_container(&s, 0, 0.0).save(&snapshot_path(dir, 0))?;
        }
    }
    while step < n {
        s = stepper.step(&s, dt).map_err(|e| match e {
            Error::Unstable { reason, .. } => Error::Unstable {
                step: step + 1,
                time: (step + 1) as f64 * dt,
                reason,
            },
            e => e,
        })?;
        step += 1;
        let time = step as f64 * dt;
        if step % cfg.time.output_every == 0 || step == n {
            let wall = t0.elapsed().as_secs_f64();
            emit(
                DiagnosticsRecord::measure(model, &s, step, time, stepper.last.krylov_total, wall),
                &mut csv_file,
            )?;
        }
        if let Some(dir) = &opts.out {
            let every = cfg.time.snapshot_every;
            if every > 0 && (step % every == 0 || step == n) {
                snapshot_container(&s, step, time).save(&snapshot_path(dir, step))?;
            }
        }
    }
    if let Some(f) = &mut csv_file {
        f.flush()?;
    }
    Ok(RunOutput {
        records,
        state: s,
        dt,
        courant,
        steps: n,
    })
}
