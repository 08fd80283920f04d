use std::path::Path;

use super::run::{list_snapshots, snapshot_from_container};
use crate::container::Container;
use crate::model::{LayeredState, Model};
use crate::{Error, Result};

/// Temporal statistics of a snapshot stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStatistics {
    pub samples: usize,
    /// Time-mean velocity per layer, layer-major.
    pub mean_u: Vec<f64>,
    pub mean_ssh: Vec<f64>,
    /// RMS of the SSH deviation from its temporal mean, per cell.
    pub ssh_rms: Vec<f64>,
}

/// Accumulates mean flow and SSH variance over states.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    n: usize,
    sum_u: Vec<f64>,
    sum_ssh: Vec<f64>,
    sum_ssh2: Vec<f64>,
    /// First SSH sample, subtracted before accumulating.
    shift: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(model: &Model) -> Self {
        let (l, nc, ne) = (model.layers(), model.mesh.n_cells, model.mesh.n_edges);
        StatsAccumulator {
            n: 0,
            sum_u: vec![0.0; l * ne],
            sum_ssh: vec![0.0; nc],
            sum_ssh2: vec![0.0; nc],
            shift: Vec::new(),
        }
    }

    pub fn push(&mut self, model: &Model, s: &LayeredState) {
        self.n += 1;
        self.sum_u.iter_mut().zip(s.u_all()).for_each(|(a, u)| *a += u);
        let eta = model.ssh(s);
        if self.shift.is_empty() {
            self.shift = eta.clone();
        }
        for (i, e) in eta.iter().enumerate() {
            let d = e - self.shift[i];
            self.sum_ssh[i] += d;
            self.sum_ssh2[i] += d * d;
        }
    }

    pub fn finish(&self) -> Result<FlowStatistics> {
        if self.n == 0 {
            return Err(Error::Config("statistics need at least one snapshot".into()));
        }
        let n = self.n as f64;
        let mean_d: Vec<f64> = self.sum_ssh.iter().map(|s| s / n).collect();
        let ssh_rms = self
            .sum_ssh2
            .iter()
            .zip(&mean_d)
            .map(|(s2, m)| (s2 / n - m * m).max(0.0).sqrt())
            .collect();
        let mean_ssh = mean_d.iter().zip(&self.shift).map(|(m, k)| m + k).collect();
        Ok(FlowStatistics {
            samples: self.n,
            mean_u: self.sum_u.iter().map(|s| s / n).collect(),
            mean_ssh,
            ssh_rms,
        })
    }
}

/// Statistics of the states in a sequence.
pub fn statistics<'a>(model: &Model, states: impl IntoIterator<Item = &'a LayeredState>) -> Result<FlowStatistics> {
    let mut acc = StatsAccumulator::new(model);
    for s in states {
        acc.push(model, s);
    }
    acc.finish()
}

/// Statistics of all snapshots in a run directory.
pub fn statistics_from_dir(model: &Model, dir: &Path) -> Result<FlowStatistics> {
    let mut acc = StatsAccumulator::new(model);
    for p in list_snapshots(dir)? {
        let c = Container::load(&p)?;
        let (s, _, _) = snapshot_from_container(&c, model.layers(), model.mesh.n_cells, model.mesh.n_edges)?;
        acc.push(model, &s);
    }
    acc.finish()
}

/// `sqrt(sum_k sum_e A_e <hbar_k>_E u_k^2)` with the rest thicknesses.
pub fn weighted_l2(model: &Model, u: &[f64]) -> f64 {
    let ne = model.mesh.n_edges;
    let mut s = 0.0;
    for k in 0..model.layers() {
        let ops = model.ops(k);
        let he = ops.interp_i2e(&model.masks.h0[k]);
        for e in 0..ne {
            let v = u[k * ne + e];
            s += model.mesh.a_e[e] * he[e] * v * v;
        }
    }
    s.sqrt()
}

/// Mean-flow error in the thickness-weighted norm and max SSH RMS error.
pub fn compare_statistics(model: &Model, a: &FlowStatistics, reference: &FlowStatistics) -> (f64, f64) {
    let du: Vec<f64> = a.mean_u.iter().zip(&reference.mean_u).map(|(x, y)| x - y).collect();
    let rms = a
        .ssh_rms
        .iter()
        .zip(&reference.ssh_rms)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    (weighted_l2(model, &du), rms)
}
