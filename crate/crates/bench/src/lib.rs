//! Fixtures shared by the kernel benchmarks.

use mlswe::harness::config::{MeshSource, ScenarioKind};
use mlswe::harness::{setup, RunConfig};
use mlswe::model::{LayeredState, Model};

/// Three-layer basin with a geostrophic bump at spacing `dc`.
pub fn fixture(dc: f64) -> (Model, LayeredState) {
    let mut cfg = RunConfig::default();
    cfg.mesh = MeshSource::Basin { dc };
    cfg.scenario.name = ScenarioKind::Geostrophic;
    cfg.layers.rho = vec![1025.0, 1027.0, 1028.0];
    setup(&cfg).expect("fixture configuration is valid")
}
