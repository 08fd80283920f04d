use super::config::{RunConfig, SchemeName};
use super::run::{run_model, step_count, CourantInfo, RunOptions};
use crate::linops::ReferenceOperator;
use crate::model::{LayeredState, Model};
use crate::{Error, Result};

/// `||a - b||_{M_H} / ||b - rest||_{M_H}` with `M_H` at the rest state.
pub fn relative_mh_error(model: &Model, a: &LayeredState, b: &LayeredState) -> f64 {
    let op = ReferenceOperator::at_rest(model);
    let rest = model.rest_state();
    let d: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
    let r: Vec<f64> = b.data.iter().zip(&rest.data).map(|(x, y)| x - y).collect();
    (op.inner_mh(&d, &d) / op.inner_mh(&r, &r)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub courant: f64,
    /// `None` when the run failed.
    pub error: Option<f64>,
    pub steps: usize,
    pub wall_seconds: f64,
}

/// Integrate with every `dt` and compare to RK4 with `ref_dt` at the common horizon.
pub fn convergence_study(
    cfg: &RunConfig,
    model: &Model,
    s0: &LayeredState,
    dts: &[f64],
    ref_dt: f64,
) -> Result<(CourantInfo, Vec<ConvergenceRow>)> {
    let courant = CourantInfo::of(model);
    let horizon = cfg.time.horizon;
    for &dt in dts.iter().chain([&ref_dt]) {
        let n = step_count(horizon, dt);
        if ((n as f64) * dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::Config(format!("dt = {dt} does not divide the horizon {horizon}")));
        }
    }
    let opts = RunOptions {
        courant: Some(courant),
        ..RunOptions::default()
    };
    let mut rc = cfg.clone();
    rc.time.scheme = SchemeName::Rk4;
    rc.time.dt = Some(ref_dt);
    rc.time.output_every = usize::MAX;
    let reference = run_model(&rc, model, s0.clone(), &opts)?.state;
    let mut rows = Vec::new();
    for &dt in dts {
        let mut c = cfg.clone();
        c.time.dt = Some(dt);
        c.time.output_every = usize::MAX;
        let t = std::time::Instant::now();
        let out = run_model(&c, model, s0.clone(), &opts);
        let error = match out {
            Ok(o) => Some(relative_mh_error(model, &o.state, &reference)).filter(|e| e.is_finite()),
            Err(e) => {
                log::warn!("dt = {dt}: {e}");
                None
            }
        };
        rows.push(ConvergenceRow {
            dt,
            courant: courant.courant(dt),
            error,
            steps: step_count(horizon, dt),
            wall_seconds: t.elapsed().as_secs_f64(),
        });
    }
    Ok((courant, rows))
}

/// Least-squares slope of `log(error)` against `log(dt)` over the rows with an error.
pub fn fitted_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.error.filter(|e| *e > 0.0).map(|e| (r.dt.ln(), e.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
