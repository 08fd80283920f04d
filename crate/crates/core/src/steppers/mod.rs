//! Time integrators: classical RK4 and exponential Runge-Kutta methods.

mod tableau;

pub use tableau::{etd3_gamma, PhiTerm, Tableau};

use std::time::Instant;

use crate::krylov::{build_basis, Dissipation, KrylovSettings, LinearOperator, PhiRequest};
use crate::linops::{LayerReduction, ProjectedOperator, ReducedOperator, ReductionKind, ReferenceOperator};
use crate::model::{LayeredState, Model, Workspace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Rk4,
    EtdEuler,
    Etd2 { c2: f64 },
    Etd3 { c2: f64, c3: f64 },
}

impl Scheme {
    pub fn tableau(&self) -> Option<Tableau> {
        match *self {
            Scheme::Rk4 => None,
            Scheme::EtdEuler => Some(Tableau::euler()),
            Scheme::Etd2 { c2 } => Some(Tableau::etd2(c2)),
            Scheme::Etd3 { c2, c3 } => Some(Tableau::etd3(c2, c3)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |c: f64| c > 0.0 && c <= 1.0;
        match *self {
            Scheme::Etd2 { c2 } if !ok(c2) => Err(Error::Config(format!("c2 = {c2} outside (0, 1]"))),
            Scheme::Etd3 { c2, c3 } => {
                if !ok(c2) || !ok(c3) || c2 == c3 {
                    return Err(Error::Config(format!("inadmissible (c2, c3) = ({c2}, {c3})")));
                }
                if (c3 - 2.0 / 3.0).abs() > 1e-14 && (3.0 * c2 * c2 - 2.0 * c2).abs() < 1e-14 {
                    return Err(Error::Config("c2 = 2/3 requires c3 = 2/3".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Scheme::Rk4 => "rk4".into(),
            Scheme::EtdEuler => "etd1".into(),
            Scheme::Etd2 { c2 } => format!("etd2(c2={c2})"),
            Scheme::Etd3 { c2, c3 } => format!("etd3(c2={c2},c3={c3})"),
        }
    }
}

/// Choice of the linear part `A_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearChoice {
    /// Linearization at the rest state, built once.
    ReferenceFixed,
    /// Linearization at `(h_n, 0)` in every step.
    ReferenceUpdated,
    Barotropic,
    BarotropicMassConserving,
    /// `A_n = 0`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub linear: LinearChoice,
    pub dissipation: Option<Dissipation>,
    pub krylov: KrylovSettings,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::Etd2 { c2: 1.0 },
            linear: LinearChoice::ReferenceFixed,
            dissipation: None,
            krylov: KrylovSettings::default(),
        }
    }
}

/// Bookkeeping of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    /// Largest Krylov dimension used.
    pub krylov_max: usize,
    /// Sum of Krylov dimensions over all bases.
    pub krylov_total: usize,
    pub matvecs: usize,
    pub rhs_evals: usize,
}

/// Source of `phi_s(c dt A) b` and of `A x` for an exponential step.
pub trait PhiProvider {
    fn dim(&self) -> usize;

    fn apply_linear(&self, x: &[f64], y: &mut [f64]);

    /// All requested `phi_s(c dt A) b` from one basis.
    fn phis(
        &self,
        b: &[f64],
        dt: f64,
        reqs: &[PhiRequest],
        diss: Option<Dissipation>,
        settings: &KrylovSettings,
        info: &mut StepInfo,
    ) -> Result<Vec<Vec<f64>>>;
}

fn inv_factorial(s: usize) -> f64 {
    (1..=s).fold(1.0, |a, k| a / k as f64)
}

fn basis_phis(
    op: &dyn LinearOperator,
    b: &[f64],
    dt: f64,
    reqs: &[PhiRequest],
    diss: Option<Dissipation>,
    settings: &KrylovSettings,
    info: &mut StepInfo,
) -> Result<Vec<Vec<f64>>> {
    let basis = build_basis(op, b, dt, reqs, diss, settings)?;
    info.krylov_max = info.krylov_max.max(basis.dim());
    info.krylov_total += basis.dim();
    info.matvecs += basis.matvecs;
    Ok(reqs.iter().map(|r| basis.apply_phi(r.s, dt, r.c, diss)).collect())
}

/// Krylov approximation with the full operator.
pub struct FullLinear<'a>(pub &'a dyn LinearOperator);

impl PhiProvider for FullLinear<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_linear(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }

    fn phis(
        &self,
        b: &[f64],
        dt: f64,
        reqs: &[PhiRequest],
        diss: Option<Dissipation>,
        settings: &KrylovSettings,
        info: &mut StepInfo,
    ) -> Result<Vec<Vec<f64>>> {
        basis_phis(self.0, b, dt, reqs, diss, settings, info)
    }
}

/// Projected operator `A_P`, with the Krylov space built for `A_hat`.
pub struct ProjectedLinear<'a>(pub ReducedOperator<'a>);

impl PhiProvider for ProjectedLinear<'_> {
    fn dim(&self) -> usize {
        self.0.op.dim()
    }

    fn apply_linear(&self, x: &[f64], y: &mut [f64]) {
        ProjectedOperator { reduced: self.0 }.apply(x, y)
    }

    fn phis(
        &self,
        b: &[f64],
        dt: f64,
        reqs: &[PhiRequest],
        diss: Option<Dissipation>,
        settings: &KrylovSettings,
        info: &mut StepInfo,
    ) -> Result<Vec<Vec<f64>>> {
        let red = self.0.red;
        let bh = red.psi_dag(b);
        let pb = red.psi(&bh);
        let small = basis_phis(&self.0, &bh, dt, reqs, diss, settings, info)?;
        Ok(reqs
            .iter()
            .zip(small)
            .map(|(r, ph)| {
                let f = inv_factorial(r.s);
                let lift = red.psi(&ph);
                b.iter()
                    .zip(&pb)
                    .zip(&lift)
                    .map(|((b, p), l)| f * (b - p) + l)
                    .collect()
            })
            .collect())
    }
}

/// `A = 0`: `phi_s(0) b = b / s!`.
pub struct ZeroLinear(pub usize);

impl PhiProvider for ZeroLinear {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_linear(&self, _x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
    }

    fn phis(
        &self,
        b: &[f64],
        _dt: f64,
        reqs: &[PhiRequest],
        _diss: Option<Dissipation>,
        _settings: &KrylovSettings,
        _info: &mut StepInfo,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(reqs
            .iter()
            .map(|r| b.iter().map(|x| x * inv_factorial(r.s)).collect())
            .collect())
    }
}

/// One exponential Runge-Kutta step for `V' = F(V)` with linear part `lin`.
///
/// Each stage right-hand side (`F(V_n)`, then the remainders) gets one Krylov basis that
/// serves every `phi` evaluation it enters.
pub fn etd_step(
    tab: &Tableau,
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    lin: &dyn PhiProvider,
    v: &[f64],
    dt: f64,
    diss: Option<Dissipation>,
    settings: &KrylovSettings,
) -> Result<(Vec<f64>, StepInfo)> {
    let n = v.len();
    let s = tab.stages();
    let mut info = StepInfo::default();
    let fv = f(v)?;
    info.rhs_evals += 1;
    // stage accumulators, the last one is V_{n+1}
    let mut acc: Vec<Vec<f64>> = vec![v.to_vec(); s + 1];
    let mut reqs = Vec::new();
    let mut slots = Vec::new();
    for i in 1..s {
        reqs.push(PhiRequest { s: 1, c: tab.c[i] });
        slots.push((i, tab.c[i]));
    }
    reqs.push(PhiRequest { s: 1, c: 1.0 });
    slots.push((s, 1.0));
    let out = lin.phis(&fv, dt, &reqs, diss, settings, &mut info)?;
    for ((i, coef), y) in slots.into_iter().zip(out) {
        acc[i].iter_mut().zip(&y).for_each(|(a, y)| *a += dt * coef * y);
    }
    let mut av = vec![0.0; n];
    for j in 1..s {
        let vj = acc[j].clone();
        let fj = f(&vj)?;
        info.rhs_evals += 1;
        let dv: Vec<f64> = vj.iter().zip(v).map(|(a, b)| a - b).collect();
        lin.apply_linear(&dv, &mut av);
        let r: Vec<f64> = (0..n).map(|k| fj[k] - fv[k] - av[k]).collect();
        let mut reqs = Vec::new();
        let mut slots = Vec::new();
        for i in j + 1..s {
            for p in &tab.a[i][j] {
                reqs.push(PhiRequest { s: p.s, c: p.c });
                slots.push((i, p.coef));
            }
        }
        for p in &tab.b[j] {
            reqs.push(PhiRequest { s: p.s, c: p.c });
            slots.push((s, p.coef));
        }
        let out = lin.phis(&r, dt, &reqs, diss, settings, &mut info)?;
        for ((i, coef), y) in slots.into_iter().zip(out) {
            acc[i].iter_mut().zip(&y).for_each(|(a, y)| *a += dt * coef * y);
        }
    }
    Ok((acc.pop().unwrap(), info))
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step(f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>, v: &[f64], dt: f64) -> Result<Vec<f64>> {
    let k1 = f(v)?;
    let shift = |k: &[f64], a: f64| -> Vec<f64> { v.iter().zip(k).map(|(v, k)| v + a * k).collect() };
    let k2 = f(&shift(&k1, 0.5 * dt))?;
    let k3 = f(&shift(&k2, 0.5 * dt))?;
    let k4 = f(&shift(&k3, dt))?;
    Ok((0..v.len())
        .map(|i| v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Time stepper bound to one model.
pub struct Stepper<'m> {
    pub model: &'m Model,
    pub cfg: StepperConfig,
    fixed: Option<ReferenceOperator<'m>>,
    reduction: Option<LayerReduction>,
    ws: Workspace,
    pub last: StepInfo,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m Model, cfg: StepperConfig) -> Result<Self> {
        cfg.scheme.validate()?;
        let fixed = match cfg.linear {
            LinearChoice::ReferenceFixed | LinearChoice::Barotropic | LinearChoice::BarotropicMassConserving => {
                Some(ReferenceOperator::at_rest(model))
            }
            _ => None,
        };
        let reduction = match (cfg.linear, &fixed) {
            (LinearChoice::Barotropic, Some(op)) => Some(LayerReduction::build(op, ReductionKind::Standard)),
            (LinearChoice::BarotropicMassConserving, Some(op)) => {
                Some(LayerReduction::build(op, ReductionKind::MassConserving))
            }
            _ => None,
        };
        Ok(Stepper {
            model,
            cfg,
            fixed,
            reduction,
            ws: Workspace::new(model),
            last: StepInfo::default(),
        })
    }

    /// The cached rest-state operator, if the configuration uses one.
    pub fn reference(&self) -> Option<&ReferenceOperator<'m>> {
        self.fixed.as_ref()
    }

    pub fn reduction(&self) -> Option<&LayerReduction> {
        self.reduction.as_ref()
    }

    /// Advance `v` by `dt`.
    pub fn step(&mut self, v: &LayeredState, dt: f64) -> Result<LayeredState> {
        let model = self.model;
        let ws = &mut self.ws;
        let mut out = model.zeros();
        let mut f = |x: &[f64]| -> Result<Vec<f64>> {
            let s = v.like(x.to_vec());
            model.tendency_into(&s, &mut out, ws)?;
            Ok(out.data.clone())
        };
        let tab = match self.cfg.scheme.tableau() {
            None => {
                self.last = StepInfo {
                    rhs_evals: 4,
                    ..StepInfo::default()
                };
                return Ok(v.like(rk4_step(&mut f, &v.data, dt)?));
            }
            Some(t) => t,
        };
        let (diss, kry) = (self.cfg.dissipation, &self.cfg.krylov);
        let (next, info) = match self.cfg.linear {
            LinearChoice::ReferenceFixed => {
                let op = self.fixed.as_ref().unwrap();
                etd_step(&tab, &mut f, &FullLinear(op), &v.data, dt, diss, kry)?
            }
            LinearChoice::ReferenceUpdated => {
                let mut hbar = v.clone();
                hbar.split_mut().1.iter_mut().for_each(|u| *u = 0.0);
                let op = ReferenceOperator::new(model, &hbar);
                etd_step(&tab, &mut f, &FullLinear(&op), &v.data, dt, diss, kry)?
            }
            LinearChoice::Barotropic | LinearChoice::BarotropicMassConserving => {
                let op = self.fixed.as_ref().unwrap();
                let red = ReducedOperator::new(self.reduction.as_ref().unwrap(), op);
                etd_step(&tab, &mut f, &ProjectedLinear(red), &v.data, dt, diss, kry)?
            }
            LinearChoice::Zero => etd_step(&tab, &mut f, &ZeroLinear(v.len()), &v.data, dt, diss, kry)?,
        };
        self.last = info;
        let next = v.like(next);
        if let Some(i) = next.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Unstable {
                step: 0,
                time: 0.0,
                reason: format!("non-finite entry {i} after step"),
            });
        }
        Ok(next)
    }

    /// Advance `n` steps, stopping at the first failure.
    pub fn run(&mut self, v: &LayeredState, dt: f64, n: usize) -> Result<LayeredState> {
        let mut s = v.clone();
        for k in 0..n {
            s = self.step(&s, dt).map_err(|e| match e {
                Error::Unstable { reason, .. } => Error::Unstable {
                    step: k + 1,
                    time: (k + 1) as f64 * dt,
                    reason,
                },
                e => e,
            })?;
        }
        Ok(s)
    }
}

/// Result of a stability bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    /// Largest `dt` found stable.
    pub dt_stable: f64,
    /// Smallest `dt` found unstable.
    pub dt_unstable: f64,
    pub evaluations: usize,
    pub wall_seconds: f64,
}

/// Whether `n` steps of size `dt` stay finite with the energy anomaly below `growth` times its start value.
pub fn is_stable(model: &Model, cfg: &StepperConfig, v0: &LayeredState, dt: f64, n: usize, growth: f64) -> bool {
    let Ok(mut st) = Stepper::new(model, *cfg) else {
        return false;
    };
    let e0 = model.energy_anomaly(v0).abs().max(f64::MIN_POSITIVE);
    let mut s = v0.clone();
    for _ in 0..n {
        match st.step(&s, dt) {
            Ok(x) => s = x,
            Err(_) => return false,
        }
        let e = model.energy_anomaly(&s);
        if !e.is_finite() || e.abs() > growth * e0 {
            return false;
        }
    }
    true
}

/// Bisection over `dt` between a stable `lo` and an unstable `hi`.
pub fn stability_probe(
    model: &Model,
    cfg: &StepperConfig,
    v0: &LayeredState,
    mut lo: f64,
    mut hi: f64,
    n_steps: usize,
    iters: usize,
) -> ProbeResult {
    let t0 = Instant::now();
    let growth = 10.0;
    let mut evals = 0;
    // widen the bracket when needed
    while !is_stable(model, cfg, v0, lo, n_steps, growth) && lo > 1e-12 {
        hi = lo;
        lo *= 0.5;
        evals += 1;
    }
    while is_stable(model, cfg, v0, hi, n_steps, growth) && hi < 1e12 {
        lo = hi;
        hi *= 2.0;
        evals += 1;
    }
    evals += 2;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        evals += 1;
        if is_stable(model, cfg, v0, mid, n_steps, growth) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ProbeResult {
        dt_stable: lo,
        dt_unstable: hi,
        evaluations: evals,
        wall_seconds: t0.elapsed().as_secs_f64(),
    }
}

/// Fixed Krylov dimension `round(1.3 C + 15)` for a Courant number `C`.
pub fn default_krylov_dim(courant: f64) -> usize {
    (1.3 * courant + 15.0).round() as usize
}
