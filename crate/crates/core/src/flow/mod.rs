//! Time integration of `d_t f = -W(f)` with per-step diagnostics.
//!
//! The default scheme is explicit Euler with `dt = c_cfl h^4` and energy
//! backtracking. Periodic grids may additionally use a linearly stabilized
//! variant that preconditions the velocity with `(I + dt s L)^{-1}`, `L` a
//! frozen coefficient biharmonic operator; its fixed points are the same.

mod stabilizer;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{concentration, CenterSet};
use crate::linalg::{self, KahanSum, Vector};
use crate::surface::{compute_geometry, GeometryCache, ImmersionField, SurfaceError, Topology};
use crate::willmore::{energies, gradient, l2_pairing, EnergyReport};

pub use stabilizer::Stabilizer;

/// Accepted steps may raise `W_H` by at most this much.
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = c_cfl * h^4` with `h` the smallest physical edge.
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    Explicit,
    /// Periodic grids only.
    Stabilized {
        strength: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt_policy: DtPolicy,
    pub scheme: Scheme,
    pub max_steps: usize,
    pub t_end: f64,
    pub energy_backtrack: bool,
    pub max_halvings: u32,
    /// Snapshot period in steps, 0 for none.
    pub snapshot_every: usize,
    /// `sup |A|` threshold declaring a singularity; `None` means `1e3 / h`.
    pub singularity_a_max: Option<f64>,
    /// Radius of the recorded concentration value.
    pub chi_radius: f64,
    /// Grid stride of the concentration centres.
    pub chi_stride: usize,
    /// Stop once `||W||_{L2} * area` falls below this.
    pub convergence_tol: f64,
    pub stop_when_converged: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt_policy: DtPolicy::Cfl(0.02),
            scheme: Scheme::Explicit,
            max_steps: 1000,
            t_end: f64::INFINITY,
            energy_backtrack: true,
            max_halvings: 20,
            snapshot_every: 0,
            singularity_a_max: None,
            chi_radius: 0.5,
            chi_stride: 4,
            convergence_tol: 2.0,
            stop_when_converged: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("initial immersion is invalid: {0}")]
    Initial(#[from] SurfaceError),
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::Config(m.to_string()));
        match self.dt_policy {
            DtPolicy::Fixed(dt) | DtPolicy::Cfl(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad("time step parameter must be positive and finite")
            }
            _ => {}
        }
        if let Scheme::Stabilized { strength } = self.scheme {
            if !(strength >= 0.0 && strength.is_finite()) {
                return bad("stabilization strength must be non-negative");
            }
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if let Some(a) = self.singularity_a_max {
            if !(a > 0.0) {
                return bad("singularity threshold must be positive");
            }
        }
        if !(self.chi_radius > 0.0) || self.chi_stride == 0 {
            return bad("concentration radius and stride must be positive");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence tolerance must be positive");
        }
        Ok(())
    }
}

/// One row of `diagnostics.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    /// Step that produced this record, 0 for the initial record.
    pub dt: f64,
    #[serde(rename = "W_H")]
    pub w_h: f64,
    #[serde(rename = "W_A")]
    pub w_a: f64,
    #[serde(rename = "W_circ")]
    pub w_circ: f64,
    pub area: f64,
    #[serde(rename = "max_norm_A")]
    pub max_norm_a: f64,
    pub dissipation_residual: f64,
    pub area_holder_margin: f64,
    pub chi_value: f64,
    pub identity_residual: f64,
    /// `int |W|^2 dmu` at this record.
    pub grad_sq: f64,
    pub min_det_gtil: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum TerminalStatus {
    Converged,
    TimeOut,
    Singular { t: f64, reason: String },
}

/// Accepted flow state with its geometry and history.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    pub cache: GeometryCache,
    pub energy: EnergyReport,
    /// `W(f)` at every node.
    pub grad: Vec<Vector>,
    pub grad_sq: f64,
    pub history: Vec<DiagnosticsRecord>,
    pub w0: f64,
    pub area0: f64,
    /// `sup |A|` threshold in effect.
    pub a_max: f64,
}

impl FlowState {
    pub fn new(f0: ImmersionField, config: &FlowConfig) -> Result<Self, FlowError> {
        config.validate()?;
        if matches!(config.scheme, Scheme::Stabilized { .. })
            && f0.surface().topology() != Topology::Torus
        {
            return Err(FlowError::Config(
                "the stabilized scheme needs a periodic grid".into(),
            ));
        }
        // ghost nodes follow their donors from the start, as after every step
        let mut f0 = f0;
        f0.resync();
        let cache = compute_geometry(&f0)?;
        let energy = energies(&cache)?;
        let grad = gradient(&cache);
        let grad_sq = l2_pairing(&cache, &grad, &grad);
        let a_max = config.singularity_a_max.unwrap_or(1e3 / cache.min_edge());
        let chi = chi_at(&cache, config);
        let record = DiagnosticsRecord {
            step: 0,
            t: 0.0,
            dt: 0.0,
            w_h: energy.w_h,
            w_a: energy.w_a,
            w_circ: energy.w_circ,
            area: energy.area,
            max_norm_a: cache.max_norm_a(),
            dissipation_residual: 0.0,
            area_holder_margin: 0.0,
            chi_value: chi,
            identity_residual: energy.identity_residual,
            grad_sq,
            min_det_gtil: cache.min_det(),
        };
        Ok(FlowState {
            t: 0.0,
            step: 0,
            energy,
            grad,
            grad_sq,
            history: vec![record],
            w0: energy.w_h,
            area0: energy.area,
            a_max,
            cache,
        })
    }

    pub fn field(&self) -> &ImmersionField {
        self.cache.field()
    }

    /// `||W||_{L2} * area`, a scale-invariant stationarity measure.
    pub fn stationarity(&self) -> f64 {
        self.grad_sq.max(0.0).sqrt() * self.energy.area
    }

    pub fn is_converged(&self, config: &FlowConfig) -> bool {
        self.stationarity() < config.convergence_tol
    }

    /// Time step proposed by the policy before halvings and clipping.
    pub fn proposed_dt(&self, config: &FlowConfig) -> f64 {
        match config.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(c) => c * self.cache.min_edge().powi(4),
        }
    }
}

/// Step outcome that ends the run at the last valid state.
#[derive(Debug, Clone)]
pub struct Singularity {
    pub state: FlowState,
    pub reason: String,
}

fn chi_at(cache: &GeometryCache, config: &FlowConfig) -> f64 {
    concentration(
        cache,
        cache.ambient(),
        config.chi_radius,
        &CenterSet::Stride(config.chi_stride),
    )
    .chi
}

/// Velocity applied by the scheme for a step of size `dt`.
fn velocity(
    state: &FlowState,
    config: &FlowConfig,
    stab: Option<&Stabilizer>,
    dt: f64,
) -> Vec<Vector> {
    let minus_w: Vec<Vector> = state.grad.iter().map(|w| linalg::scale(w, -1.0)).collect();
    let (Scheme::Stabilized { strength }, Some(stab)) = (config.scheme, stab) else {
        return minus_w;
    };
    let cache = &state.cache;
    let mut alpha = 0.0_f64;
    let mut beta = 0.0_f64;
    for nd in cache.nodes() {
        alpha = alpha.max(nd.gtil_inv[0][0]);
        beta = beta.max(nd.gtil_inv[1][1]);
    }
    let n = cache.dim();
    let smoothed = stab.apply(&minus_w, n, dt * strength, alpha, beta);
    cache
        .nodes()
        .iter()
        .zip(&smoothed)
        .map(|(nd, v)| nd.perp(v, n))
        .collect()
}

fn stabilizer_for(field: &ImmersionField, config: &FlowConfig) -> Option<Stabilizer> {
    match config.scheme {
        Scheme::Stabilized { .. } => {
            let c = &field.surface().charts()[0];
            Some(Stabilizer::new(c.nu, c.nv, c.hu, c.hv))
        }
        Scheme::Explicit => None,
    }
}

/// Advance by one accepted step.
pub fn step(state: FlowState, config: &FlowConfig) -> Result<FlowState, Box<Singularity>> {
    let stab = stabilizer_for(state.field(), config);
    step_with(state, config, stab.as_ref())
}

fn singular(state: FlowState, reason: String) -> Box<Singularity> {
    Box::new(Singularity { state, reason })
}

fn step_with(
    state: FlowState,
    config: &FlowConfig,
    stab: Option<&Stabilizer>,
) -> Result<FlowState, Box<Singularity>> {
    let mut dt = state.proposed_dt(config);
    if state.t + dt > config.t_end {
        dt = config.t_end - state.t;
    }
    if !(dt > 0.0) {
        return Err(singular(state, "no time left before t_end".into()));
    }
    let mut last_reason = String::new();
    for _ in 0..=config.max_halvings {
        let v = velocity(&state, config, stab, dt);
        let trial = state.field().displaced(&v, dt).and_then(|mut f| {
            f.resync();
            let cache = compute_geometry(&f)?;
            let e = energies(&cache)?;
            Ok((cache, e))
        });
        match trial {
            Ok((cache, e)) => {
                if !config.energy_backtrack || e.w_h <= state.energy.w_h + ENERGY_SLACK {
                    return accept(state, cache, e, dt, config);
                }
                last_reason = format!(
                    "energy increase {:e} at dt = {dt:e}",
                    e.w_h - state.energy.w_h
                );
            }
            Err(err) => {
                last_reason = err.to_string();
                if !config.energy_backtrack {
                    return Err(singular(state, last_reason));
                }
            }
        }
        dt *= 0.5;
    }
    Err(singular(
        state,
        format!(
            "backtracking exhausted after {} halvings: {last_reason}",
            config.max_halvings
        ),
    ))
}

fn accept(
    prev: FlowState,
    cache: GeometryCache,
    energy: EnergyReport,
    dt: f64,
    config: &FlowConfig,
) -> Result<FlowState, Box<Singularity>> {
    let grad = gradient(&cache);
    let grad_sq = l2_pairing(&cache, &grad, &grad);
    let max_norm_a = cache.max_norm_a();
    let t = prev.t + dt;
    let dissipation_residual =
        ((energy.w_h - prev.energy.w_h) / dt + prev.grad_sq).abs() / (prev.grad_sq + 1e-12);
    let mut margin = 0.0_f64;
    for r in &prev.history {
        margin = margin.min(holder_margin(r.t, r.area, t, energy.area, prev.w0));
    }
    let record = DiagnosticsRecord {
        step: prev.step + 1,
        t,
        dt,
        w_h: energy.w_h,
        w_a: energy.w_a,
        w_circ: energy.w_circ,
        area: energy.area,
        max_norm_a,
        dissipation_residual,
        area_holder_margin: margin,
        chi_value: chi_at(&cache, config),
        identity_residual: energy.identity_residual,
        grad_sq,
        min_det_gtil: cache.min_det(),
    };
    let mut history = prev.history;
    history.push(record);
    let next = FlowState {
        t,
        step: prev.step + 1,
        cache,
        energy,
        grad,
        grad_sq,
        history,
        w0: prev.w0,
        area0: prev.area0,
        a_max: prev.a_max,
    };
    if !(max_norm_a <= next.a_max) {
        let reason = format!("sup |A| = {max_norm_a:e} exceeds {:e}", next.a_max);
        return Err(singular(next, reason));
    }
    Ok(next)
}

/// `sqrt(2 |t1 - t2|) W0 - |area1 - area2|`.
pub fn holder_margin(t1: f64, a1: f64, t2: f64, a2: f64, w0: f64) -> f64 {
    (2.0 * (t1 - t2).abs()).sqrt() * w0 - (a1 - a2).abs()
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub state: FlowState,
    pub status: TerminalStatus,
}

impl FlowRun {
    pub fn history(&self) -> &[DiagnosticsRecord] {
        &self.state.history
    }
}

pub fn run(f0: ImmersionField, config: &FlowConfig) -> Result<FlowRun, FlowError> {
    run_with(f0, config, |_| {})
}

/// Like [`run`], calling `observe` on the initial state and after every
/// accepted step.
pub fn run_with<F: FnMut(&FlowState)>(
    f0: ImmersionField,
    config: &FlowConfig,
    mut observe: F,
) -> Result<FlowRun, FlowError> {
    let stab = stabilizer_for(&f0, config);
    let mut state = FlowState::new(f0, config)?;
    observe(&state);
    loop {
        let converged = state.is_converged(config);
        if converged && config.stop_when_converged {
            return Ok(FlowRun {
                state,
                status: TerminalStatus::Converged,
            });
        }
        if state.step >= config.max_steps || state.t >= config.t_end {
            let status = if converged {
                TerminalStatus::Converged
            } else {
                TerminalStatus::TimeOut
            };
            return Ok(FlowRun { state, status });
        }
        match step_with(state, config, stab.as_ref()) {
            Ok(next) => {
                state = next;
                observe(&state);
            }
            Err(s) => {
                let Singularity { state, reason } = *s;
                let t = state.t;
                return Ok(FlowRun {
                    state,
                    status: TerminalStatus::Singular { t, reason },
                });
            }
        }
    }
}

/// Largest relative dissipation residual over consecutive records, or `None`
/// with fewer than two records. Pairs starting from a stationary record
/// (`||W||_{L2} * area < stationary_tol`) count as 0: there both sides are
/// discretization error and their ratio carries no information.
pub fn dissipation_check(history: &[DiagnosticsRecord], stationary_tol: f64) -> Option<f64> {
    if history.len() < 2 {
        return None;
    }
    let worst = history
        .windows(2)
        .filter(|w| w[0].grad_sq.max(0.0).sqrt() * w[0].area >= stationary_tol)
        .map(|w| {
            let rate = (w[1].w_h - w[0].w_h) / w[1].dt;
            (rate + w[0].grad_sq).abs() / (w[0].grad_sq + 1e-12)
        })
        .fold(0.0, f64::max);
    Some(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaHolderReport {
    /// Minimum of `sqrt(2|t1 - t2|) W0 - |area1 - area2|` over record pairs.
    pub worst_margin: f64,
    pub worst_pair: (usize, usize),
    /// Minimum of `sqrt(2 t) W0 + area0 - area(t)`.
    pub finite_time_margin: f64,
}

/// Hölder-type area bounds over distinct record pairs, or `None` with fewer
/// than two records.
pub fn area_holder_check(history: &[DiagnosticsRecord], w0: f64) -> Option<AreaHolderReport> {
    if history.len() < 2 {
        return None;
    }
    let first = &history[0];
    let mut worst = f64::INFINITY;
    let mut pair = (0, 0);
    for (i, a) in history.iter().enumerate() {
        for (j, b) in history.iter().enumerate().skip(i + 1) {
            let m = holder_margin(a.t, a.area, b.t, b.area, w0);
            if m < worst {
                worst = m;
                pair = (i, j);
            }
        }
    }
    let finite_time_margin = history[1..]
        .iter()
        .map(|r| (2.0 * (r.t - first.t)).sqrt() * w0 + first.area - r.area)
        .fold(f64::INFINITY, f64::min);
    Some(AreaHolderReport {
        worst_margin: worst,
        worst_pair: pair,
        finite_time_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationResiduals {
    /// `int |d_t g~ + 2 <A, V>| / int |2 <A, V>|`.
    pub metric: f64,
    /// `int |d_t dmu + <H, V> dmu| / int |<H, V> dmu|`.
    pub area: f64,
    /// Largest relative tangential part of the velocity.
    pub tangential: f64,
    /// The velocity is normal, so the identities apply.
    pub velocity_normal: bool,
    /// The state is stationary and the residuals are reported as 0.
    pub stationary: bool,
}

/// Variation identities for the flow velocity `V = -W(f)`.
pub fn variation_identities_check(
    state: &FlowState,
    dt: f64,
    config: &FlowConfig,
) -> Result<VariationResiduals, SurfaceError> {
    if state.is_converged(config) {
        return Ok(VariationResiduals {
            metric: 0.0,
            area: 0.0,
            tangential: 0.0,
            velocity_normal: true,
            stationary: true,
        });
    }
    let v: Vec<Vector> = state.grad.iter().map(|w| linalg::scale(w, -1.0)).collect();
    variation_identities_with(&state.cache, &v, dt)
}

/// Variation identities for an arbitrary velocity field. A tangential
/// component makes them fail; this is reported through `velocity_normal`.
pub fn variation_identities_with(
    cache: &GeometryCache,
    v: &[Vector],
    dt: f64,
) -> Result<VariationResiduals, SurfaceError> {
    let field = cache.field();
    let n = cache.dim();
    let plus = compute_geometry(&field.displaced(v, dt)?)?;
    let minus = compute_geometry(&field.displaced(v, -dt)?)?;
    let mut num_g = KahanSum::default();
    let mut den_g = KahanSum::default();
    let mut num_a = KahanSum::default();
    let mut den_a = KahanSum::default();
    let mut tangential = 0.0_f64;
    for (k, w) in cache.quadrature_nodes() {
        let nd = cache.node(k);
        let vn = nd.perp(&v[k], n);
        let vt = linalg::sub(&v[k], &vn);
        let vnorm = nd.inner(&v[k], &v[k], n).max(0.0).sqrt();
        if vnorm > 0.0 {
            tangential = tangential.max(nd.inner(&vt, &vt, n).max(0.0).sqrt() / vnorm);
        }
        let (p, m) = (plus.node(k), minus.node(k));
        // frame components of the tensors
        let mut err2 = 0.0;
        let mut pred2 = 0.0;
        for ea in 0..2 {
            for eb in 0..2 {
                let fd = frame_component(&p.gtil, &nd.frame, ea, eb)
                    - frame_component(&m.gtil, &nd.frame, ea, eb);
                let fd = fd / (2.0 * dt);
                let a = nd.in_frame(&nd.a, ea, eb);
                let pred = -2.0 * nd.inner(&a, &v[k], n);
                err2 += (fd - pred).powi(2);
                pred2 += pred * pred;
            }
        }
        let da = w * nd.area_el;
        num_g.add(err2.sqrt() * da);
        den_g.add(pred2.sqrt() * da);
        let fd_mu = (p.area_el - m.area_el) / (2.0 * dt);
        let pred_mu = -nd.inner(&nd.h, &v[k], n) * nd.area_el;
        num_a.add(w * (fd_mu - pred_mu).abs());
        den_a.add(w * pred_mu.abs());
    }
    let ratio = |a: f64, b: f64| {
        if b > 0.0 {
            a / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    Ok(VariationResiduals {
        metric: ratio(num_g.value(), den_g.value()),
        area: ratio(num_a.value(), den_a.value()),
        tangential,
        velocity_normal: tangential < 1e-8,
        stationary: false,
    })
}

fn frame_component(g: &[[f64; 2]; 2], frame: &[[f64; 2]; 2], ea: usize, eb: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += frame[ea][i] * frame[eb][j] * g[i][j];
        }
    }
    s
}

/// Write records as CSV with a header row and round-trip float formatting.
pub fn write_diagnostics_csv<W: Write>(
    out: W,
    history: &[DiagnosticsRecord],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics_csv<R: std::io::Read>(
    input: R,
) -> Result<Vec<DiagnosticsRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Largest chart displacement between two immersions on the same grid.
pub fn max_displacement(a: &ImmersionField, b: &ImmersionField) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| linalg::norm(&linalg::sub(p, q)))
        .fold(0.0, f64::max)
}
