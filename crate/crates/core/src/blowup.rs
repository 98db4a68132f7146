//! Concentration detection, parabolic rescaling and the type-II indicator.
//!
//! Rescaling by `r` keeps chart coordinates and multiplies the ambient metric
//! by `r^{-2}`; flow time maps as `t = t_j + r^4 tau`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{concentration, CenterSet};
use crate::linalg::{self, Vector, ZERO};
use crate::surface::{compute_geometry, GeometryCache, ImmersionField, SurfaceError};
use crate::willmore::{energies, gradient, l2_pairing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error("no radius reaches the concentration threshold")]
    NoConcentration,
    #[error("no samples fall in the rescaled window")]
    WindowEmpty,
    #[error("invalid blow-up input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Immersion at one time of a trajectory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub field: ImmersionField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupSpec {
    /// First sampled time with `chi(r_j, t) >= eps^2`.
    pub t_j: f64,
    pub r_j: f64,
    /// Maximizing centre of `E(., r_j, t_j)`.
    pub p_j: Vec<f64>,
    pub chi: f64,
    pub sample: usize,
}

impl BlowupSpec {
    pub fn time_of(&self, tau: f64) -> f64 {
        self.t_j + self.r_j.powi(4) * tau
    }

    pub fn tau_of(&self, t: f64) -> f64 {
        (t - self.t_j) / self.r_j.powi(4)
    }

    pub fn center(&self) -> Vector {
        linalg::from_slice(&self.p_j)
    }
}

fn check_trajectory(traj: &[Sample]) -> Result<(), BlowupError> {
    if traj.is_empty() {
        return Err(BlowupError::BadInput("empty trajectory".into()));
    }
    if traj.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(BlowupError::BadInput("sample times must increase".into()));
    }
    Ok(())
}

/// For each radius of a decreasing schedule, the first sample where
/// `chi(r) >= eps_sq`. Radii that never cross are skipped.
pub fn detect_concentration(
    traj: &[Sample],
    eps_sq: f64,
    radii: &[f64],
    centers: &CenterSet,
) -> Result<Vec<BlowupSpec>, BlowupError> {
    check_trajectory(traj)?;
    if !(eps_sq > 0.0) {
        return Err(BlowupError::BadInput("threshold must be positive".into()));
    }
    if radii.is_empty()
        || radii.iter().any(|r| !(*r > 0.0))
        || radii.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(BlowupError::BadInput(
            "radius schedule must be positive and decreasing".into(),
        ));
    }
    let mut found: Vec<Option<BlowupSpec>> = vec![None; radii.len()];
    for (si, s) in traj.iter().enumerate() {
        if found.iter().all(Option::is_some) {
            break;
        }
        let cache = compute_geometry(&s.field)?;
        for (ri, &r) in radii.iter().enumerate() {
            if found[ri].is_some() {
                continue;
            }
            let probe = concentration(&cache, cache.ambient(), r, centers);
            if probe.chi >= eps_sq {
                found[ri] = Some(BlowupSpec {
                    t_j: s.t,
                    r_j: r,
                    p_j: probe.argmax_center,
                    chi: probe.chi,
                    sample: si,
                });
            }
        }
    }
    let specs: Vec<BlowupSpec> = found.into_iter().flatten().collect();
    if specs.is_empty() {
        return Err(BlowupError::NoConcentration);
    }
    Ok(specs)
}

/// The immersion `f` viewed in the ambient metric `r^{-2} g`.
pub fn rescale_field(field: &ImmersionField, r: f64) -> ImmersionField {
    field.with_ambient(Arc::new(field.ambient().rescaled(r.powi(-2))))
}

#[derive(Debug, Clone)]
pub struct RescaledState {
    pub tau: f64,
    pub source_t: f64,
    pub field: ImmersionField,
    pub w_h: f64,
    pub max_norm_a: f64,
    /// `int |W|^2 dmu` in the rescaled metric.
    pub grad_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaledSummary {
    pub tau: f64,
    pub source_t: f64,
    #[serde(rename = "W_H")]
    pub w_h: f64,
    #[serde(rename = "max_norm_A")]
    pub max_norm_a: f64,
    pub grad_sq: f64,
}

impl RescaledState {
    pub fn summary(&self) -> RescaledSummary {
        RescaledSummary {
            tau: self.tau,
            source_t: self.source_t,
            w_h: self.w_h,
            max_norm_a: self.max_norm_a,
            grad_sq: self.grad_sq,
        }
    }
}

/// Rescaled states for samples with `tau` in `[tau_min, tau_max]`.
pub fn rescale(
    traj: &[Sample],
    spec: &BlowupSpec,
    tau_min: f64,
    tau_max: f64,
) -> Result<Vec<RescaledState>, BlowupError> {
    check_trajectory(traj)?;
    if !(spec.r_j > 0.0) || !(tau_min <= tau_max) {
        return Err(BlowupError::BadInput(
            "need r_j > 0 and tau_min <= tau_max".into(),
        ));
    }
    let mut out = Vec::new();
    for s in traj {
        let tau = spec.tau_of(s.t);
        if tau < tau_min || tau > tau_max {
            continue;
        }
        let field = rescale_field(&s.field, spec.r_j);
        let cache = compute_geometry(&field)?;
        let e = energies(&cache)?;
        let w = gradient(&cache);
        out.push(RescaledState {
            tau,
            source_t: s.t,
            w_h: e.w_h,
            max_norm_a: cache.max_norm_a(),
            grad_sq: l2_pairing(&cache, &w, &w),
            field,
        });
    }
    if out.is_empty() {
        return Err(BlowupError::WindowEmpty);
    }
    Ok(out)
}

/// Trapezoidal `int int |W|^2 dmu dtau` over a rescaled window.
pub fn window_dissipation(states: &[RescaledState]) -> f64 {
    states
        .windows(2)
        .map(|w| 0.5 * (w[0].grad_sq + w[1].grad_sq) * (w[1].tau - w[0].tau))
        .sum()
}

/// `(T - t)^{1/4} sup |A|(t)` per sample of `(t, sup |A|)`.
pub fn type2_indicator(samples: &[(f64, f64)], t_est: f64) -> Result<Vec<f64>, BlowupError> {
    if samples.iter().any(|(t, _)| !(*t < t_est)) {
        return Err(BlowupError::BadInput(
            "T_est must exceed every sample time".into(),
        ));
    }
    Ok(samples
        .iter()
        .map(|(t, a)| (t_est - t).powf(0.25) * a)
        .collect())
}

/// `sup |A|` per sample, for [`type2_indicator`].
pub fn max_curvature_samples(traj: &[Sample]) -> Result<Vec<(f64, f64)>, BlowupError> {
    traj.iter()
        .map(|s| Ok((s.t, compute_geometry(&s.field)?.max_norm_a())))
        .collect()
}

/// Strict increase over the last `k` values.
pub fn increasing_tail(values: &[f64], k: usize) -> bool {
    if values.len() < k || k < 2 {
        return false;
    }
    values[values.len() - k..].windows(2).all(|w| w[1] > w[0])
}

/// Chart coordinates rescaled to be orthonormal at `origin`:
/// `y = L^T (x - origin)` with `g(origin) = L L^T`. Exact for constant metrics.
pub fn normal_coordinates(field: &ImmersionField, origin: &Vector) -> Vec<Vector> {
    let n = field.dim();
    let g = field.ambient().metric(origin);
    // Cholesky factor of the metric at the origin
    let mut l = [[0.0; linalg::MAX_DIM]; linalg::MAX_DIM];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = if i == j {
                s.max(0.0).sqrt()
            } else {
                s / l[j][j]
            };
        }
    }
    field
        .points()
        .iter()
        .map(|x| {
            let d = linalg::sub(x, origin);
            let mut y = ZERO;
            for j in 0..n {
                for i in j..n {
                    y[j] += l[i][j] * d[i];
                }
            }
            y
        })
        .collect()
}

/// Area-weighted mean of the node images.
pub fn centroid(cache: &GeometryCache) -> Vector {
    let mut c = ZERO;
    let mut total = 0.0;
    for (k, w) in cache.quadrature_nodes() {
        let da = w * cache.node(k).area_el;
        linalg::axpy(&mut c, da, &cache.node(k).f);
        total += da;
    }
    linalg::scale(&c, 1.0 / total)
}
