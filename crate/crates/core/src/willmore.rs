//! Willmore energies and the L2 gradient
//! `W(f) = Delta H + Q(A°) H + P^perp R(H, e_i) e_i`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, KahanSum, Vector, ZERO};
use crate::surface::{
    compute_geometry, integrate_scalar, GeometryCache, ImmersionField, SurfaceError, LEVEL_GAMMA,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WillmoreError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("perturbation step {eps:e} breaks the immersion: {source}")]
    StepTooLarge { eps: f64, source: SurfaceError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `1/2 int |H|^2`.
    #[serde(rename = "W_H")]
    pub w_h: f64,
    /// `1/2 int |A|^2`.
    #[serde(rename = "W_A")]
    pub w_a: f64,
    /// `int |A°|^2`.
    #[serde(rename = "W_circ")]
    pub w_circ: f64,
    /// `int K(T Sigma)`, the ambient sectional curvature of the tangent planes.
    #[serde(rename = "int_KTS")]
    pub int_kts: f64,
    /// `int K~`, the intrinsic Gauss curvature.
    #[serde(rename = "int_K")]
    pub int_k: f64,
    pub area: f64,
    pub euler_char: i32,
    /// `|int K~ - 2 pi chi|`.
    pub gb_residual: f64,
    /// `|W_circ - W_H - 2 int K(T Sigma) + 4 pi chi|`.
    pub identity_residual: f64,
}

pub fn energies(cache: &GeometryCache) -> Result<EnergyReport, SurfaceError> {
    let nodes = cache.nodes();
    let collect = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..nodes.len()).map(f).collect() };
    let h2 = collect(&|k| nodes[k].normsq_h);
    let a2 = collect(&|k| nodes[k].normsq_a);
    let a02 = collect(&|k| nodes[k].normsq_a0);
    let kts = collect(&|k| nodes[k].k_tsigma);
    let kt = collect(&|k| nodes[k].k_til);
    let ones = vec![1.0; nodes.len()];
    let w_h = 0.5 * integrate_scalar(cache, &h2)?;
    let w_a = 0.5 * integrate_scalar(cache, &a2)?;
    let w_circ = integrate_scalar(cache, &a02)?;
    let int_kts = integrate_scalar(cache, &kts)?;
    let int_k = integrate_scalar(cache, &kt)?;
    let area = integrate_scalar(cache, &ones)?;
    let chi = cache.surface().euler_char();
    let four_pi_chi = 4.0 * PI * chi as f64;
    Ok(EnergyReport {
        w_h,
        w_a,
        w_circ,
        int_kts,
        int_k,
        area,
        euler_char: chi,
        gb_residual: (int_k - 2.0 * PI * chi as f64).abs(),
        identity_residual: (w_circ - w_h - 2.0 * int_kts + four_pi_chi).abs(),
    })
}

/// Willmore gradient at every node two rings inside its chart (zero
/// elsewhere). The output is normal.
pub fn gradient(cache: &GeometryCache) -> Vec<Vector> {
    let nodes = cache.nodes();
    let n = cache.dim();
    let s = cache.surface();
    let amb = cache.ambient();
    let h: Vec<Vector> = nodes.iter().map(|nd| nd.h).collect();
    let lap = crate::surface::normal_laplacian_unchecked(cache, &h);
    (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let nd = &nodes[k];
            if nd.level < LEVEL_GAMMA || s.depth(k) < 2 {
                return ZERO;
            }
            let mut w = lap[k];
            for ea in 0..2 {
                for eb in 0..2 {
                    let a0 = nd.in_frame(&nd.a0, ea, eb);
                    linalg::axpy(&mut w, nd.inner(&a0, &nd.h, n), &a0);
                }
            }
            let curv = amb.curvature_at(&nd.f);
            if !curv.is_flat() {
                for e in &nd.etil {
                    w = linalg::add(&w, &curv.apply(&nd.h, e, e));
                }
            }
            nd.perp(&w, n)
        })
        .collect()
}

/// `int <a, b> dmu` of two ambient vector fields along the immersion.
pub fn l2_pairing(cache: &GeometryCache, a: &[Vector], b: &[Vector]) -> f64 {
    let n = cache.dim();
    let mut acc = KahanSum::default();
    for (k, w) in cache.quadrature_nodes() {
        let nd = cache.node(k);
        acc.add(w * nd.inner(&a[k], &b[k], n) * nd.area_el);
    }
    acc.value()
}

/// Normal part of an ambient vector field.
pub fn project_normal(cache: &GeometryCache, v: &[Vector]) -> Vec<Vector> {
    let n = cache.dim();
    cache
        .nodes()
        .iter()
        .zip(v)
        .map(|(nd, x)| if nd.det > 0.0 { nd.perp(x, n) } else { ZERO })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingCheck {
    /// `(W_H(f + eps phi) - W_H(f - eps phi)) / (2 eps)`.
    pub directional: f64,
    /// `int <W(f), phi> dmu`.
    pub pairing: f64,
    pub rel_err: f64,
}

/// Compare the directional derivative of the discrete energy with the L2
/// pairing of the gradient.
pub fn gradient_pairing_check(
    field: &ImmersionField,
    phi: &[Vector],
    eps: f64,
) -> Result<PairingCheck, WillmoreError> {
    let cache = compute_geometry(field)?;
    let w = gradient(&cache);
    let pairing = l2_pairing(&cache, &w, phi);
    let energy_at = |s: f64| -> Result<f64, WillmoreError> {
        let moved = field.displaced(phi, s)?;
        let c = compute_geometry(&moved)
            .map_err(|source| WillmoreError::StepTooLarge { eps, source })?;
        Ok(energies(&c)?.w_h)
    };
    let plus = energy_at(eps)?;
    let minus = energy_at(-eps)?;
    let directional = (plus - minus) / (2.0 * eps);
    Ok(PairingCheck {
        directional,
        pairing,
        rel_err: (directional - pairing).abs() / pairing.abs().max(1e-12),
    })
}
