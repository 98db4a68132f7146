//! Concentration function, lifespan bound and the inequality verifiers.
//!
//! Verifiers report empirical constants; thresholds are left to callers.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ambient::{AmbientManifold, BoundedGeometry};
use crate::linalg::{self, KahanSum, Vector, MAX_DIM};
use crate::surface::{gradient_of_scalar, GeometryCache};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid radii: need 0 < sigma <= rho (got sigma = {sigma}, rho = {rho})")]
    BadRadii { sigma: f64, rho: f64 },
    #[error("exponents give alpha = {alpha}, outside (0, 1)")]
    BadExponents { alpha: f64 },
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("lifespan bound is vacuous: log argument {log_arg} <= 1")]
    VacuousBound { log_arg: f64 },
    #[error("scalar field has {got} values for {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
}

/// Candidate centres for the supremum over the ambient.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterSet {
    /// Images of all quadrature nodes.
    AllNodes,
    /// Images of quadrature nodes whose grid indices are multiples of the stride.
    Stride(usize),
    Points(Vec<Vector>),
}

impl CenterSet {
    pub fn resolve(&self, cache: &GeometryCache) -> Vec<(Vector, Option<usize>)> {
        let s = cache.surface();
        let pick = |k: usize| (cache.node(k).f, Some(k));
        match self {
            CenterSet::AllNodes => cache.quadrature_nodes().map(|(k, _)| pick(k)).collect(),
            CenterSet::Stride(st) => {
                let st = (*st).max(1);
                cache
                    .quadrature_nodes()
                    .filter(|(k, _)| {
                        let (_, i, j) = s.locate(*k);
                        i % st == 0 && j % st == 0
                    })
                    .map(|(k, _)| pick(k))
                    .collect()
            }
            CenterSet::Points(ps) => ps.iter().map(|p| (*p, None)).collect(),
        }
    }
}

/// Spatial hash of quadrature node images for geodesic ball queries.
pub struct BallIndex<'a> {
    cache: &'a GeometryCache,
    ambient: &'a AmbientManifold,
    cell: f64,
    buckets: HashMap<[i64; MAX_DIM], Vec<usize>>,
    all: Vec<usize>,
    max_radius: f64,
}

impl<'a> BallIndex<'a> {
    /// `cell` is the bucket edge in chart units; a non-finite or non-positive
    /// value disables bucketing.
    pub fn new(cache: &'a GeometryCache, ambient: &'a AmbientManifold, cell: f64) -> Self {
        let n = cache.dim();
        let all: Vec<usize> = cache.quadrature_nodes().map(|(k, _)| k).collect();
        let max_radius = all
            .iter()
            .map(|&k| linalg::norm(&cache.node(k).f))
            .fold(0.0, f64::max);
        let mut buckets: HashMap<[i64; MAX_DIM], Vec<usize>> = HashMap::new();
        let cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            f64::INFINITY
        };
        if cell.is_finite() {
            for &k in &all {
                buckets
                    .entry(key(&cache.node(k).f, cell, n))
                    .or_default()
                    .push(k);
            }
        }
        BallIndex {
            cache,
            ambient,
            cell,
            buckets,
            all,
            max_radius,
        }
    }

    /// Index with a cell adapted to balls of geodesic radius `rho` around `centers`.
    pub fn for_radius(
        cache: &'a GeometryCache,
        ambient: &'a AmbientManifold,
        rho: f64,
        centers: &[Vector],
    ) -> Self {
        let max_r = cache
            .quadrature_nodes()
            .map(|(k, _)| linalg::norm(&cache.node(k).f))
            .fold(0.0, f64::max);
        let cell = centers
            .iter()
            .map(|c| ambient.chart_radius_bound(c, rho, max_r))
            .fold(0.0, f64::max);
        Self::new(cache, ambient, cell)
    }

    /// Quadrature nodes whose image lies in the closed geodesic ball.
    pub fn query(&self, center: &Vector, radius: f64) -> Vec<usize> {
        let n = self.cache.dim();
        let bound = self
            .ambient
            .chart_radius_bound(center, radius, self.max_radius);
        let inside = |k: &usize| {
            self.ambient
                .geodesic_distance(center, &self.cache.node(*k).f)
                .map(|d| d <= radius)
                .unwrap_or(false)
        };
        let reach = if self.cell.is_finite() && bound.is_finite() {
            (bound / self.cell).ceil() as i64
        } else {
            -1
        };
        let cells = (2 * reach + 1).max(1) as f64;
        if reach < 0 || cells.powi(n as i32) > self.all.len() as f64 {
            return self.all.iter().copied().filter(inside).collect();
        }
        let base = key(center, self.cell, n);
        let mut out = Vec::new();
        let mut off = [-reach; MAX_DIM];
        loop {
            let mut k = base;
            for a in 0..n {
                k[a] += off[a];
            }
            if let Some(list) = self.buckets.get(&k) {
                out.extend(list.iter().copied().filter(inside));
            }
            // odometer over the cell block
            let mut a = 0;
            loop {
                if a == n {
                    out.sort_unstable();
                    return out;
                }
                off[a] += 1;
                if off[a] <= reach {
                    break;
                }
                off[a] = -reach;
                a += 1;
            }
        }
    }
}

fn key(x: &Vector, cell: f64, n: usize) -> [i64; MAX_DIM] {
    let mut k = [0i64; MAX_DIM];
    for a in 0..n {
        k[a] = (x[a] / cell).floor() as i64;
    }
    k
}

/// Integrals over the part of the surface inside a ball.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BallSums {
    pub area: f64,
    /// `int |A|^2`.
    pub a2: f64,
    /// `1/2 int |H|^2`.
    pub w_h: f64,
}

pub fn ball_sums(cache: &GeometryCache, nodes: &[usize]) -> BallSums {
    let w = cache.surface().weights();
    let (mut area, mut a2, mut h2) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    for &k in nodes {
        let nd = cache.node(k);
        let da = w[k] * nd.area_el;
        area.add(da);
        a2.add(da * nd.normsq_a);
        h2.add(da * nd.normsq_h);
    }
    BallSums {
        area: area.value(),
        a2: a2.value(),
        w_h: 0.5 * h2.value(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationProbe {
    pub radius: f64,
    pub chi: f64,
    pub argmax_center: Vec<f64>,
    /// Node whose image is the maximizing centre, if the centre is a node.
    pub argmax_node: Option<usize>,
    /// `E(p, radius)` per centre.
    #[serde(skip)]
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub centers: Vec<Vector>,
}

/// `chi(rho) = max_p int_{f^{-1}(closed B_rho(p))} |A|^2 dmu` over the centre set.
pub fn concentration(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    rho: f64,
    centers: &CenterSet,
) -> ConcentrationProbe {
    let cs = centers.resolve(cache);
    let pts: Vec<Vector> = cs.iter().map(|c| c.0).collect();
    let index = BallIndex::for_radius(cache, ambient, rho, &pts);
    let energies: Vec<f64> = pts
        .par_iter()
        .map(|p| ball_sums(cache, &index.query(p, rho)).a2)
        .collect();
    let mut best = 0usize;
    for (i, e) in energies.iter().enumerate() {
        if *e > energies[best] {
            best = i;
        }
    }
    let n = cache.dim();
    let (chi, center, node) = match cs.get(best) {
        Some(c) => (energies[best], c.0[..n].to_vec(), c.1),
        None => (0.0, vec![0.0; n], None),
    };
    ConcentrationProbe {
        radius: rho,
        chi,
        argmax_center: center,
        argmax_node: node,
        energies,
        centers: pts,
    }
}

/// Greedy cover of the nodes in `B_rho(center)` by `rho / 2` balls centred at
/// node images. Returns the number of balls.
pub fn greedy_cover_count(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    center: &Vector,
    rho: f64,
) -> usize {
    let index = BallIndex::for_radius(cache, ambient, rho, &[*center]);
    let inside = index.query(center, rho);
    let mut covered: HashMap<usize, ()> = HashMap::new();
    let mut count = 0;
    for &k in &inside {
        if covered.contains_key(&k) {
            continue;
        }
        count += 1;
        for j in index.query(&cache.node(k).f, 0.5 * rho) {
            covered.insert(j, ());
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum LifespanBound {
    Finite(f64),
    Unbounded,
}

/// `C rho^4 log(C eps0^2 / (chi0 + rho^4 |DR|^2 (area0 + rho^2 W0)))`.
pub fn lifespan_bound(
    chi0: f64,
    rho: f64,
    sup_dr: f64,
    area0: f64,
    w0: f64,
    c: f64,
    eps0sq: f64,
) -> Result<LifespanBound, AnalysisError> {
    let inputs = [chi0, rho, sup_dr, area0, w0, c, eps0sq];
    if inputs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(AnalysisError::BadInput(
            "lifespan inputs must be finite and non-negative".into(),
        ));
    }
    let rho4 = rho.powi(4);
    let denom = chi0 + rho4 * sup_dr * sup_dr * (area0 + rho * rho * w0);
    if denom == 0.0 {
        return Ok(LifespanBound::Unbounded);
    }
    let log_arg = c * eps0sq / denom;
    if log_arg <= 1.0 {
        return Err(AnalysisError::VacuousBound { log_arg });
    }
    Ok(LifespanBound::Finite(c * rho4 * log_arg.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessReport {
    /// `rho * Lambda`.
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

/// Smallness precondition of the lifespan estimate, `rho * Lambda <= c(n)`.
pub fn lifespan_precondition(bounds: &BoundedGeometry, rho: f64, c_n: f64) -> SmallnessReport {
    let value = rho * bounds.lambda_lifespan();
    SmallnessReport {
        value,
        threshold: c_n,
        satisfied: value <= c_n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
    /// `|Sigma_sigma| / sigma^2`.
    pub lhs: f64,
    /// `|Sigma_rho| / rho^2`.
    pub rhs_area: f64,
    /// `W_H` of `Sigma_rho`.
    pub rhs_energy: f64,
    pub empirical_c: f64,
    pub lambda: f64,
    /// `rho * Lambda` is within the smallness constant.
    pub smallness_ok: bool,
}

pub fn monotonicity_check(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    p: &Vector,
    sigma: f64,
    rho: f64,
    smallness: f64,
) -> Result<MonotonicityReport, AnalysisError> {
    if !(sigma > 0.0 && sigma <= rho && rho.is_finite()) {
        return Err(AnalysisError::BadRadii { sigma, rho });
    }
    let index = BallIndex::for_radius(cache, ambient, rho, &[*p]);
    let small = ball_sums(cache, &index.query(p, sigma));
    let big = ball_sums(cache, &index.query(p, rho));
    let lhs = small.area / (sigma * sigma);
    let rhs_area = big.area / (rho * rho);
    let denom = rhs_area + big.w_h;
    let lambda = ambient.bounds().lambda_monotonicity();
    Ok(MonotonicityReport {
        center: p[..cache.dim()].to_vec(),
        sigma,
        rho,
        lhs,
        rhs_area,
        rhs_energy: big.w_h,
        empirical_c: ratio(lhs, denom),
        lambda,
        smallness_ok: rho * lambda <= smallness,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassDensityReport {
    pub worst_ratio: f64,
    pub worst_radius: f64,
    pub worst_center: Vec<f64>,
    /// `|Sigma_R| / R^2` at the worst pair.
    pub lhs: f64,
    /// `c M_f (|R| + |DR|^{2/3} + inj^{-2}) + c W0`.
    pub rhs: f64,
    pub c: f64,
    pub m_f: f64,
}

/// Worst ratio of `|Sigma_R| / R^2` to the mass-density bound over radii and centres.
pub fn mass_density_check(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    radii: &[f64],
    centers: &CenterSet,
    m_f: f64,
    w0: f64,
    c: f64,
) -> Result<MassDensityReport, AnalysisError> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(AnalysisError::BadInput("radii must be positive".into()));
    }
    let b = ambient.bounds();
    let inv_inj2 = if b.inj_radius.is_finite() {
        b.inj_radius.powi(-2)
    } else {
        0.0
    };
    let rhs = c * m_f * (b.sup_r + b.sup_dr.powf(2.0 / 3.0) + inv_inj2) + c * w0;
    let cs = centers.resolve(cache);
    let pts: Vec<Vector> = cs.iter().map(|c| c.0).collect();
    let mut report = MassDensityReport {
        worst_ratio: 0.0,
        worst_radius: radii[0],
        worst_center: vec![0.0; cache.dim()],
        lhs: 0.0,
        rhs,
        c,
        m_f,
    };
    for &r in radii {
        let index = BallIndex::for_radius(cache, ambient, r, &pts);
        let lhs: Vec<f64> = pts
            .par_iter()
            .map(|p| ball_sums(cache, &index.query(p, r)).area / (r * r))
            .collect();
        for (i, l) in lhs.iter().enumerate() {
            let q = ratio(*l, rhs);
            if q > report.worst_ratio {
                report.worst_ratio = q;
                report.worst_radius = r;
                report.worst_center = pts[i][..cache.dim()].to_vec();
                report.lhs = *l;
            }
        }
    }
    Ok(report)
}

/// Area bound `(W(f0) - 4 pi chi) / (2 kappa^2)` for ambients with sectional
/// curvature at most `-kappa^2`.
pub fn negative_curvature_area_bound(w0: f64, euler_char: i32, kappa: f64) -> f64 {
    (w0 - 4.0 * std::f64::consts::PI * euler_char as f64) / (2.0 * kappa * kappa)
}

fn check_len(cache: &GeometryCache, u: &[f64]) -> Result<(), AnalysisError> {
    if u.len() != cache.len() {
        return Err(AnalysisError::SizeMismatch {
            expected: cache.len(),
            got: u.len(),
        });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::BadInput(
            "scalar field has non-finite values".into(),
        ));
    }
    Ok(())
}

/// `|grad u|` with respect to the induced metric.
fn grad_norms(cache: &GeometryCache, u: &[f64]) -> Vec<f64> {
    gradient_of_scalar(cache, u)
        .iter()
        .zip(cache.nodes())
        .map(|(d, nd)| {
            let gi = &nd.gtil_inv;
            (gi[0][0] * d[0] * d[0] + 2.0 * gi[0][1] * d[0] * d[1] + gi[1][1] * d[1] * d[1])
                .max(0.0)
                .sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MichaelSimonReport {
    /// `(int u^2)^{1/2}`.
    pub lhs: f64,
    /// `int |grad u|`.
    pub grad_term: f64,
    /// `int |A| |u|`.
    pub a_term: f64,
    /// `Lambda int |u|`.
    pub lambda_term: f64,
    pub lambda: f64,
    pub empirical_c: f64,
    pub empirical_c_without_lambda: f64,
}

pub fn michael_simon_check(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    u: &[f64],
) -> Result<MichaelSimonReport, AnalysisError> {
    check_len(cache, u)?;
    let gn = grad_norms(cache, u);
    let (mut l2, mut gt, mut at, mut l1) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    for (k, w) in cache.quadrature_nodes() {
        let nd = cache.node(k);
        let da = w * nd.area_el;
        l2.add(u[k] * u[k] * da);
        gt.add(gn[k] * da);
        at.add(nd.normsq_a.sqrt() * u[k].abs() * da);
        l1.add(u[k].abs() * da);
    }
    let lambda = ambient.bounds().lambda_sobolev();
    let lhs = l2.value().max(0.0).sqrt();
    let (grad_term, a_term, lambda_term) = (gt.value(), at.value(), lambda * l1.value());
    Ok(MichaelSimonReport {
        lhs,
        grad_term,
        a_term,
        lambda_term,
        lambda,
        empirical_c: ratio(lhs, grad_term + a_term + lambda_term),
        empirical_c_without_lambda: ratio(lhs, grad_term + a_term),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevReport {
    pub alpha: f64,
    pub sup_u: f64,
    pub norm_m: f64,
    /// `|grad u|_p + |u A|_p + Lambda |u|_p`.
    pub rhs_p: f64,
    pub empirical_c: f64,
}

/// `|u|_inf / (|u|_m^{1-alpha} (|grad u|_p + |u A|_p + Lambda |u|_p)^alpha)`
/// with `1/alpha = (1/2 - 1/p) m + 1`. `p` and `m` may be infinite.
pub fn multiplicative_sobolev_check(
    cache: &GeometryCache,
    ambient: &AmbientManifold,
    u: &[f64],
    p: f64,
    m: f64,
) -> Result<SobolevReport, AnalysisError> {
    check_len(cache, u)?;
    if !(p > 2.0) || !(m >= 1.0) {
        return Err(AnalysisError::BadInput(format!(
            "need 2 < p and 1 <= m (got p = {p}, m = {m})"
        )));
    }
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let alpha = 1.0 / ((0.5 - inv_p) * m + 1.0);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::BadExponents { alpha });
    }
    let gn = grad_norms(cache, u);
    let lambda = ambient.bounds().lambda_sobolev();
    let q: Vec<(f64, f64, f64)> = cache
        .quadrature_nodes()
        .map(|(k, w)| {
            (
                w * cache.node(k).area_el,
                u[k],
                cache.node(k).normsq_a.sqrt(),
            )
        })
        .collect();
    let lp = |vals: &dyn Fn(usize) -> f64, e: f64| -> f64 {
        if e.is_infinite() {
            return (0..q.len()).map(vals).fold(0.0, |a, v| a.max(v.abs()));
        }
        let mut s = KahanSum::default();
        for (i, (da, _, _)) in q.iter().enumerate() {
            s.add(da * vals(i).abs().powf(e));
        }
        s.value().powf(1.0 / e)
    };
    let keys: Vec<usize> = cache.quadrature_nodes().map(|(k, _)| k).collect();
    let sup_u = lp(&|i| q[i].1, f64::INFINITY);
    let norm_m = lp(&|i| q[i].1, m);
    let grad_p = lp(&|i| gn[keys[i]], p);
    let ua_p = lp(&|i| q[i].1 * q[i].2, p);
    let u_p = lp(&|i| q[i].1, p);
    let rhs_p = grad_p + ua_p + lambda * u_p;
    let den = norm_m.powf(1.0 - alpha) * rhs_p.powf(alpha);
    Ok(SobolevReport {
        alpha,
        sup_u,
        norm_m,
        rhs_p,
        empirical_c: ratio(sup_u, den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;
    use crate::scenarios;
    use crate::surface::compute_geometry;
    use crate::willmore::energies;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn sphere(n: usize) -> GeometryCache {
        compute_geometry(&scenarios::round_sphere_r3(1.0, n).unwrap()).unwrap()
    }

    /// Area of `{x in S^2 : |x - p| <= rho}` by Monte Carlo sampling.
    fn cap_area_mc(p: [f64; 3], rho: f64, samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0usize;
        for _ in 0..samples {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            let x = [s * phi.cos(), s * phi.sin(), z];
            let d2: f64 = (0..3).map(|a| (x[a] - p[a]).powi(2)).sum();
            if d2 <= rho * rho {
                hits += 1;
            }
        }
        4.0 * PI * hits as f64 / samples as f64
    }

    #[test]
    fn large_ball_swallows_the_sphere() {
        let c = sphere(48);
        let probe = concentration(&c, c.ambient(), 3.0, &CenterSet::Stride(4));
        let e = energies(&c).unwrap();
        assert!(
            (probe.chi - 8.0 * PI).abs() < 0.01 * 8.0 * PI,
            "{}",
            probe.chi
        );
        assert!(probe.chi <= 2.0 * e.w_a + 1e-12);
    }

    #[test]
    fn cap_energy_matches_sampled_cap_area() {
        let c = sphere(256);
        for p in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
            for rho in [0.2, 0.5] {
                let probe = concentration(
                    &c,
                    c.ambient(),
                    rho,
                    &CenterSet::Points(vec![from_slice(&p)]),
                );
                // |A|^2 = 2 on the unit sphere
                let oracle = 2.0 * cap_area_mc(p, rho, 4_000_000);
                assert!(
                    (probe.chi - oracle).abs() < 0.03 * oracle,
                    "{p:?} rho {rho}: {} vs {oracle}",
                    probe.chi
                );
            }
        }
    }

    #[test]
    fn ball_index_matches_brute_force() {
        let c = compute_geometry(&scenarios::torus_r3(2.0, 1.0, 32, 32).unwrap()).unwrap();
        let amb = c.ambient();
        let centers: Vec<Vector> = (0..5).map(|k| c.node(k * 97).f).collect();
        let index = BallIndex::for_radius(&c, amb, 0.7, &centers);
        let brute = BallIndex::new(&c, amb, f64::INFINITY);
        for p in &centers {
            assert_eq!(index.query(p, 0.7), brute.query(p, 0.7));
        }
    }

    #[test]
    fn covering_bounds_concentration() {
        let c = compute_geometry(&scenarios::torus_r3(2.0, 1.0, 32, 32).unwrap()).unwrap();
        let amb = c.ambient();
        let rho = 1.5;
        let big = concentration(&c, amb, rho, &CenterSet::Stride(4));
        let half = concentration(&c, amb, 0.5 * rho, &CenterSet::AllNodes);
        let center = from_slice(&big.argmax_center);
        let count = greedy_cover_count(&c, amb, &center, rho);
        assert!(count >= 1);
        assert!(big.chi <= count as f64 * half.chi + 1e-12);
    }

    #[test]
    fn flat_lifespan_has_closed_form() {
        let (c, eps, rho) = (1e-2, 1e-2, 0.5);
        let chi0 = c * eps / E;
        match lifespan_bound(chi0, rho, 0.0, 10.0, 5.0, c, eps).unwrap() {
            LifespanBound::Finite(t) => assert!((t - c * rho.powi(4)).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            lifespan_bound(c * eps, rho, 0.0, 1.0, 1.0, c, eps),
            Err(AnalysisError::VacuousBound { .. })
        ));
        assert_eq!(
            lifespan_bound(0.0, rho, 0.0, 1.0, 1.0, c, eps).unwrap(),
            LifespanBound::Unbounded
        );
        assert!(matches!(
            lifespan_bound(-1.0, rho, 0.0, 1.0, 1.0, c, eps),
            Err(AnalysisError::BadInput(_))
        ));
    }

    #[test]
    fn lifespan_precondition_flags_large_radii() {
        let b = AmbientManifold::sphere(3, 1.0).unwrap().bounds().clone();
        assert!(lifespan_precondition(&b, 0.1, 100.0).satisfied);
        assert!(!lifespan_precondition(&b, 1e3, 100.0).satisfied);
        assert!(lifespan_precondition(&BoundedGeometry::flat(2), 1e9, 100.0).satisfied);
    }

    #[test]
    fn sphere_density_ratios_are_balanced() {
        let c = sphere(256);
        let p = from_slice(&[0.0, 0.0, 1.0]);
        let r = monotonicity_check(&c, c.ambient(), &p, 0.1, 0.2, 100.0).unwrap();
        assert!(r.empirical_c <= 1.2, "{r:?}");
        // both density ratios are close to pi
        assert!((r.lhs - PI).abs() < 0.1 * PI && (r.rhs_area - PI).abs() < 0.1 * PI);
        assert!(r.smallness_ok);
        assert!(matches!(
            monotonicity_check(&c, c.ambient(), &p, 0.3, 0.2, 100.0),
            Err(AnalysisError::BadRadii { .. })
        ));
    }

    #[test]
    fn mass_density_on_the_sphere() {
        let c = sphere(48);
        let e = energies(&c).unwrap();
        let cc = 0.016;
        let r = mass_density_check(
            &c,
            c.ambient(),
            &[10.0],
            &CenterSet::Stride(8),
            e.area,
            e.w_h,
            cc,
        )
        .unwrap();
        // flat ambient: rhs = c W0, lhs = 4 pi / 100
        assert!((r.rhs - cc * e.w_h).abs() < 1e-12);
        let expect = 1.0 / (200.0 * cc);
        assert!((r.worst_ratio - expect).abs() < 0.01 * expect, "{r:?}");
        assert!(r.worst_ratio <= 1.0);
    }

    #[test]
    fn negative_curvature_area_bound_formula() {
        assert!((negative_curvature_area_bound(10.0 * PI, 2, 1.0) - PI).abs() < 1e-12);
        assert!((negative_curvature_area_bound(10.0 * PI, 2, 2.0) - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn michael_simon_zero_function() {
        let c = sphere(24);
        let r = michael_simon_check(&c, c.ambient(), &vec![0.0; c.len()]).unwrap();
        assert_eq!((r.lhs, r.empirical_c), (0.0, 0.0));
        assert!(matches!(
            michael_simon_check(&c, c.ambient(), &[1.0]),
            Err(AnalysisError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn totally_geodesic_sphere_needs_the_lambda_term() {
        let f = scenarios::geodesic_sphere_s3(1.0, 48).unwrap();
        let c = compute_geometry(&f).unwrap();
        let r = michael_simon_check(&c, c.ambient(), &vec![1.0; c.len()]).unwrap();
        assert!(r.lhs > 1.0);
        assert!(r.grad_term < 1e-10 && r.a_term < 5e-2 * r.lhs, "{r:?}");
        assert!(r.empirical_c_without_lambda > 10.0, "{r:?}");
        assert!(r.empirical_c < 1.0, "{r:?}");
    }

    #[test]
    fn sobolev_ratio_is_homogeneous() {
        let c = compute_geometry(&scenarios::torus_r3(2.0, 1.0, 32, 32).unwrap()).unwrap();
        let u: Vec<f64> = c
            .nodes()
            .iter()
            .map(|nd| (-(nd.f[0] - 3.0).powi(2)).exp())
            .collect();
        let a = multiplicative_sobolev_check(&c, c.ambient(), &u, 4.0, 2.0).unwrap();
        let u10: Vec<f64> = u.iter().map(|v| 10.0 * v).collect();
        let b = multiplicative_sobolev_check(&c, c.ambient(), &u10, 4.0, 2.0).unwrap();
        assert!((a.empirical_c - b.empirical_c).abs() < 1e-10 * a.empirical_c);
        assert!((a.alpha - 2.0 / 3.0).abs() < 1e-15);
        let s = sphere(24);
        let one =
            multiplicative_sobolev_check(&s, s.ambient(), &vec![1.0; s.len()], 4.0, 2.0).unwrap();
        let three =
            multiplicative_sobolev_check(&s, s.ambient(), &vec![-3.0; s.len()], 4.0, 2.0).unwrap();
        assert!((one.empirical_c - three.empirical_c).abs() < 1e-10 * one.empirical_c);
        let inf = multiplicative_sobolev_check(&c, c.ambient(), &u, f64::INFINITY, 2.0).unwrap();
        assert!((inf.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sobolev_rejects_degenerate_exponents() {
        let c = sphere(16);
        let u = vec![1.0; c.len()];
        assert!(matches!(
            multiplicative_sobolev_check(&c, c.ambient(), &u, f64::INFINITY, f64::INFINITY),
            Err(AnalysisError::BadExponents { .. })
        ));
        assert!(matches!(
            multiplicative_sobolev_check(&c, c.ambient(), &u, 2.0, 2.0),
            Err(AnalysisError::BadInput(_))
        ));
    }

    #[test]
    fn concentration_is_monotone_in_radius() {
        let c = compute_geometry(&scenarios::torus_r3(2.0, 1.0, 24, 24).unwrap()).unwrap();
        let mut prev = 0.0;
        for k in 1..12 {
            let chi = concentration(&c, c.ambient(), 0.4 * k as f64, &CenterSet::Stride(3)).chi;
            assert!(chi + 1e-12 >= prev);
            prev = chi;
        }
    }
}
