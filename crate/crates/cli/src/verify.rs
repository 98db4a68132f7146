//! Verifier blocks of the summary report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use willmore_core::analysis::{
    concentration, lifespan_bound, lifespan_precondition, mass_density_check, michael_simon_check,
    monotonicity_check, multiplicative_sobolev_check, negative_curvature_area_bound, AnalysisError,
    CenterSet, LifespanBound, MassDensityReport, MichaelSimonReport, MonotonicityReport,
    SmallnessReport, SobolevReport,
};
use willmore_core::willmore::{gradient_pairing_check, PairingCheck};
use willmore_core::{AmbientKind, DiagnosticsRecord, GeometryCache, Vector};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityBlock {
    pub sigma: f64,
    pub rho: f64,
    pub c_max: f64,
    pub worst: Option<MonotonicityReport>,
    pub smallness_violations: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MichaelSimonBlock {
    pub bumps: usize,
    pub c_max: f64,
    pub worst: Option<MichaelSimonReport>,
    /// `u = 1` over the whole surface.
    pub constant: MichaelSimonReport,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevBlock {
    pub p: f64,
    pub m: f64,
    pub worst: Option<SobolevReport>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassDensityBlock {
    pub radii: Vec<f64>,
    /// Largest area seen along the run.
    pub m_f: f64,
    pub report: Option<MassDensityReport>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaBoundBlock {
    pub kappa: f64,
    pub bound: f64,
    pub max_area: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LifespanBlock {
    pub rho: f64,
    pub chi0: f64,
    pub c: f64,
    pub eps0sq: f64,
    pub bound: Option<LifespanBound>,
    pub vacuous: bool,
    pub log_arg: Option<f64>,
    /// First recorded time with `chi >= eps0sq`.
    pub first_crossing: Option<f64>,
    pub precondition: SmallnessReport,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingBlock {
    pub eps: f64,
    pub tol: f64,
    /// Direction `H`.
    pub check: Option<PairingCheck>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifierBlocks {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotonicity: Option<MonotonicityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub michael_simon: Option<MichaelSimonBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_density: Option<MassDensityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappabound: Option<KappaBoundBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifespan: Option<LifespanBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingBlock>,
}

impl VerifierBlocks {
    pub fn all_pass(&self) -> bool {
        self.monotonicity.as_ref().is_none_or(|b| b.pass)
            && self.michael_simon.as_ref().is_none_or(|b| b.pass)
            && self.sobolev.as_ref().is_none_or(|b| b.pass)
            && self.mass_density.as_ref().is_none_or(|b| b.pass)
            && self.kappabound.as_ref().is_none_or(|b| b.pass)
            && self.lifespan.as_ref().is_none_or(|b| b.pass)
            && self.pairing.as_ref().is_none_or(|b| b.pass)
    }
}

fn sample_centers(cache: &GeometryCache, count: usize, seed: u64) -> Vec<Vector> {
    let nodes: Vec<usize> = cache.quadrature_nodes().map(|(k, _)| k).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| cache.node(nodes[rng.random_range(0..nodes.len())]).f)
        .collect()
}

/// `(1 - (d / w)^2)^3` inside the geodesic ball, zero outside.
fn bump(cache: &GeometryCache, center: &Vector, width: f64) -> Vec<f64> {
    cache
        .nodes()
        .iter()
        .map(|nd| {
            let d = cache
                .ambient()
                .geodesic_distance(center, &nd.f)
                .unwrap_or(f64::INFINITY);
            let s = 1.0 - (d / width).powi(2);
            if s > 0.0 {
                s.powi(3)
            } else {
                0.0
            }
        })
        .collect()
}

fn bump_family(cfg: &RunConfig, cache: &GeometryCache) -> Vec<Vec<f64>> {
    let v = &cfg.verify;
    let centers = sample_centers(cache, v.bumps, cfg.seed.wrapping_add(1));
    let steps = (v.bumps.max(2) - 1) as f64;
    centers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let w = v.bump_width_min * (v.bump_width_max / v.bump_width_min).powf(i as f64 / steps);
            bump(cache, p, w)
        })
        .filter(|u| u.iter().any(|x| *x > 0.0))
        .collect()
}

fn monotonicity(cfg: &RunConfig, cache: &GeometryCache) -> MonotonicityBlock {
    let v = &cfg.verify;
    let mut worst: Option<MonotonicityReport> = None;
    let mut violations = 0;
    for p in sample_centers(cache, v.centers, cfg.seed) {
        let Ok(r) =
            monotonicity_check(cache, cache.ambient(), &p, v.sigma, v.rho, cfg.analysis.c_n)
        else {
            continue;
        };
        if !r.smallness_ok {
            violations += 1;
        }
        if worst.as_ref().is_none_or(|w| r.empirical_c > w.empirical_c) {
            worst = Some(r);
        }
    }
    let pass = worst
        .as_ref()
        .is_some_and(|w| w.empirical_c <= v.monotonicity_c_max);
    MonotonicityBlock {
        sigma: v.sigma,
        rho: v.rho,
        c_max: v.monotonicity_c_max,
        worst,
        smallness_violations: violations,
        pass,
    }
}

fn michael_simon(cfg: &RunConfig, cache: &GeometryCache, bumps: &[Vec<f64>]) -> MichaelSimonBlock {
    let c_max = cfg.verify.michael_simon_c_max;
    let mut worst: Option<MichaelSimonReport> = None;
    for u in bumps {
        if let Ok(r) = michael_simon_check(cache, cache.ambient(), u) {
            if worst.is_none_or(|w| r.empirical_c > w.empirical_c) {
                worst = Some(r);
            }
        }
    }
    let ones = vec![1.0; cache.len()];
    let constant =
        michael_simon_check(cache, cache.ambient(), &ones).expect("constant field is valid");
    let pass = worst.is_none_or(|w| w.empirical_c <= c_max) && constant.empirical_c <= c_max;
    MichaelSimonBlock {
        bumps: bumps.len(),
        c_max,
        worst,
        constant,
        pass,
    }
}

fn sobolev(cfg: &RunConfig, cache: &GeometryCache, bumps: &[Vec<f64>]) -> SobolevBlock {
    let (p, m) = (cfg.verify.sobolev_p, cfg.verify.sobolev_m);
    let mut worst: Option<SobolevReport> = None;
    let mut error = None;
    for u in bumps {
        match multiplicative_sobolev_check(cache, cache.ambient(), u, p, m) {
            Ok(r) => {
                if worst.is_none_or(|w| r.empirical_c > w.empirical_c) {
                    worst = Some(r);
                }
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    // no universal threshold is known; a finite constant passes
    let pass = error.is_none() && worst.is_none_or(|w| w.empirical_c.is_finite());
    SobolevBlock {
        p,
        m,
        worst,
        error,
        pass,
    }
}

fn mass_density(
    cfg: &RunConfig,
    cache: &GeometryCache,
    history: &[DiagnosticsRecord],
    w0: f64,
) -> MassDensityBlock {
    let radii = cfg.verify.mass_radii.clone();
    let m_f = history.iter().map(|r| r.area).fold(0.0, f64::max);
    let res = mass_density_check(
        cache,
        cache.ambient(),
        &radii,
        &CenterSet::Stride(cfg.analysis.chi_stride),
        m_f,
        w0,
        cfg.analysis.c_mass,
    );
    match res {
        Ok(r) => {
            let pass = r.worst_ratio <= 1.0;
            MassDensityBlock {
                radii,
                m_f,
                report: Some(r),
                error: None,
                pass,
            }
        }
        Err(e) => MassDensityBlock {
            radii,
            m_f,
            report: None,
            error: Some(e.to_string()),
            pass: false,
        },
    }
}

fn kappabound(
    cache: &GeometryCache,
    history: &[DiagnosticsRecord],
    w0: f64,
) -> Option<KappaBoundBlock> {
    let AmbientKind::HyperbolicConformal { kappa } = cache.ambient().kind() else {
        return None;
    };
    // sectional curvature -kappa^2 / scale
    let k = kappa / cache.ambient().scale().sqrt();
    let chi = cache.surface().euler_char();
    let bound = negative_curvature_area_bound(w0, chi, k);
    let max_area = history.iter().map(|r| r.area).fold(0.0, f64::max);
    Some(KappaBoundBlock {
        kappa: k,
        bound,
        max_area,
        pass: max_area <= bound,
    })
}

fn lifespan(
    cfg: &RunConfig,
    cache: &GeometryCache,
    history: &[DiagnosticsRecord],
) -> LifespanBlock {
    let a = &cfg.analysis;
    let rho = a.chi_radius;
    let first = history.first();
    let chi0 = match first {
        Some(r) => r.chi_value,
        None => {
            concentration(
                cache,
                cache.ambient(),
                rho,
                &CenterSet::Stride(a.chi_stride),
            )
            .chi
        }
    };
    let (area0, w0) = first.map(|r| (r.area, r.w_h)).unwrap_or((0.0, 0.0));
    let bounds = cache.ambient().bounds();
    let precondition = lifespan_precondition(bounds, rho, a.c_n);
    let first_crossing = history
        .iter()
        .find(|r| r.chi_value >= a.eps0sq)
        .map(|r| r.t);
    let res = lifespan_bound(chi0, rho, bounds.sup_dr, area0, w0, a.c_lifespan, a.eps0sq);
    let (bound, vacuous, log_arg, pass) = match res {
        Ok(b) => {
            let pass = match (b, first_crossing) {
                (LifespanBound::Finite(t), Some(tc)) => t <= tc,
                (LifespanBound::Unbounded, Some(_)) => false,
                _ => true,
            };
            (Some(b), false, None, pass)
        }
        // a vacuous bound is flagged, not failed
        Err(AnalysisError::VacuousBound { log_arg }) => (None, true, Some(log_arg), true),
        Err(_) => (None, false, None, false),
    };
    LifespanBlock {
        rho,
        chi0,
        c: a.c_lifespan,
        eps0sq: a.eps0sq,
        bound,
        vacuous,
        log_arg,
        first_crossing,
        precondition,
        pass,
    }
}

fn pairing(cfg: &RunConfig, cache: &GeometryCache) -> PairingBlock {
    let (eps, tol) = (cfg.verify.pairing_eps, cfg.verify.pairing_tol);
    let h: Vec<Vector> = cache.nodes().iter().map(|nd| nd.h).collect();
    match gradient_pairing_check(cache.field(), &h, eps) {
        Ok(c) => PairingBlock {
            eps,
            tol,
            pass: c.rel_err < tol,
            check: Some(c),
            error: None,
        },
        Err(e) => PairingBlock {
            eps,
            tol,
            check: None,
            error: Some(e.to_string()),
            pass: false,
        },
    }
}

/// Verifiers on `cache`, using `history` (at least the initial record) for
/// run-level quantities.
pub fn run_verifiers(
    cfg: &RunConfig,
    cache: &GeometryCache,
    history: &[DiagnosticsRecord],
    w0: f64,
) -> VerifierBlocks {
    let v = &cfg.verify;
    let bumps = if v.michael_simon || v.sobolev {
        bump_family(cfg, cache)
    } else {
        Vec::new()
    };
    VerifierBlocks {
        monotonicity: v.monotonicity.then(|| monotonicity(cfg, cache)),
        michael_simon: v.michael_simon.then(|| michael_simon(cfg, cache, &bumps)),
        sobolev: v.sobolev.then(|| sobolev(cfg, cache, &bumps)),
        mass_density: v
            .mass_density
            .then(|| mass_density(cfg, cache, history, w0)),
        kappabound: if v.kappabound {
            kappabound(cache, history, w0)
        } else {
            None
        },
        lifespan: v.lifespan.then(|| lifespan(cfg, cache, history)),
        pairing: v.pairing.then(|| pairing(cfg, cache)),
    }
}
