//! Initial immersions from a run configuration.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore_core::linalg::{self, Vector, ZERO};
use willmore_core::surface::obj::read_obj;
use willmore_core::willmore::project_normal;
use willmore_core::{compute_geometry, scenarios, AmbientManifold, ImmersionField};

use crate::config::{AmbientConfig, PerturbationConfig, RunConfig, ScenarioConfig};

pub fn ambient(cfg: &AmbientConfig) -> Result<AmbientManifold> {
    Ok(match *cfg {
        AmbientConfig::Euclidean { dim } => AmbientManifold::euclidean(dim)?,
        AmbientConfig::Sphere { dim, kappa } => AmbientManifold::sphere(dim, kappa)?,
        AmbientConfig::Hyperbolic { dim, kappa } => AmbientManifold::hyperbolic(dim, kappa)?,
    })
}

/// The unperturbed initial immersion.
pub fn base_field(cfg: &RunConfig) -> Result<ImmersionField> {
    let n = cfg.grid.n;
    let (nu, nv) = (cfg.grid.nu.unwrap_or(n), cfg.grid.nv.unwrap_or(n));
    let f = match &cfg.scenario {
        ScenarioConfig::SphereR3 { radius } => scenarios::round_sphere_r3(*radius, n)?,
        ScenarioConfig::EllipsoidR3 { axes } => scenarios::ellipsoid_r3(*axes, n)?,
        ScenarioConfig::TorusR3 { major, minor } => scenarios::torus_r3(*major, *minor, nu, nv)?,
        ScenarioConfig::CliffordTorusR3 { minor } => scenarios::clifford_torus_r3(*minor, nu, nv)?,
        ScenarioConfig::ProductTorusR4 { a, b } => scenarios::product_torus_r4(*a, *b, nu, nv)?,
        ScenarioConfig::GeodesicSphereS3 { kappa } => scenarios::geodesic_sphere_s3(*kappa, n)?,
        ScenarioConfig::EllipsoidS3 { kappa, axes } => {
            scenarios::chart_ellipsoid_s3(*kappa, *axes, n)?
        }
        ScenarioConfig::SphereH3 { kappa, rho, aniso } => {
            scenarios::sphere_h3(*kappa, *rho, *aniso, n)?
        }
        ScenarioConfig::Custom { file, ambient: amb } => {
            let reader = BufReader::new(
                File::open(file)
                    .with_context(|| format!("cannot open snapshot {}", file.display()))?,
            );
            let snap = read_obj(reader)
                .with_context(|| format!("cannot read snapshot {}", file.display()))?;
            snap.into_field(Arc::new(ambient(amb)?))?
        }
    };
    Ok(f)
}

/// Initial immersion with the configured perturbation applied.
pub fn initial_field(cfg: &RunConfig) -> Result<ImmersionField> {
    let f = base_field(cfg)?;
    perturb(&f, &cfg.perturbation, cfg.seed)
}

/// Displace along the normal part of a sum of random plane waves, scaled so
/// the largest chart displacement equals the amplitude.
pub fn perturb(f: &ImmersionField, p: &PerturbationConfig, seed: u64) -> Result<ImmersionField> {
    if p.amplitude == 0.0 || p.modes == 0 {
        return Ok(f.clone());
    }
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(Vector, Vector, f64)> = (0..p.modes)
        .map(|_| {
            let mut k = ZERO;
            let mut c = ZERO;
            for a in 0..n {
                k[a] = rng.random_range(-p.max_frequency..p.max_frequency);
                c[a] = rng.random_range(-1.0..1.0);
            }
            (k, c, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let raw: Vec<Vector> = f
        .points()
        .iter()
        .map(|x| {
            let mut v = ZERO;
            for (k, c, phase) in &waves {
                linalg::axpy(&mut v, (linalg::dot(k, x) + phase).sin(), c);
            }
            v
        })
        .collect();
    let cache = compute_geometry(f)?;
    let normal = project_normal(&cache, &raw);
    let peak = normal.iter().map(linalg::norm).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(f.clone());
    }
    let mut out = f.displaced(&normal, p.amplitude / peak)?;
    out.resync();
    Ok(out)
}
