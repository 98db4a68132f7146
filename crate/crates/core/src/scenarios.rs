//! Initial immersions used by tests, benchmarks and the command line.

use std::sync::Arc;

use crate::ambient::{AmbientError, AmbientManifold};
use crate::linalg::{from_slice, Vector};
use crate::surface::{ImmersionField, SurfaceError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("invalid scenario parameter: {0}")]
    Parameter(String),
}

fn euclid(n: usize) -> Result<Arc<AmbientManifold>, ScenarioError> {
    Ok(Arc::new(AmbientManifold::euclidean(n)?))
}

/// Round sphere of the given radius centred at the origin of `R^3`.
pub fn round_sphere_r3(radius: f64, n: usize) -> Result<ImmersionField, ScenarioError> {
    Ok(ImmersionField::from_sphere_fn(n, euclid(3)?, |p| {
        from_slice(&[radius * p[0], radius * p[1], radius * p[2]])
    })?)
}

/// Ellipsoid with semi-axes `(a, b, c)` in `R^3`.
pub fn ellipsoid_r3(axes: [f64; 3], n: usize) -> Result<ImmersionField, ScenarioError> {
    Ok(ImmersionField::from_sphere_fn(n, euclid(3)?, |p| {
        from_slice(&[axes[0] * p[0], axes[1] * p[1], axes[2] * p[2]])
    })?)
}

/// Torus of revolution with tube centre radius `major` and tube radius `minor`.
pub fn torus_r3(
    major: f64,
    minor: f64,
    nu: usize,
    nv: usize,
) -> Result<ImmersionField, ScenarioError> {
    if !(major > minor && minor > 0.0) {
        return Err(ScenarioError::Parameter(format!(
            "torus radii need major > minor > 0 (got {major}, {minor})"
        )));
    }
    Ok(ImmersionField::from_torus_fn(
        nu,
        nv,
        euclid(3)?,
        |u, v| torus_point(major, minor, u, v),
    )?)
}

pub fn torus_point(major: f64, minor: f64, u: f64, v: f64) -> Vector {
    let rho = major + minor * v.cos();
    from_slice(&[rho * u.cos(), rho * u.sin(), minor * v.sin()])
}

/// Torus of revolution with the Willmore-critical ratio `sqrt(2)`.
pub fn clifford_torus_r3(
    minor: f64,
    nu: usize,
    nv: usize,
) -> Result<ImmersionField, ScenarioError> {
    torus_r3(std::f64::consts::SQRT_2 * minor, minor, nu, nv)
}

/// Flat product torus `S^1(a) x S^1(b)` in `R^4`.
pub fn product_torus_r4(
    a: f64,
    b: f64,
    nu: usize,
    nv: usize,
) -> Result<ImmersionField, ScenarioError> {
    Ok(ImmersionField::from_torus_fn(
        nu,
        nv,
        euclid(4)?,
        |u, v| from_slice(&[a * u.cos(), a * u.sin(), b * v.cos(), b * v.sin()]),
    )?)
}

/// Totally geodesic great sphere of `S^3` with curvature `kappa^2`: the chart
/// sphere of radius `1 / kappa`, fixed by the inversion isometry.
pub fn geodesic_sphere_s3(kappa: f64, n: usize) -> Result<ImmersionField, ScenarioError> {
    let amb = Arc::new(AmbientManifold::sphere(3, kappa)?);
    Ok(ImmersionField::from_sphere_fn(n, amb, |p| {
        from_slice(&[p[0] / kappa, p[1] / kappa, p[2] / kappa])
    })?)
}

/// Chart ellipsoid with semi-axes `axes` in the sphere chart of `S^3`.
pub fn chart_ellipsoid_s3(
    kappa: f64,
    axes: [f64; 3],
    n: usize,
) -> Result<ImmersionField, ScenarioError> {
    let amb = Arc::new(AmbientManifold::sphere(3, kappa)?);
    Ok(ImmersionField::from_sphere_fn(n, amb, |p| {
        from_slice(&[axes[0] * p[0], axes[1] * p[1], axes[2] * p[2]])
    })?)
}

/// Small sphere in the Poincaré ball of curvature `-kappa^2`: the chart
/// ellipsoid with semi-axes `rho * (1 + aniso, 1, 1 - aniso)` centred at the
/// origin. `aniso = 0` gives a geodesic sphere of radius `2 artanh(kappa rho) / kappa`.
pub fn sphere_h3(
    kappa: f64,
    rho: f64,
    aniso: f64,
    n: usize,
) -> Result<ImmersionField, ScenarioError> {
    let top = rho * (1.0 + aniso.abs());
    if !(kappa * top < 1.0 && rho > 0.0) {
        return Err(ScenarioError::Parameter(format!(
            "chart radius {top} does not fit in the ball of radius {}",
            1.0 / kappa
        )));
    }
    let amb = Arc::new(AmbientManifold::hyperbolic(3, kappa)?);
    Ok(ImmersionField::from_sphere_fn(n, amb, |p| {
        from_slice(&[
            rho * (1.0 + aniso) * p[0],
            rho * p[1],
            rho * (1.0 - aniso) * p[2],
        ])
    })?)
}

/// Member `sqrt(1 - t) S^2` of the shrinking round-sphere family in `R^3`.
pub fn shrinking_sphere(t: f64, n: usize) -> Result<ImmersionField, ScenarioError> {
    if !(t < 1.0) {
        return Err(ScenarioError::Parameter(format!(
            "time {t} is past the extinction time 1"
        )));
    }
    round_sphere_r3((1.0 - t).sqrt(), n)
}
