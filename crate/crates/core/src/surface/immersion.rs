use std::sync::Arc;

use crate::ambient::AmbientManifold;
use crate::linalg::{self, Vector};

use super::chart::{ChartedSurface, GridError};
use super::SurfaceError;

/// Ambient chart coordinates of the immersion at every grid node.
#[derive(Debug, Clone)]
pub struct ImmersionField {
    surface: Arc<ChartedSurface>,
    ambient: Arc<AmbientManifold>,
    points: Vec<Vector>,
}

impl ImmersionField {
    pub fn new(
        surface: Arc<ChartedSurface>,
        ambient: Arc<AmbientManifold>,
        points: Vec<Vector>,
    ) -> Result<Self, SurfaceError> {
        if points.len() != surface.len() {
            return Err(SurfaceError::SizeMismatch {
                expected: surface.len(),
                got: points.len(),
            });
        }
        let n = ambient.dim();
        for (node, p) in points.iter().enumerate() {
            if !linalg::is_finite(p) {
                return Err(SurfaceError::NonFiniteValue { node });
            }
            if p[n..].iter().any(|v| *v != 0.0) {
                return Err(SurfaceError::DimensionMismatch { node });
            }
        }
        Ok(ImmersionField {
            surface,
            ambient,
            points,
        })
    }

    /// Torus immersion from a map of the parameters `(u, v)` in `[0, 2pi)^2`.
    pub fn from_torus_fn<F>(
        nu: usize,
        nv: usize,
        ambient: Arc<AmbientManifold>,
        f: F,
    ) -> Result<Self, SurfaceError>
    where
        F: Fn(f64, f64) -> Vector,
    {
        let surface = Arc::new(ChartedSurface::torus(nu, nv).map_err(grid_error)?);
        let points = (0..surface.len())
            .map(|k| {
                let (u, v) = surface.coord(k);
                f(u, v)
            })
            .collect();
        Self::new(surface, ambient, points)
    }

    /// Sphere immersion from a map of the unit sphere `S^2 in R^3`.
    pub fn from_sphere_fn<F>(
        n: usize,
        ambient: Arc<AmbientManifold>,
        f: F,
    ) -> Result<Self, SurfaceError>
    where
        F: Fn([f64; 3]) -> Vector,
    {
        let surface = Arc::new(ChartedSurface::sphere(n).map_err(grid_error)?);
        Self::on_sphere(surface, ambient, f)
    }

    /// Sphere immersion on a given two-chart surface.
    pub fn on_sphere<F>(
        surface: Arc<ChartedSurface>,
        ambient: Arc<AmbientManifold>,
        f: F,
    ) -> Result<Self, SurfaceError>
    where
        F: Fn([f64; 3]) -> Vector,
    {
        let points = (0..surface.len())
            .map(|k| match surface.sphere_point(k) {
                Some(p) => Ok(f(p)),
                None => Err(SurfaceError::TopologyMismatch),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(surface, ambient, points)
    }

    #[inline]
    pub fn surface(&self) -> &Arc<ChartedSurface> {
        &self.surface
    }

    #[inline]
    pub fn ambient(&self) -> &Arc<AmbientManifold> {
        &self.ambient
    }

    #[inline]
    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Same nodes and points viewed in another ambient (e.g. a rescaled metric).
    pub fn with_ambient(&self, ambient: Arc<AmbientManifold>) -> Self {
        ImmersionField {
            surface: self.surface.clone(),
            ambient,
            points: self.points.clone(),
        }
    }

    /// Same grid and ambient with new node positions.
    pub fn with_points(&self, points: Vec<Vector>) -> Result<Self, SurfaceError> {
        Self::new(self.surface.clone(), self.ambient.clone(), points)
    }

    /// Nodewise displacement `f + s * delta` without chart resync.
    pub fn displaced(&self, delta: &[Vector], s: f64) -> Result<Self, SurfaceError> {
        let points = self
            .points
            .iter()
            .zip(delta)
            .map(|(p, d)| {
                let mut q = *p;
                linalg::axpy(&mut q, s, d);
                q
            })
            .collect();
        self.with_points(points)
    }

    /// Overwrite sphere ghost nodes from the other chart.
    pub fn resync(&mut self) {
        self.surface.resync(&mut self.points);
    }

    /// Largest deviation between ghost values and their interpolation from the
    /// other chart.
    pub fn chart_mismatch(&self) -> f64 {
        let mut copy = self.points.clone();
        self.surface.resync(&mut copy);
        copy.iter()
            .zip(&self.points)
            .map(|(a, b)| linalg::max_abs(&linalg::sub(a, b)))
            .fold(0.0, f64::max)
    }

    /// Diameter of the chart bounding box of the node images.
    pub fn bounding_diameter(&self) -> f64 {
        let n = self.dim();
        let mut lo = [f64::INFINITY; linalg::MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; linalg::MAX_DIM];
        for p in &self.points {
            for a in 0..n {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (0..n).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
    }
}

fn grid_error(e: GridError) -> SurfaceError {
    SurfaceError::Grid(e)
}
