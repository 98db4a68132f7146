//! Closed surfaces on structured charts and their extrinsic geometry.

mod chart;
mod geometry;
mod immersion;
pub mod obj;
mod operators;

pub use chart::{
    north_inverse, partition_weight, south_inverse, ChartGrid, ChartKind, ChartedSurface,
    GhostSource, GridError, GridValue, Topology, MIN_NODES, POU_RADIUS, SUPPORT_DEPTH,
};
pub use geometry::{
    compute_geometry, sym, GeometryCache, NodeGeom, LEVEL_CURVATURE, LEVEL_FORMS, LEVEL_GAMMA,
};
pub use immersion::ImmersionField;
pub(crate) use operators::normal_laplacian_unchecked;
pub use operators::{
    gradient_of_scalar, integrate_scalar, normal_laplacian, simons_residual, SimonsResidual,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("degenerate induced metric at node {node}: det = {det:e}")]
    DegenerateMetric { node: usize, det: f64 },
    #[error("non-finite value at node {node}")]
    NonFiniteValue { node: usize },
    #[error("field is not normal at node {node}: tangential part {tangential:e}")]
    NotNormal { node: usize, tangential: f64 },
    #[error("expected {expected} nodes, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("node {node} has coordinates beyond the ambient dimension")]
    DimensionMismatch { node: usize },
    #[error("operation needs a sphere surface")]
    TopologyMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
}
