//! Willmore gradient flow of closed surfaces in Riemannian ambients.
//!
//! Surfaces live on structured parameter charts (a periodic torus grid or two
//! stereographic sphere charts) and are immersed into an ambient manifold
//! given in one global chart. The crate computes the extrinsic geometry, the
//! Willmore energies and gradient, integrates the flow `d_t f = -W(f)`, and
//! evaluates the concentration, monotonicity and Sobolev-type verifiers and
//! the blow-up rescaling used to study singularities.

// Index loops mirror tensor notation; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod analysis;
pub mod blowup;
pub mod flow;
pub mod linalg;
pub mod profile;
pub mod scenarios;
pub mod surface;
pub mod willmore;

pub use ambient::{AmbientError, AmbientKind, AmbientManifold, BoundedGeometry};
pub use flow::{DiagnosticsRecord, FlowConfig, FlowState, TerminalStatus};
pub use linalg::{Vector, MAX_DIM};
pub use surface::{compute_geometry, ChartedSurface, GeometryCache, ImmersionField, Topology};
pub use willmore::{energies, gradient, EnergyReport};
