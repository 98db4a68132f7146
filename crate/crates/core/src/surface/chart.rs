//! Structured parameter grids for closed surfaces.
//!
//! A torus is a single doubly periodic grid over `[0, 2pi)^2`. A sphere is
//! covered by two stereographic charts on squares `[-L, L]^2`: the north chart
//! `z` and the south chart `w = 1/z` (complex inversion), both orientation
//! preserving. Each chart is authoritative on a closed disk of radius slightly
//! above 1, sized so that interpolation donors are authoritative; nodes
//! outside it are ghosts whose values are interpolated from the other chart.
//! Integrals use a smooth partition of unity supported in `|z| <= 1.4`.

use serde::{Deserialize, Serialize};

use crate::profile::smooth_step;

/// Minimum nodes per direction.
pub const MIN_NODES: usize = 16;

/// Outer radius of the partition-of-unity support in a sphere chart.
pub const POU_RADIUS: f64 = 1.4;

/// Nodes per direction in the ghost interpolation stencil.
const INTERP_POINTS: usize = 8;

/// Minimum node depth of the partition-of-unity support.
pub const SUPPORT_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Sphere,
}

impl Topology {
    pub fn euler_char(self) -> i32 {
        match self {
            Topology::Torus => 0,
            Topology::Sphere => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Periodic,
    North,
    South,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartGrid {
    pub kind: ChartKind,
    pub nu: usize,
    pub nv: usize,
    pub hu: f64,
    pub hv: f64,
    /// Parameter of node `(0, 0)`.
    pub origin: (f64, f64),
    /// Index of node `(0, 0)` in the global node list.
    pub offset: usize,
}

impl ChartGrid {
    #[inline]
    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn is_periodic(&self) -> bool {
        self.kind == ChartKind::Periodic
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        self.offset + i * self.nv + j
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.hu,
            self.origin.1 + j as f64 * self.hv,
        )
    }

    /// Node depth: distance in nodes to the nearest chart edge.
    #[inline]
    pub fn depth(&self, i: usize, j: usize) -> u32 {
        if self.is_periodic() {
            u32::MAX
        } else {
            i.min(j).min(self.nu - 1 - i).min(self.nv - 1 - j) as u32
        }
    }
}

/// Precomputed tensor Lagrange interpolation for one ghost node.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostSource {
    pub target: usize,
    /// Global index of the first stencil node in the source chart.
    pub base: usize,
    /// Row stride of the source chart.
    pub stride: usize,
    pub wu: [f64; INTERP_POINTS],
    pub wv: [f64; INTERP_POINTS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartedSurface {
    topology: Topology,
    charts: Vec<ChartGrid>,
    /// Chart index, row, column of every node.
    locate: Vec<(u8, u32, u32)>,
    weights: Vec<f64>,
    depth: Vec<u32>,
    authoritative: Vec<bool>,
    ghosts: Vec<GhostSource>,
    /// Half width `L` of the sphere chart squares (0 for tori).
    extent: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid too coarse: {0} nodes per direction (minimum {MIN_NODES})")]
    TooCoarse(usize),
    #[error("sphere chart extent {extent} leaves the partition support within {depth} nodes of the edge")]
    ExtentTooSmall { extent: f64, depth: u32 },
}

impl ChartedSurface {
    pub fn torus(nu: usize, nv: usize) -> Result<Self, GridError> {
        if nu < MIN_NODES || nv < MIN_NODES {
            return Err(GridError::TooCoarse(nu.min(nv)));
        }
        let tau = std::f64::consts::TAU;
        let chart = ChartGrid {
            kind: ChartKind::Periodic,
            nu,
            nv,
            hu: tau / nu as f64,
            hv: tau / nv as f64,
            origin: (0.0, 0.0),
            offset: 0,
        };
        let total = chart.len();
        let mut locate = Vec::with_capacity(total);
        for i in 0..nu {
            for j in 0..nv {
                locate.push((0u8, i as u32, j as u32));
            }
        }
        Ok(ChartedSurface {
            topology: Topology::Torus,
            charts: vec![chart],
            locate,
            weights: vec![1.0; total],
            depth: vec![u32::MAX; total],
            authoritative: vec![true; total],
            ghosts: Vec::new(),
            extent: 0.0,
        })
    }

    /// Default chart half width for `n` nodes per direction: the partition
    /// support stays at least [`SUPPORT_DEPTH`] nodes inside the chart.
    pub fn default_extent(n: usize) -> f64 {
        POU_RADIUS / (1.0 - 9.0 / (n as f64 - 1.0))
    }

    pub fn sphere(n: usize) -> Result<Self, GridError> {
        if n < MIN_NODES {
            return Err(GridError::TooCoarse(n));
        }
        Self::sphere_with_extent(n, Self::default_extent(n))
    }

    pub fn sphere_with_extent(n: usize, extent: f64) -> Result<Self, GridError> {
        if n < MIN_NODES {
            return Err(GridError::TooCoarse(n));
        }
        let h = 2.0 * extent / (n - 1) as f64;
        let edge_depth = ((extent - POU_RADIUS) / h).floor();
        if !(edge_depth >= SUPPORT_DEPTH as f64) {
            return Err(GridError::ExtentTooSmall {
                extent,
                depth: SUPPORT_DEPTH,
            });
        }
        let mk = |kind, offset| ChartGrid {
            kind,
            nu: n,
            nv: n,
            hu: h,
            hv: h,
            origin: (-extent, -extent),
            offset,
        };
        let charts = vec![mk(ChartKind::North, 0), mk(ChartKind::South, n * n)];
        let auth = authoritative_radius(h);
        let total = 2 * n * n;
        let mut locate = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut depth = Vec::with_capacity(total);
        let mut authoritative = Vec::with_capacity(total);
        for (c, chart) in charts.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = chart.coord(i, j);
                    let r = x.hypot(y);
                    locate.push((c as u8, i as u32, j as u32));
                    weights.push(partition_weight(r));
                    depth.push(chart.depth(i, j));
                    authoritative.push(r <= auth);
                }
            }
        }
        let mut ghosts = Vec::new();
        for (c, chart) in charts.iter().enumerate() {
            let src = &charts[1 - c];
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = chart.coord(i, j);
                    let r2 = x * x + y * y;
                    if r2 <= auth * auth {
                        continue;
                    }
                    // w = 1/z
                    let (wx, wy) = (x / r2, -y / r2);
                    let (bu, wu) = lagrange_stencil(wx, src.origin.0, src.hu, src.nu);
                    let (bv, wv) = lagrange_stencil(wy, src.origin.1, src.hv, src.nv);
                    ghosts.push(GhostSource {
                        target: chart.index(i, j),
                        base: src.index(bu, bv),
                        stride: src.nv,
                        wu,
                        wv,
                    });
                }
            }
        }
        Ok(ChartedSurface {
            topology: Topology::Sphere,
            charts,
            locate,
            weights,
            depth,
            authoritative,
            ghosts,
            extent,
        })
    }

    #[inline]
    pub fn topology(&self) -> Topology {
        self.topology
    }

    #[inline]
    pub fn euler_char(&self) -> i32 {
        self.topology.euler_char()
    }

    pub fn charts(&self) -> &[ChartGrid] {
        &self.charts
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.locate.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.locate.is_empty()
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Partition-of-unity quadrature weight per node (1 on tori).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, node: usize) -> f64 {
        self.weights[node]
    }

    #[inline]
    pub fn depth(&self, node: usize) -> u32 {
        self.depth[node]
    }

    #[inline]
    pub fn is_authoritative(&self, node: usize) -> bool {
        self.authoritative[node]
    }

    pub fn ghosts(&self) -> &[GhostSource] {
        &self.ghosts
    }

    /// Chart, row and column of a node.
    #[inline]
    pub fn locate(&self, node: usize) -> (usize, usize, usize) {
        let (c, i, j) = self.locate[node];
        (c as usize, i as usize, j as usize)
    }

    /// Parameter coordinates of a node.
    pub fn coord(&self, node: usize) -> (f64, f64) {
        let (c, i, j) = self.locate(node);
        self.charts[c].coord(i, j)
    }

    #[inline]
    pub fn chart_of(&self, node: usize) -> &ChartGrid {
        &self.charts[self.locate[node].0 as usize]
    }

    /// Grid spacing `(h_u, h_v)` of the chart containing `node`.
    #[inline]
    pub fn spacing(&self, node: usize) -> (f64, f64) {
        let c = self.chart_of(node);
        (c.hu, c.hv)
    }

    /// Neighbor `(i + di, j + dj)` of a node; wraps on periodic charts and
    /// returns `None` past a chart edge.
    #[inline]
    pub fn shift(&self, node: usize, di: i32, dj: i32) -> Option<usize> {
        let (c, i, j) = self.locate[node];
        let chart = &self.charts[c as usize];
        let (nu, nv) = (chart.nu as i64, chart.nv as i64);
        let mut ii = i as i64 + di as i64;
        let mut jj = j as i64 + dj as i64;
        if chart.is_periodic() {
            ii = ii.rem_euclid(nu);
            jj = jj.rem_euclid(nv);
        } else if ii < 0 || jj < 0 || ii >= nu || jj >= nv {
            return None;
        }
        Some(chart.index(ii as usize, jj as usize))
    }

    /// Unit-sphere point of a sphere-chart node.
    pub fn sphere_point(&self, node: usize) -> Option<[f64; 3]> {
        let (c, _, _) = self.locate(node);
        let (x, y) = self.coord(node);
        match self.charts[c].kind {
            ChartKind::North => Some(north_inverse(x, y)),
            ChartKind::South => Some(south_inverse(x, y)),
            ChartKind::Periodic => None,
        }
    }

    /// Overwrite ghost values by interpolation from the other chart. Donor
    /// stencils only read authoritative nodes, so one pass is exact.
    pub fn resync<T: GridValue>(&self, values: &mut [T]) {
        for g in &self.ghosts {
            let mut acc = T::default();
            for (a, wa) in g.wu.iter().enumerate() {
                let mut row = T::default();
                for (b, wb) in g.wv.iter().enumerate() {
                    row.add_scaled(&values[g.base + a * g.stride + b], *wb);
                }
                acc.add_scaled(&row, *wa);
            }
            values[g.target] = acc;
        }
    }
}

/// Smallest chart radius `R >= 1` such that interpolation stencils for ghosts
/// beyond `R` only touch nodes within `R` of the other chart:
/// `1/R + 4 sqrt(2) h <= R`.
fn authoritative_radius(h: f64) -> f64 {
    let c = (INTERP_POINTS / 2) as f64 * std::f64::consts::SQRT_2 * h;
    (0.5 * (c + (c * c + 4.0).sqrt())).max(1.0) * (1.0 + 1e-12)
}

/// Values that can be interpolated across charts.
pub trait GridValue: Copy + Default {
    fn add_scaled(&mut self, other: &Self, s: f64);
}

impl GridValue for f64 {
    #[inline]
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += s * other;
    }
}

impl GridValue for crate::linalg::Vector {
    #[inline]
    fn add_scaled(&mut self, other: &Self, s: f64) {
        crate::linalg::axpy(self, s, other);
    }
}

/// Partition weight of a sphere chart node at chart radius `r`.
pub fn partition_weight(r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let a = POU_RADIUS.ln();
    smooth_step((a - r.ln()) / (2.0 * a))
}

pub fn north_inverse(x: f64, y: f64) -> [f64; 3] {
    let r2 = x * x + y * y;
    let d = 1.0 + r2;
    [2.0 * x / d, 2.0 * y / d, (1.0 - r2) / d]
}

pub fn south_inverse(x: f64, y: f64) -> [f64; 3] {
    let r2 = x * x + y * y;
    let d = 1.0 + r2;
    [2.0 * x / d, -2.0 * y / d, -(1.0 - r2) / d]
}

/// First stencil index and Lagrange weights for evaluating at `s` on the
/// uniform grid `origin + k h`, `k < n`.
fn lagrange_stencil(s: f64, origin: f64, h: f64, n: usize) -> (usize, [f64; INTERP_POINTS]) {
    let pos = (s - origin) / h;
    let half = INTERP_POINTS as i64 / 2;
    let base = (pos.floor() as i64 - (half - 1)).clamp(0, (n - INTERP_POINTS) as i64) as usize;
    let mut w = [0.0; INTERP_POINTS];
    for (a, wa) in w.iter_mut().enumerate() {
        let xa = (base + a) as f64;
        let mut v = 1.0;
        for b in 0..INTERP_POINTS {
            if b != a {
                let xb = (base + b) as f64;
                v *= (pos - xb) / (xa - xb);
            }
        }
        *wa = v;
    }
    (base, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_validation() {
        assert_eq!(ChartedSurface::torus(8, 32), Err(GridError::TooCoarse(8)));
        assert!(ChartedSurface::sphere(12).is_err());
        assert!(ChartedSurface::sphere_with_extent(64, 1.45).is_err());
    }

    #[test]
    fn euler_characteristics() {
        assert_eq!(ChartedSurface::torus(16, 16).unwrap().euler_char(), 0);
        assert_eq!(ChartedSurface::sphere(32).unwrap().euler_char(), 2);
    }

    #[test]
    fn partition_sums_to_one_across_charts() {
        for k in 0..=400 {
            let r = 0.5 + k as f64 * 0.005;
            let s = partition_weight(r) + partition_weight(1.0 / r);
            assert!((s - 1.0).abs() < 1e-12, "r={r}: {s}");
        }
        assert_eq!(partition_weight(POU_RADIUS + 1e-9), 0.0);
        assert_eq!(partition_weight(0.5), 1.0);
    }

    #[test]
    fn support_is_deep_inside_the_chart() {
        for n in [16, 32, 64, 96] {
            let s = ChartedSurface::sphere(n).unwrap();
            for node in 0..s.len() {
                if s.weight(node) > 0.0 {
                    assert!(s.depth(node) >= SUPPORT_DEPTH, "n={n}");
                }
            }
        }
    }

    #[test]
    fn chart_transition_is_consistent() {
        let s = ChartedSurface::sphere(32).unwrap();
        for &(x, y) in &[(0.3, -0.7), (1.2, 0.1), (-0.5, 0.5)] {
            let r2: f64 = x * x + y * y;
            let p = north_inverse(x, y);
            let q = south_inverse(x / r2, -y / r2);
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-14);
            }
        }
        let n0 = s.charts()[0].index(16, 3);
        assert!(s.sphere_point(n0).is_some());
    }

    #[test]
    fn periodic_shift_wraps() {
        let t = ChartedSurface::torus(16, 20).unwrap();
        let c = &t.charts()[0];
        assert_eq!(t.shift(c.index(0, 0), -1, 0), Some(c.index(15, 0)));
        assert_eq!(t.shift(c.index(15, 19), 1, 1), Some(c.index(0, 0)));
        let s = ChartedSurface::sphere(16).unwrap();
        assert_eq!(s.shift(0, -1, 0), None);
    }

    fn ghost_error(n: usize) -> f64 {
        let s = ChartedSurface::sphere(n).unwrap();
        let f = |p: [f64; 3]| p[0] * p[1] + p[2].powi(3) - 0.5 * p[0];
        let mut vals: Vec<f64> = (0..s.len())
            .map(|k| f(s.sphere_point(k).unwrap()))
            .collect();
        let exact = vals.clone();
        for g in s.ghosts() {
            vals[g.target] = 0.0;
        }
        s.resync(&mut vals);
        s.ghosts()
            .iter()
            .map(|g| (vals[g.target] - exact[g.target]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn resync_reproduces_smooth_functions() {
        let coarse = ghost_error(48);
        let fine = ghost_error(96);
        assert!(coarse < 1e-5, "ghost error {coarse:e}");
        // eighth-order interpolation, allowing for pre-asymptotic behaviour
        assert!(fine < coarse / 30.0, "ghost errors {coarse:e} -> {fine:e}");
    }

    #[test]
    fn donor_stencils_read_only_authoritative_nodes() {
        for n in [16, 33, 64] {
            let s = ChartedSurface::sphere(n).unwrap();
            for g in s.ghosts() {
                assert!(!s.is_authoritative(g.target));
                for a in 0..INTERP_POINTS {
                    for b in 0..INTERP_POINTS {
                        assert!(s.is_authoritative(g.base + a * g.stride + b));
                    }
                }
            }
        }
    }
}
