//! Nodewise first and second fundamental forms.
//!
//! Derivatives are second-order central differences: `[-1, 0, 1] / 2h` for
//! first derivatives, the compact `[1, -2, 1] / h^2` for pure second
//! derivatives and the four-corner stencil for the mixed one. A quantity is
//! only computed where its stencil fits inside the chart; the `level` of a
//! node records how many nested difference rings are available.

use rayon::prelude::*;

use crate::ambient::AmbientManifold;
use crate::linalg::{self, Mat, Vector, ZERO};

use super::chart::ChartedSurface;
use super::immersion::ImmersionField;
use super::SurfaceError;

/// `g~`, `A`, `H` and friends are available.
pub const LEVEL_FORMS: u8 = 1;
/// Christoffel symbols of `g~` are available.
pub const LEVEL_GAMMA: u8 = 2;
/// Intrinsic Gauss curvature is available.
pub const LEVEL_CURVATURE: u8 = 3;

/// Index of the symmetric pair `(i, j)` in `[uu, uv, vv]`.
#[inline]
pub fn sym(i: usize, j: usize) -> usize {
    i + j
}

#[derive(Debug, Clone, Default)]
pub struct NodeGeom {
    pub level: u8,
    pub f: Vector,
    /// `d_u f`, `d_v f`.
    pub df: [Vector; 2],
    /// `d_uu f`, `d_uv f`, `d_vv f`.
    pub d2f: [Vector; 3],
    /// Ambient metric at `f`.
    pub g: Mat,
    pub gtil: [[f64; 2]; 2],
    pub gtil_inv: [[f64; 2]; 2],
    pub det: f64,
    /// `gamma_til[k][i][j] = Gamma~^k_ij`.
    pub gamma_til: [[[f64; 2]; 2]; 2],
    /// Second fundamental form `[A_uu, A_uv, A_vv]`, normal valued.
    pub a: [Vector; 3],
    pub h: Vector,
    pub a0: [Vector; 3],
    pub normsq_a: f64,
    pub normsq_a0: f64,
    pub normsq_h: f64,
    pub k_til: f64,
    pub k_tsigma: f64,
    /// `sqrt(det g~) h_u h_v`.
    pub area_el: f64,
    /// Coefficients of a `g~`-orthonormal frame: `e_a = frame[a][0] d_u + frame[a][1] d_v`.
    pub frame: [[f64; 2]; 2],
    /// Images `Df . e_a`.
    pub etil: [Vector; 2],
    /// `|P(D_i d_j f - Gamma~^k_ij d_k f)|` before normal projection.
    pub tangential_residual: f64,
}

impl NodeGeom {
    /// `g(a, b)` at this node.
    #[inline]
    pub fn inner(&self, a: &Vector, b: &Vector, n: usize) -> f64 {
        linalg::form(&self.g, a, b, n)
    }

    /// Tangential projection `P v`.
    #[inline]
    pub fn tangential(&self, v: &Vector, n: usize) -> Vector {
        let c = [self.inner(v, &self.df[0], n), self.inner(v, &self.df[1], n)];
        let mut r = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                linalg::axpy(&mut r, self.gtil_inv[i][j] * c[i], &self.df[j]);
            }
        }
        r
    }

    /// Normal projection `P^perp v`.
    #[inline]
    pub fn perp(&self, v: &Vector, n: usize) -> Vector {
        linalg::sub(v, &self.tangential(v, n))
    }

    /// `B(e_a, e_b)` for a symmetric bilinear form stored as `[uu, uv, vv]`.
    #[inline]
    pub fn in_frame(&self, b: &[Vector; 3], ea: usize, eb: usize) -> Vector {
        let mut r = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                let c = self.frame[ea][i] * self.frame[eb][j];
                if c != 0.0 {
                    linalg::axpy(&mut r, c, &b[sym(i, j)]);
                }
            }
        }
        r
    }

    /// `g~^ij g~^kl <b_ik, c_jl>`, the full contraction of two forms.
    pub fn contract_forms(&self, b: &[Vector; 3], c: &[Vector; 3], n: usize) -> f64 {
        let mut s = 0.0;
        for ea in 0..2 {
            for eb in 0..2 {
                s += self.inner(&self.in_frame(b, ea, eb), &self.in_frame(c, ea, eb), n);
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct GeometryCache {
    field: ImmersionField,
    nodes: Vec<NodeGeom>,
    min_det: f64,
    mean_det: f64,
    max_tangential_residual: f64,
}

impl GeometryCache {
    #[inline]
    pub fn field(&self) -> &ImmersionField {
        &self.field
    }

    #[inline]
    pub fn surface(&self) -> &ChartedSurface {
        self.field.surface()
    }

    #[inline]
    pub fn ambient(&self) -> &AmbientManifold {
        self.field.ambient()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    #[inline]
    pub fn nodes(&self) -> &[NodeGeom] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, k: usize) -> &NodeGeom {
        &self.nodes[k]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest `det g~` over nodes with computed forms.
    pub fn min_det(&self) -> f64 {
        self.min_det
    }

    pub fn mean_det(&self) -> f64 {
        self.mean_det
    }

    /// Largest tangential leakage of the difference second fundamental form.
    pub fn max_tangential_residual(&self) -> f64 {
        self.max_tangential_residual
    }

    /// Nodes carrying quadrature weight, with their weights.
    pub fn quadrature_nodes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.surface()
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (k, *w))
    }

    /// `sup |A|` over nodes carrying quadrature weight.
    pub fn max_norm_a(&self) -> f64 {
        self.quadrature_nodes()
            .map(|(k, _)| self.nodes[k].normsq_a)
            .fold(0.0_f64, f64::max)
            .sqrt()
    }

    /// `sup |K~ - K(T Sigma) - (|H|^2 - |A|^2) / 2|` over quadrature nodes
    /// with intrinsic curvature. `K~` comes from the Christoffel symbols, so
    /// this is an independent check of the Gauss equation.
    pub fn gauss_residual(&self) -> f64 {
        self.quadrature_nodes()
            .map(|(k, _)| &self.nodes[k])
            .filter(|nd| nd.level >= LEVEL_CURVATURE)
            .map(|nd| (nd.k_til - nd.k_tsigma - 0.5 * (nd.normsq_h - nd.normsq_a)).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest physical edge length over authoritative nodes.
    pub fn min_edge(&self) -> f64 {
        let s = self.surface();
        let mut m = f64::INFINITY;
        for (k, nd) in self.nodes.iter().enumerate() {
            if nd.level < LEVEL_FORMS || !s.is_authoritative(k) {
                continue;
            }
            let (hu, hv) = s.spacing(k);
            m = m
                .min(hu * nd.gtil[0][0].sqrt())
                .min(hv * nd.gtil[1][1].sqrt());
        }
        m
    }
}

/// First difference and second differences of a nodal field at `k`.
pub(crate) struct Stencil {
    pub up: usize,
    pub um: usize,
    pub vp: usize,
    pub vm: usize,
    pub pp: usize,
    pub pm: usize,
    pub mp: usize,
    pub mm: usize,
}

impl Stencil {
    #[inline]
    pub fn at(s: &ChartedSurface, k: usize) -> Option<Stencil> {
        Some(Stencil {
            up: s.shift(k, 1, 0)?,
            um: s.shift(k, -1, 0)?,
            vp: s.shift(k, 0, 1)?,
            vm: s.shift(k, 0, -1)?,
            pp: s.shift(k, 1, 1)?,
            pm: s.shift(k, 1, -1)?,
            mp: s.shift(k, -1, 1)?,
            mm: s.shift(k, -1, -1)?,
        })
    }

    #[inline]
    pub fn first(&self, x: &[Vector], hu: f64, hv: f64) -> [Vector; 2] {
        [
            linalg::scale(&linalg::sub(&x[self.up], &x[self.um]), 0.5 / hu),
            linalg::scale(&linalg::sub(&x[self.vp], &x[self.vm]), 0.5 / hv),
        ]
    }

    #[inline]
    pub fn second(&self, x: &[Vector], k: usize, hu: f64, hv: f64) -> [Vector; 3] {
        let c = linalg::scale(&x[k], 2.0);
        let uu = linalg::scale(
            &linalg::sub(&linalg::add(&x[self.up], &x[self.um]), &c),
            1.0 / (hu * hu),
        );
        let vv = linalg::scale(
            &linalg::sub(&linalg::add(&x[self.vp], &x[self.vm]), &c),
            1.0 / (hv * hv),
        );
        let uv = linalg::scale(
            &linalg::sub(
                &linalg::add(&x[self.pp], &x[self.mm]),
                &linalg::add(&x[self.pm], &x[self.mp]),
            ),
            0.25 / (hu * hv),
        );
        [uu, uv, vv]
    }

    #[inline]
    pub fn first_scalar(&self, x: &[f64], hu: f64, hv: f64) -> [f64; 2] {
        [
            (x[self.up] - x[self.um]) * 0.5 / hu,
            (x[self.vp] - x[self.vm]) * 0.5 / hv,
        ]
    }
}

fn forms_at(field: &ImmersionField, k: usize) -> NodeGeom {
    let s = field.surface();
    let amb = field.ambient();
    let n = amb.dim();
    let x = field.points();
    let mut nd = NodeGeom {
        f: x[k],
        ..NodeGeom::default()
    };
    if s.depth(k) < 1 {
        return nd;
    }
    let st = Stencil::at(s, k).expect("depth >= 1");
    let (hu, hv) = s.spacing(k);
    nd.df = st.first(x, hu, hv);
    nd.d2f = st.second(x, k, hu, hv);
    nd.g = amb.metric(&x[k]);
    for i in 0..2 {
        for j in 0..2 {
            nd.gtil[i][j] = nd.inner(&nd.df[i], &nd.df[j], n);
        }
    }
    let det = nd.gtil[0][0] * nd.gtil[1][1] - nd.gtil[0][1] * nd.gtil[1][0];
    nd.det = det;
    nd.level = LEVEL_FORMS;
    if !(det > 0.0) || !det.is_finite() {
        return nd;
    }
    nd.gtil_inv = [
        [nd.gtil[1][1] / det, -nd.gtil[0][1] / det],
        [-nd.gtil[1][0] / det, nd.gtil[0][0] / det],
    ];
    let conn = amb.connection(&x[k]);
    let mut a = [ZERO; 3];
    for i in 0..2 {
        for j in i..2 {
            let mut dij = nd.d2f[sym(i, j)];
            if !conn.is_flat() {
                dij = linalg::add(&dij, &conn.contract(&nd.df[i], &nd.df[j]));
            }
            a[sym(i, j)] = dij;
        }
    }
    // keep the unprojected D_i d_j f in a0 until the Christoffel pass
    nd.a0 = a;
    for v in a.iter_mut() {
        *v = nd.perp(v, n);
    }
    nd.a = a;
    let gi = nd.gtil_inv;
    let mut h = ZERO;
    linalg::axpy(&mut h, gi[0][0], &a[0]);
    linalg::axpy(&mut h, 2.0 * gi[0][1], &a[1]);
    linalg::axpy(&mut h, gi[1][1], &a[2]);
    nd.h = h;

    let g00 = nd.gtil[0][0];
    let s1 = 1.0 / g00.sqrt();
    let s2 = (g00 / det).sqrt();
    nd.frame = [[s1, 0.0], [-nd.gtil[0][1] / g00 * s2, s2]];
    for ea in 0..2 {
        let mut e = ZERO;
        linalg::axpy(&mut e, nd.frame[ea][0], &nd.df[0]);
        linalg::axpy(&mut e, nd.frame[ea][1], &nd.df[1]);
        nd.etil[ea] = e;
    }

    nd.normsq_h = nd.inner(&h, &h, n);
    nd.normsq_a = nd.contract_forms(&a, &a, n);
    nd.area_el = det.sqrt() * hu * hv;
    let curv = amb.curvature_at(&x[k]);
    if !curv.is_flat() {
        let r = curv.apply(&nd.etil[0], &nd.etil[1], &nd.etil[1]);
        nd.k_tsigma = nd.inner(&r, &nd.etil[0], n);
    }
    nd
}

/// Christoffel symbols of `g~` from central differences of the nodal metric.
fn gamma_at(s: &ChartedSurface, nodes: &[NodeGeom], k: usize) -> Option<[[[f64; 2]; 2]; 2]> {
    if s.depth(k) < 2 {
        return None;
    }
    let st = Stencil::at(s, k)?;
    let (hu, hv) = s.spacing(k);
    // dg[l][i][j] = d_l g~_ij
    let mut dg = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            dg[0][i][j] = (nodes[st.up].gtil[i][j] - nodes[st.um].gtil[i][j]) * 0.5 / hu;
            dg[1][i][j] = (nodes[st.vp].gtil[i][j] - nodes[st.vm].gtil[i][j]) * 0.5 / hv;
        }
    }
    let gi = nodes[k].gtil_inv;
    let mut gam = [[[0.0; 2]; 2]; 2];
    for (kk, gk) in gam.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for l in 0..2 {
                    v += gi[kk][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
                }
                gk[i][j] = 0.5 * v;
            }
        }
    }
    Some(gam)
}

/// Intrinsic Gauss curvature from differences of the Christoffel symbols.
fn gauss_curvature_at(s: &ChartedSurface, nodes: &[NodeGeom], k: usize) -> Option<f64> {
    if s.depth(k) < 3 {
        return None;
    }
    let st = Stencil::at(s, k)?;
    let (hu, hv) = s.spacing(k);
    let g = &nodes[k].gamma_til;
    // R(d_u, d_v) d_v = (d_u G^m_vv - d_v G^m_uv + G^m_up G^p_vv - G^m_vp G^p_uv) d_m
    let mut r = [0.0; 2];
    for (m, rm) in r.iter_mut().enumerate() {
        let du = (nodes[st.up].gamma_til[m][1][1] - nodes[st.um].gamma_til[m][1][1]) * 0.5 / hu;
        let dv = (nodes[st.vp].gamma_til[m][0][1] - nodes[st.vm].gamma_til[m][0][1]) * 0.5 / hv;
        let mut v = du - dv;
        for p in 0..2 {
            v += g[m][0][p] * g[p][1][1] - g[m][1][p] * g[p][0][1];
        }
        *rm = v;
    }
    let gt = &nodes[k].gtil;
    Some((gt[0][0] * r[0] + gt[1][0] * r[1]) / nodes[k].det)
}

/// Full geometry stack of an immersion.
pub fn compute_geometry(field: &ImmersionField) -> Result<GeometryCache, SurfaceError> {
    let s = field.surface();
    let n = field.dim();
    for (node, p) in field.points().iter().enumerate() {
        if !linalg::is_finite(p) {
            return Err(SurfaceError::NonFiniteValue { node });
        }
    }
    let mut nodes: Vec<NodeGeom> = (0..s.len())
        .into_par_iter()
        .map(|k| forms_at(field, k))
        .collect();

    let mut sum_det = 0.0;
    let mut count = 0usize;
    for (node, nd) in nodes.iter().enumerate() {
        if nd.level < LEVEL_FORMS {
            continue;
        }
        if !(nd.det > 0.0) || !nd.det.is_finite() {
            return Err(SurfaceError::DegenerateMetric { node, det: nd.det });
        }
        sum_det += nd.det;
        count += 1;
    }
    let mean_det = sum_det / count.max(1) as f64;
    let mut min_det = f64::INFINITY;
    for (node, nd) in nodes.iter().enumerate() {
        if nd.level < LEVEL_FORMS {
            continue;
        }
        if nd.det < 1e-10 * mean_det {
            return Err(SurfaceError::DegenerateMetric { node, det: nd.det });
        }
        min_det = min_det.min(nd.det);
        if !linalg::is_finite(&nd.h) || !nd.normsq_a.is_finite() {
            return Err(SurfaceError::NonFiniteValue { node });
        }
    }

    let gammas: Vec<Option<[[[f64; 2]; 2]; 2]>> = (0..s.len())
        .into_par_iter()
        .map(|k| gamma_at(s, &nodes, k))
        .collect();
    for (nd, gam) in nodes.iter_mut().zip(gammas) {
        if let Some(gam) = gam {
            nd.gamma_til = gam;
            nd.level = nd.level.max(LEVEL_GAMMA);
        }
    }

    let curvature: Vec<Option<f64>> = (0..s.len())
        .into_par_iter()
        .map(|k| gauss_curvature_at(s, &nodes, k))
        .collect();
    let mut max_tangential_residual: f64 = 0.0;
    for (nd, kt) in nodes.iter_mut().zip(curvature) {
        if let Some(kt) = kt {
            nd.k_til = kt;
            nd.level = LEVEL_CURVATURE;
        }
        if nd.level >= LEVEL_GAMMA {
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                for j in i..2 {
                    let mut raw = nd.a0[sym(i, j)];
                    for kk in 0..2 {
                        linalg::axpy(&mut raw, -nd.gamma_til[kk][i][j], &nd.df[kk]);
                    }
                    let t = nd.tangential(&raw, n);
                    worst = worst.max(nd.inner(&t, &t, n).sqrt());
                }
            }
            nd.tangential_residual = worst;
            max_tangential_residual = max_tangential_residual.max(worst);
        }
        if nd.level >= LEVEL_FORMS {
            let mut a0 = nd.a;
            for i in 0..2 {
                for j in i..2 {
                    linalg::axpy(&mut a0[sym(i, j)], -0.5 * nd.gtil[i][j], &nd.h);
                }
            }
            nd.a0 = a0;
            nd.normsq_a0 = nd.contract_forms(&a0, &a0, n);
        }
    }

    Ok(GeometryCache {
        field: field.clone(),
        nodes,
        min_det,
        mean_det,
        max_tangential_residual,
    })
}
