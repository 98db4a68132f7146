//! Ambient Riemannian manifolds in a single global chart.
//!
//! Space forms are realised as conformally flat charts: the round sphere of
//! curvature `kappa^2` minus a point through stereographic coordinates, and
//! hyperbolic space of curvature `-kappa^2` as the Poincaré ball. A `Custom`
//! metric takes any positive-definite matrix field; its Christoffel symbols and
//! curvature come from nested central differences.
//!
//! Curvature convention: `R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z`, and the
//! four-tensor is `R(X,Y,Z,W) = g(R(X,Y)Z, W)`, so the sectional curvature of a
//! plane is `R(X,Y,Y,X) / (|X|^2 |Y|^2 - <X,Y>^2)`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Mat, Vector, MAX_DIM, ZERO};
use crate::profile::smooth_falloff;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmbientError {
    #[error("ambient dimension {0} unsupported (expected 3..={MAX_DIM})")]
    BadDimension(usize),
    #[error("degenerate plane: Gram determinant {0:e}")]
    DegeneratePlane(f64),
    #[error("point lies outside the chart domain")]
    OutOfChart,
    #[error("bad cutoff radii: need 0 < delta < rho < inj (delta={delta}, rho={rho}, inj={inj})")]
    BadRadii { delta: f64, rho: f64, inj: f64 },
    #[error("curvature parameter must be positive, got {0}")]
    BadCurvature(f64),
}

/// Metric field for a custom ambient: chart point to `g_ab(x)`.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

#[derive(Clone)]
pub enum AmbientKind {
    Euclidean,
    /// Stereographic chart of the sphere with sectional curvature `kappa^2`.
    SphereConformal {
        kappa: f64,
    },
    /// Poincaré ball with sectional curvature `-kappa^2`.
    HyperbolicConformal {
        kappa: f64,
    },
    Custom {
        metric: MetricFn,
        step: f64,
    },
}

impl fmt::Debug for AmbientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientKind::Euclidean => write!(f, "Euclidean"),
            AmbientKind::SphereConformal { kappa } => write!(f, "SphereConformal(kappa={kappa})"),
            AmbientKind::HyperbolicConformal { kappa } => {
                write!(f, "HyperbolicConformal(kappa={kappa})")
            }
            AmbientKind::Custom { step, .. } => write!(f, "Custom(step={step})"),
        }
    }
}

/// Sup-norm bounds on the curvature and its derivatives plus the injectivity
/// radius. `inj_radius == f64::INFINITY` encodes an infinite radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedGeometry {
    pub sup_r: f64,
    pub sup_dr: f64,
    pub sup_dkr: Vec<f64>,
    /// Operator norm of the Ricci tensor.
    pub sup_ric: f64,
    pub inj_radius: f64,
    pub order: usize,
}

impl BoundedGeometry {
    pub fn flat(order: usize) -> Self {
        BoundedGeometry {
            sup_r: 0.0,
            sup_dr: 0.0,
            sup_dkr: vec![0.0; order + 1],
            sup_ric: 0.0,
            inj_radius: f64::INFINITY,
            order,
        }
    }

    fn space_form(n: usize, curvature: f64, inj_radius: f64, order: usize) -> Self {
        let c = curvature.abs();
        let sup_r = (2.0 * (n * (n - 1)) as f64).sqrt() * c;
        let mut sup_dkr = vec![0.0; order + 1];
        sup_dkr[0] = sup_r;
        BoundedGeometry {
            sup_r,
            sup_dr: 0.0,
            sup_dkr,
            sup_ric: (n - 1) as f64 * c,
            inj_radius,
            order,
        }
    }

    /// Bounds for the metric `factor * g`.
    pub fn rescaled(&self, factor: f64) -> Self {
        BoundedGeometry {
            sup_r: self.sup_r / factor,
            sup_dr: self.sup_dr / factor.powf(1.5),
            sup_dkr: self
                .sup_dkr
                .iter()
                .enumerate()
                .map(|(k, v)| v / factor.powf(1.0 + 0.5 * k as f64))
                .collect(),
            sup_ric: self.sup_ric / factor,
            inj_radius: self.inj_radius * factor.sqrt(),
            order: self.order,
        }
    }

    #[inline]
    fn inv_inj(&self) -> f64 {
        if self.inj_radius.is_finite() {
            1.0 / self.inj_radius
        } else {
            0.0
        }
    }

    /// `|R|^{1/2} + |DR|^{1/3} + inj^{-1}`, the scale governing the
    /// monotonicity formula.
    pub fn lambda_monotonicity(&self) -> f64 {
        self.sup_r.sqrt() + self.sup_dr.cbrt() + self.inv_inj()
    }

    /// `|Ric|^{1/2} + inj^{-1}`, the scale of the extra term in the
    /// Michael-Simon inequality.
    pub fn lambda_sobolev(&self) -> f64 {
        self.sup_ric.sqrt() + self.inv_inj()
    }

    /// `sum_{i<=2} |D^i R|^{1/(i+2)} + inj^{-1}`, the smallness scale of the
    /// lifespan estimate.
    pub fn lambda_lifespan(&self) -> f64 {
        let d2 = self.sup_dkr.get(2).copied().unwrap_or(0.0);
        self.sup_r.sqrt() + self.sup_dr.cbrt() + d2.powf(0.25) + self.inv_inj()
    }
}

#[derive(Clone, Debug)]
pub struct AmbientManifold {
    dim: usize,
    kind: AmbientKind,
    /// Constant metric multiplier; `g = scale * g_kind`.
    scale: f64,
    bounds: BoundedGeometry,
}

const DEFAULT_ORDER: usize = 5;

impl AmbientManifold {
    fn check_dim(n: usize) -> Result<(), AmbientError> {
        if (3..=MAX_DIM).contains(&n) {
            Ok(())
        } else {
            Err(AmbientError::BadDimension(n))
        }
    }

    pub fn euclidean(n: usize) -> Result<Self, AmbientError> {
        Self::check_dim(n)?;
        Ok(AmbientManifold {
            dim: n,
            kind: AmbientKind::Euclidean,
            scale: 1.0,
            bounds: BoundedGeometry::flat(DEFAULT_ORDER),
        })
    }

    pub fn sphere(n: usize, kappa: f64) -> Result<Self, AmbientError> {
        Self::check_dim(n)?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(AmbientError::BadCurvature(kappa));
        }
        Ok(AmbientManifold {
            dim: n,
            kind: AmbientKind::SphereConformal { kappa },
            scale: 1.0,
            bounds: BoundedGeometry::space_form(
                n,
                kappa * kappa,
                std::f64::consts::PI / kappa,
                DEFAULT_ORDER,
            ),
        })
    }

    pub fn hyperbolic(n: usize, kappa: f64) -> Result<Self, AmbientError> {
        Self::check_dim(n)?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(AmbientError::BadCurvature(kappa));
        }
        Ok(AmbientManifold {
            dim: n,
            kind: AmbientKind::HyperbolicConformal { kappa },
            scale: 1.0,
            bounds: BoundedGeometry::space_form(n, kappa * kappa, f64::INFINITY, DEFAULT_ORDER),
        })
    }

    /// Custom metric. `step` is the central-difference step used for the
    /// Christoffel symbols and curvature (a good default is `1e-4` times the
    /// coordinate scale of the region of interest).
    pub fn custom(
        n: usize,
        metric: MetricFn,
        step: f64,
        bounds: BoundedGeometry,
    ) -> Result<Self, AmbientError> {
        Self::check_dim(n)?;
        Ok(AmbientManifold {
            dim: n,
            kind: AmbientKind::Custom { metric, step },
            scale: 1.0,
            bounds,
        })
    }

    /// The same chart with metric `factor * g`.
    pub fn rescaled(&self, factor: f64) -> Self {
        AmbientManifold {
            dim: self.dim,
            kind: self.kind.clone(),
            scale: self.scale * factor,
            bounds: self.bounds.rescaled(factor),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &AmbientKind {
        &self.kind
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bounds(&self) -> &BoundedGeometry {
        &self.bounds
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, AmbientKind::Euclidean)
    }

    /// Closed-form distances for the built-in kinds; the custom kind uses a
    /// midpoint-metric chart distance.
    pub fn distance_is_exact(&self) -> bool {
        !matches!(self.kind, AmbientKind::Custom { .. })
    }

    /// Constant sectional curvature of the built-in kinds (after scaling).
    pub fn constant_curvature(&self) -> Option<f64> {
        match self.kind {
            AmbientKind::Euclidean => Some(0.0),
            AmbientKind::SphereConformal { kappa } => Some(kappa * kappa / self.scale),
            AmbientKind::HyperbolicConformal { kappa } => Some(-kappa * kappa / self.scale),
            AmbientKind::Custom { .. } => None,
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        match self.kind {
            AmbientKind::HyperbolicConformal { kappa } => {
                let r2: f64 = x.iter().take(self.dim).map(|v| v * v).sum();
                kappa * kappa * r2 < 1.0
            }
            _ => x.iter().take(self.dim).all(|v| v.is_finite()),
        }
    }

    /// Unscaled conformal factor `lambda^2` and `grad phi` with `g = e^{2 phi} delta`.
    #[inline]
    fn conformal(&self, x: &Vector) -> Option<(f64, Vector)> {
        let n = self.dim;
        let (sign, kappa) = match self.kind {
            AmbientKind::SphereConformal { kappa } => (1.0, kappa),
            AmbientKind::HyperbolicConformal { kappa } => (-1.0, kappa),
            _ => return None,
        };
        let k2 = kappa * kappa;
        let mut r2 = 0.0;
        for v in x.iter().take(n) {
            r2 += v * v;
        }
        let denom = 1.0 + sign * k2 * r2;
        let lambda = 2.0 / denom;
        let mut grad = ZERO;
        for a in 0..n {
            grad[a] = -2.0 * sign * k2 * x[a] / denom;
        }
        Some((lambda * lambda, grad))
    }

    /// Metric matrix `g_ab(x)`.
    pub fn metric(&self, x: &Vector) -> Mat {
        let n = self.dim;
        match &self.kind {
            AmbientKind::Euclidean => {
                let mut m = linalg::identity(n);
                for (a, row) in m.iter_mut().enumerate().take(n) {
                    row[a] = self.scale;
                }
                m
            }
            AmbientKind::SphereConformal { .. } | AmbientKind::HyperbolicConformal { .. } => {
                let (l2, _) = self.conformal(x).expect("conformal kind");
                let mut m = [[0.0; MAX_DIM]; MAX_DIM];
                for (a, row) in m.iter_mut().enumerate().take(n) {
                    row[a] = self.scale * l2;
                }
                m
            }
            AmbientKind::Custom { metric, .. } => {
                let mut m = metric(&x[..n]);
                for row in m.iter_mut().take(n) {
                    for v in row.iter_mut().take(n) {
                        *v *= self.scale;
                    }
                }
                m
            }
        }
    }

    /// `g_x(a, b)`.
    #[inline]
    pub fn inner(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean => self.scale * linalg::dot(a, b),
            AmbientKind::SphereConformal { .. } | AmbientKind::HyperbolicConformal { .. } => {
                let (l2, _) = self.conformal(x).expect("conformal kind");
                self.scale * l2 * linalg::dot(a, b)
            }
            AmbientKind::Custom { .. } => linalg::form(&self.metric(x), a, b, self.dim),
        }
    }

    /// Full Christoffel symbols `Gamma^a_bc`, flattened as `a*n*n + b*n + c`.
    pub fn christoffel(&self, x: &Vector) -> Vec<f64> {
        let n = self.dim;
        let mut gam = vec![0.0; n * n * n];
        match &self.kind {
            AmbientKind::Euclidean => {}
            AmbientKind::SphereConformal { .. } | AmbientKind::HyperbolicConformal { .. } => {
                let (_, dphi) = self.conformal(x).expect("conformal kind");
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let mut v = 0.0;
                            if a == b {
                                v += dphi[c];
                            }
                            if a == c {
                                v += dphi[b];
                            }
                            if b == c {
                                v -= dphi[a];
                            }
                            gam[a * n * n + b * n + c] = v;
                        }
                    }
                }
            }
            AmbientKind::Custom { step, .. } => {
                let g = self.metric(x);
                let ginv = linalg::spd_inverse(&g, n).unwrap_or(linalg::identity(n));
                // dg[c][a][b] = d_c g_ab
                let mut dg = vec![[[0.0; MAX_DIM]; MAX_DIM]; n];
                for (c, dgc) in dg.iter_mut().enumerate() {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[c] += step;
                    xm[c] -= step;
                    let gp = self.metric(&xp);
                    let gm = self.metric(&xm);
                    for a in 0..n {
                        for b in 0..n {
                            dgc[a][b] = (gp[a][b] - gm[a][b]) / (2.0 * step);
                        }
                    }
                }
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let mut v = 0.0;
                            for d in 0..n {
                                v += ginv[a][d] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
                            }
                            gam[a * n * n + b * n + c] = 0.5 * v;
                        }
                    }
                }
            }
        }
        gam
    }

    /// `Gamma(a, b)^c = Gamma^c_ij a^i b^j` at `x`.
    #[inline]
    pub fn christoffel_contract(&self, x: &Vector, a: &Vector, b: &Vector) -> Vector {
        match &self.kind {
            AmbientKind::Euclidean => ZERO,
            AmbientKind::SphereConformal { .. } | AmbientKind::HyperbolicConformal { .. } => {
                let (_, dphi) = self.conformal(x).expect("conformal kind");
                let bd = linalg::dot(b, &dphi);
                let ad = linalg::dot(a, &dphi);
                let ab = linalg::dot(a, b);
                let mut r = ZERO;
                for k in 0..self.dim {
                    r[k] = a[k] * bd + b[k] * ad - ab * dphi[k];
                }
                r
            }
            AmbientKind::Custom { .. } => {
                let gam = self.christoffel(x);
                contract_christoffel(&gam, self.dim, a, b)
            }
        }
    }

    /// Curvature data at `x`, for repeated evaluations at one point.
    pub fn curvature_at(&self, x: &Vector) -> CurvatureAt {
        match &self.kind {
            AmbientKind::Euclidean => CurvatureAt::Flat,
            AmbientKind::SphereConformal { kappa } | AmbientKind::HyperbolicConformal { kappa } => {
                let c = if matches!(self.kind, AmbientKind::SphereConformal { .. }) {
                    kappa * kappa
                } else {
                    -kappa * kappa
                };
                let (l2, _) = self.conformal(x).expect("conformal kind");
                CurvatureAt::SpaceForm {
                    c_l2: c * l2,
                    n: self.dim,
                }
            }
            AmbientKind::Custom { .. } => CurvatureAt::Table {
                r: self.curvature_components_fd(x),
                n: self.dim,
            },
        }
    }

    /// Connection data at `x`, for repeated contractions at one point.
    pub fn connection(&self, x: &Vector) -> Connection {
        match &self.kind {
            AmbientKind::Euclidean => Connection::Flat,
            AmbientKind::SphereConformal { .. } | AmbientKind::HyperbolicConformal { .. } => {
                let (_, dphi) = self.conformal(x).expect("conformal kind");
                Connection::Conformal { dphi, n: self.dim }
            }
            AmbientKind::Custom { .. } => Connection::Table {
                gamma: self.christoffel(x),
                n: self.dim,
            },
        }
    }

    /// Curvature endomorphism `R(X,Y)Z`.
    pub fn curvature(&self, x: &Vector, xv: &Vector, yv: &Vector, zv: &Vector) -> Vector {
        self.curvature_at(x).apply(xv, yv, zv)
    }

    /// Components `R^e_{abc}` with `R(d_a, d_b) d_c = R^e_{abc} d_e`, flattened
    /// as `((e*n + a)*n + b)*n + c`, from nested central differences.
    fn curvature_components_fd(&self, x: &Vector) -> Vec<f64> {
        let n = self.dim;
        let step = match &self.kind {
            AmbientKind::Custom { step, .. } => *step,
            _ => 1e-4,
        };
        let gam = self.christoffel(x);
        // dgam[d] = d_d Gamma
        let mut dgam = Vec::with_capacity(n);
        for d in 0..n {
            let mut xp = *x;
            let mut xm = *x;
            xp[d] += step;
            xm[d] -= step;
            let gp = self.christoffel(&xp);
            let gm = self.christoffel(&xm);
            dgam.push(
                gp.iter()
                    .zip(gm.iter())
                    .map(|(p, m)| (p - m) / (2.0 * step))
                    .collect::<Vec<f64>>(),
            );
        }
        let idx = |a: usize, b: usize, c: usize| a * n * n + b * n + c;
        let mut rt = vec![0.0; n * n * n * n];
        for e in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut v = dgam[a][idx(e, b, c)] - dgam[b][idx(e, a, c)];
                        for f in 0..n {
                            v += gam[idx(e, a, f)] * gam[idx(f, b, c)]
                                - gam[idx(e, b, f)] * gam[idx(f, a, c)];
                        }
                        rt[((e * n + a) * n + b) * n + c] = v;
                    }
                }
            }
        }
        rt
    }

    /// Four-tensor `R_abcd = g(R(d_a, d_b) d_c, d_d)`, flattened row-major.
    pub fn riemann(&self, x: &Vector) -> Vec<f64> {
        let n = self.dim;
        let g = self.metric(x);
        let mut out = vec![0.0; n * n * n * n];
        let mut ea = ZERO;
        let mut eb = ZERO;
        let mut ec = ZERO;
        for a in 0..n {
            ea.fill(0.0);
            ea[a] = 1.0;
            for b in 0..n {
                eb.fill(0.0);
                eb[b] = 1.0;
                for c in 0..n {
                    ec.fill(0.0);
                    ec[c] = 1.0;
                    let r = self.curvature(x, &ea, &eb, &ec);
                    for d in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            s += r[k] * g[k][d];
                        }
                        out[((a * n + b) * n + c) * n + d] = s;
                    }
                }
            }
        }
        out
    }

    pub fn sectional_curvature(
        &self,
        x: &Vector,
        xv: &Vector,
        yv: &Vector,
    ) -> Result<f64, AmbientError> {
        let xx = self.inner(x, xv, xv);
        let yy = self.inner(x, yv, yv);
        let xy = self.inner(x, xv, yv);
        let gram = xx * yy - xy * xy;
        if !(gram > 1e-12 * xx * yy) || gram <= 0.0 {
            return Err(AmbientError::DegeneratePlane(gram));
        }
        let r = self.curvature(x, xv, yv, yv);
        Ok(self.inner(x, &r, xv) / gram)
    }

    /// Riemannian distance. Exact for the built-in kinds; for the custom kind
    /// the chart segment measured with the metric at its midpoint.
    pub fn geodesic_distance(&self, p: &Vector, q: &Vector) -> Result<f64, AmbientError> {
        if !self.in_domain(p) || !self.in_domain(q) {
            return Err(AmbientError::OutOfChart);
        }
        let n = self.dim;
        let diff = linalg::sub(p, q);
        let d2 = linalg::dot(&diff, &diff);
        let rs = self.scale.sqrt();
        let pp: f64 = p.iter().take(n).map(|v| v * v).sum();
        let qq: f64 = q.iter().take(n).map(|v| v * v).sum();
        Ok(match &self.kind {
            AmbientKind::Euclidean => rs * d2.sqrt(),
            AmbientKind::SphereConformal { kappa } => {
                let k2 = kappa * kappa;
                let s = kappa * d2.sqrt() / ((1.0 + k2 * pp) * (1.0 + k2 * qq)).sqrt();
                rs * 2.0 / kappa * s.min(1.0).asin()
            }
            AmbientKind::HyperbolicConformal { kappa } => {
                let k2 = kappa * kappa;
                let arg = 2.0 * k2 * d2 / ((1.0 - k2 * pp) * (1.0 - k2 * qq));
                // acosh(1 + a) = 2 asinh(sqrt(a / 2))
                rs * 2.0 / kappa * (0.5 * arg).sqrt().asinh()
            }
            AmbientKind::Custom { .. } => {
                let mid = linalg::scale(&linalg::add(p, q), 0.5);
                let g = self.metric(&mid);
                linalg::form(&g, &diff, &diff, n).max(0.0).sqrt()
            }
        })
    }

    /// Upper bound on the chart distance `|p - q|` for points with
    /// `d(p, q) <= dist` and `|q| <= q_radius`. Infinite when no useful bound is
    /// known.
    pub fn chart_radius_bound(&self, p: &Vector, dist: f64, q_radius: f64) -> f64 {
        let d = dist / self.scale.sqrt();
        match &self.kind {
            AmbientKind::Euclidean => d,
            // conformal factor is at least 2 on the whole ball
            AmbientKind::HyperbolicConformal { .. } => 0.5 * d,
            AmbientKind::SphereConformal { kappa } => {
                let half = kappa * d / 2.0;
                if half >= std::f64::consts::FRAC_PI_2 {
                    return f64::INFINITY;
                }
                let k2 = kappa * kappa;
                let pp: f64 = p.iter().take(self.dim).map(|v| v * v).sum();
                half.sin() / kappa * ((1.0 + k2 * pp) * (1.0 + k2 * q_radius * q_radius)).sqrt()
            }
            AmbientKind::Custom { .. } => f64::INFINITY,
        }
    }

    /// Smooth cutoff of the distance to `center`: 1 on the closed `delta`-ball,
    /// 0 outside the `rho`-ball.
    pub fn cutoff(
        &self,
        center: &Vector,
        delta: f64,
        rho: f64,
        x: &Vector,
    ) -> Result<f64, AmbientError> {
        let inj = self.bounds.inj_radius;
        if !(delta > 0.0 && delta < rho && rho < inj) {
            return Err(AmbientError::BadRadii { delta, rho, inj });
        }
        let d = self.geodesic_distance(center, x)?;
        Ok(smooth_falloff((d - delta) / (rho - delta)))
    }
}

/// Curvature endomorphism frozen at one chart point.
#[derive(Debug, Clone)]
pub enum CurvatureAt {
    Flat,
    /// `R(X,Y)Z = c_l2 (<Y,Z> X - <X,Z> Y)` with Euclidean chart products.
    SpaceForm {
        c_l2: f64,
        n: usize,
    },
    Table {
        r: Vec<f64>,
        n: usize,
    },
}

impl CurvatureAt {
    /// `R(X,Y)Z`.
    pub fn apply(&self, xv: &Vector, yv: &Vector, zv: &Vector) -> Vector {
        match self {
            CurvatureAt::Flat => ZERO,
            CurvatureAt::SpaceForm { c_l2, n } => {
                let yz = linalg::dot(yv, zv);
                let xz = linalg::dot(xv, zv);
                let mut r = ZERO;
                for k in 0..*n {
                    r[k] = c_l2 * (yz * xv[k] - xz * yv[k]);
                }
                r
            }
            CurvatureAt::Table { r: rt, n } => {
                let n = *n;
                let mut out = ZERO;
                for (e, o) in out.iter_mut().enumerate().take(n) {
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let xy = xv[a] * yv[b];
                            if xy == 0.0 {
                                continue;
                            }
                            for c in 0..n {
                                s += rt[((e * n + a) * n + b) * n + c] * xy * zv[c];
                            }
                        }
                    }
                    *o = s;
                }
                out
            }
        }
    }

    #[inline]
    pub fn is_flat(&self) -> bool {
        matches!(self, CurvatureAt::Flat)
    }
}

/// Levi-Civita connection frozen at one chart point.
#[derive(Debug, Clone)]
pub enum Connection {
    Flat,
    Conformal { dphi: Vector, n: usize },
    Table { gamma: Vec<f64>, n: usize },
}

impl Connection {
    /// `Gamma(a, b)`.
    #[inline]
    pub fn contract(&self, a: &Vector, b: &Vector) -> Vector {
        match self {
            Connection::Flat => ZERO,
            Connection::Conformal { dphi, n } => {
                let bd = linalg::dot(b, dphi);
                let ad = linalg::dot(a, dphi);
                let ab = linalg::dot(a, b);
                let mut r = ZERO;
                for k in 0..*n {
                    r[k] = a[k] * bd + b[k] * ad - ab * dphi[k];
                }
                r
            }
            Connection::Table { gamma, n } => contract_christoffel(gamma, *n, a, b),
        }
    }

    #[inline]
    pub fn is_flat(&self) -> bool {
        matches!(self, Connection::Flat)
    }
}

#[inline]
pub(crate) fn contract_christoffel(gam: &[f64], n: usize, a: &Vector, b: &Vector) -> Vector {
    let mut r = ZERO;
    for k in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                s += gam[k * n * n + i * n + j] * a[i] * b[j];
            }
        }
        r[k] = s;
    }
    r
}
