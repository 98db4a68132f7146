//! Quadrature and differential operators on a geometry cache.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{self, KahanSum, Vector, ZERO};

use super::geometry::{sym, GeometryCache, Stencil, LEVEL_CURVATURE, LEVEL_FORMS, LEVEL_GAMMA};
use super::SurfaceError;

/// `sum_nodes weight * field * area_el` over nodes carrying quadrature weight.
pub fn integrate_scalar(cache: &GeometryCache, field: &[f64]) -> Result<f64, SurfaceError> {
    let mut acc = KahanSum::default();
    for (k, w) in cache.quadrature_nodes() {
        let v = field[k];
        if !v.is_finite() {
            return Err(SurfaceError::NonFiniteValue { node: k });
        }
        acc.add(w * v * cache.node(k).area_el);
    }
    Ok(acc.value())
}

/// Coordinate gradient `(d_u u, d_v u)` of a nodal scalar (zero where the
/// stencil does not fit).
pub fn gradient_of_scalar(cache: &GeometryCache, u: &[f64]) -> Vec<[f64; 2]> {
    let s = cache.surface();
    (0..s.len())
        .map(|k| {
            if s.depth(k) < 1 {
                return [0.0; 2];
            }
            let st = Stencil::at(s, k).expect("depth >= 1");
            let (hu, hv) = s.spacing(k);
            st.first_scalar(u, hu, hv)
        })
        .collect()
}

fn check_normal(cache: &GeometryCache, phi: &[Vector]) -> Result<(), SurfaceError> {
    let n = cache.dim();
    let mut scale: f64 = 0.0;
    for (k, nd) in cache.nodes().iter().enumerate() {
        if nd.level >= LEVEL_FORMS {
            scale = scale.max(nd.inner(&phi[k], &phi[k], n).sqrt());
        }
    }
    for (k, nd) in cache.nodes().iter().enumerate() {
        if nd.level < LEVEL_FORMS {
            continue;
        }
        if !linalg::is_finite(&phi[k]) {
            return Err(SurfaceError::NonFiniteValue { node: k });
        }
        let t = nd.tangential(&phi[k], n);
        let tn = nd.inner(&t, &t, n).sqrt();
        if tn > 1e-8 * scale {
            return Err(SurfaceError::NotNormal {
                node: k,
                tangential: tn,
            });
        }
    }
    Ok(())
}

/// Normal Laplacian `g~^ij (nabla^2 phi)(d_i, d_j)` of a normal field.
///
/// With `Y_j = Gamma(d_j f, phi)` the ambient derivative is
/// `D_i D_j phi = d_i d_j phi + d_i Y_j + Gamma(d_i f, d_j phi + Y_j)`, and
/// `nabla_i nabla_j phi = P^perp D_i D_j phi + g~^kl <phi, A_jk> A_il`.
/// Valid on nodes two rings inside the chart; zero elsewhere.
pub fn normal_laplacian(
    cache: &GeometryCache,
    phi: &[Vector],
) -> Result<Vec<Vector>, SurfaceError> {
    check_normal(cache, phi)?;
    Ok(normal_laplacian_unchecked(cache, phi))
}

pub(crate) fn normal_laplacian_unchecked(cache: &GeometryCache, phi: &[Vector]) -> Vec<Vector> {
    let s = cache.surface();
    let amb = cache.ambient();
    let n = cache.dim();
    let flat = amb.is_flat();
    let nodes = cache.nodes();
    // Y_j = Gamma(d_j f, phi) at every node with forms
    let ys: Vec<[Vector; 2]> = if flat {
        Vec::new()
    } else {
        nodes
            .par_iter()
            .enumerate()
            .map(|(k, nd)| {
                if nd.level < LEVEL_FORMS {
                    return [ZERO; 2];
                }
                let conn = amb.connection(&nd.f);
                [
                    conn.contract(&nd.df[0], &phi[k]),
                    conn.contract(&nd.df[1], &phi[k]),
                ]
            })
            .collect()
    };
    (0..s.len())
        .into_par_iter()
        .map(|k| {
            let nd = &nodes[k];
            if nd.level < LEVEL_GAMMA || s.depth(k) < 2 {
                return ZERO;
            }
            let st = Stencil::at(s, k).expect("depth >= 2");
            let (hu, hv) = s.spacing(k);
            let d1 = st.first(phi, hu, hv);
            let d2 = st.second(phi, k, hu, hv);
            // dd[i][j] = D_i D_j phi, nab[k] = nabla_k phi (unprojected)
            let mut dd = [[ZERO; 2]; 2];
            let mut nab = d1;
            if flat {
                for i in 0..2 {
                    for j in 0..2 {
                        dd[i][j] = d2[sym(i, j)];
                    }
                }
            } else {
                let conn = amb.connection(&nd.f);
                let y = ys[k];
                let dy = |i: usize, j: usize| -> Vector {
                    let (p, m, h) = if i == 0 {
                        (st.up, st.um, hu)
                    } else {
                        (st.vp, st.vm, hv)
                    };
                    linalg::scale(&linalg::sub(&ys[p][j], &ys[m][j]), 0.5 / h)
                };
                for j in 0..2 {
                    nab[j] = linalg::add(&d1[j], &y[j]);
                }
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = linalg::add(&d2[sym(i, j)], &dy(i, j));
                        v = linalg::add(&v, &conn.contract(&nd.df[i], &nab[j]));
                        dd[i][j] = v;
                    }
                }
            }
            let gi = nd.gtil_inv;
            let mut out = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    linalg::axpy(&mut out, gi[i][j], &dd[i][j]);
                }
            }
            out = nd.perp(&out, n);
            for ea in 0..2 {
                for eb in 0..2 {
                    let aab = nd.in_frame(&nd.a, ea, eb);
                    linalg::axpy(&mut out, nd.inner(&phi[k], &aab, n), &aab);
                }
            }
            let mut trace_gamma = [0.0; 2];
            for (kk, tg) in trace_gamma.iter_mut().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        *tg += gi[i][j] * nd.gamma_til[kk][i][j];
                    }
                }
            }
            for kk in 0..2 {
                let nk = nd.perp(&nab[kk], n);
                linalg::axpy(&mut out, -trace_gamma[kk], &nk);
            }
            nd.perp(&out, n)
        })
        .collect()
}

/// Residual of the Simons identity in a flat ambient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimonsResidual {
    /// Largest pointwise frame norm of the residual tensor.
    pub sup: f64,
    /// `int |residual| dmu`.
    pub integral: f64,
    /// `sup |A|^3`, the natural magnitude of the cubic terms.
    pub cubic_scale: f64,
}

/// `(nabla A)_k,ij` and `(nabla H)_k` at one node.
type FirstDerivatives = ([[Vector; 3]; 2], [Vector; 2]);

/// Pointwise defect of
///
/// ```text
/// Delta A_XY = nabla^2 H(X,Y) + 2 K A_XY - K g_XY H
///     + g^pq g^rs A_pr <A_qX, A_sY> - g^pq g^rs A_pX <A_qr, A_sY>
/// ```
///
/// for surfaces in Euclidean space, from nested central differences. In a
/// curved ambient the curvature terms are not included, so the value is only
/// a proxy there.
pub fn simons_residual(cache: &GeometryCache) -> SimonsResidual {
    let s = cache.surface();
    let n = cache.dim();
    let nodes = cache.nodes();
    // first covariant derivatives: (nabla A)_k,ij and (nabla H)_k at depth >= 2
    let first: Vec<Option<FirstDerivatives>> = (0..s.len())
        .into_par_iter()
        .map(|k| {
            let nd = &nodes[k];
            if nd.level < LEVEL_GAMMA || s.depth(k) < 2 {
                return None;
            }
            let st = Stencil::at(s, k)?;
            let (hu, hv) = s.spacing(k);
            let mut na = [[ZERO; 3]; 2];
            for c in 0..3 {
                let field: [Vector; 2] = [
                    linalg::scale(
                        &linalg::sub(&nodes[st.up].a[c], &nodes[st.um].a[c]),
                        0.5 / hu,
                    ),
                    linalg::scale(
                        &linalg::sub(&nodes[st.vp].a[c], &nodes[st.vm].a[c]),
                        0.5 / hv,
                    ),
                ];
                for kk in 0..2 {
                    na[kk][c] = nd.perp(&field[kk], n);
                }
            }
            for kk in 0..2 {
                let mut out = [ZERO; 3];
                for i in 0..2 {
                    for j in i..2 {
                        let mut v = na[kk][sym(i, j)];
                        for l in 0..2 {
                            linalg::axpy(&mut v, -nd.gamma_til[l][kk][i], &nd.a[sym(l, j)]);
                            linalg::axpy(&mut v, -nd.gamma_til[l][kk][j], &nd.a[sym(i, l)]);
                        }
                        out[sym(i, j)] = v;
                    }
                }
                na[kk] = out;
            }
            let nh = [
                nd.perp(
                    &linalg::scale(&linalg::sub(&nodes[st.up].h, &nodes[st.um].h), 0.5 / hu),
                    n,
                ),
                nd.perp(
                    &linalg::scale(&linalg::sub(&nodes[st.vp].h, &nodes[st.vm].h), 0.5 / hv),
                    n,
                ),
            ];
            Some((na, nh))
        })
        .collect();

    let per_node: Vec<Option<f64>> = (0..s.len())
        .into_par_iter()
        .map(|k| {
            let nd = &nodes[k];
            if nd.level < LEVEL_CURVATURE || s.depth(k) < 3 || s.weight(k) <= 0.0 {
                return None;
            }
            let st = Stencil::at(s, k)?;
            let (hu, hv) = s.spacing(k);
            let (na, nh) = first[k].as_ref()?;
            let nbr = |m: usize| first[m].as_ref();
            let (up, um, vp, vm) = (nbr(st.up)?, nbr(st.um)?, nbr(st.vp)?, nbr(st.vm)?);
            // d_m of (nabla A)_k,ij and (nabla H)_k
            let d_na = |m: usize, kk: usize, c: usize| -> Vector {
                let (p, q, h) = if m == 0 { (up, um, hu) } else { (vp, vm, hv) };
                nd.perp(
                    &linalg::scale(&linalg::sub(&p.0[kk][c], &q.0[kk][c]), 0.5 / h),
                    n,
                )
            };
            let d_nh = |m: usize, kk: usize| -> Vector {
                let (p, q, h) = if m == 0 { (up, um, hu) } else { (vp, vm, hv) };
                nd.perp(&linalg::scale(&linalg::sub(&p.1[kk], &q.1[kk]), 0.5 / h), n)
            };
            let gam = &nd.gamma_til;
            let gi = nd.gtil_inv;
            let mut lap_a = [ZERO; 3];
            for i in 0..2 {
                for j in i..2 {
                    let mut acc = ZERO;
                    for m in 0..2 {
                        for kk in 0..2 {
                            let c = gi[m][kk];
                            if c == 0.0 {
                                continue;
                            }
                            let mut v = d_na(m, kk, sym(i, j));
                            for l in 0..2 {
                                linalg::axpy(&mut v, -gam[l][m][kk], &na[l][sym(i, j)]);
                                linalg::axpy(&mut v, -gam[l][m][i], &na[kk][sym(l, j)]);
                                linalg::axpy(&mut v, -gam[l][m][j], &na[kk][sym(i, l)]);
                            }
                            linalg::axpy(&mut acc, c, &v);
                        }
                    }
                    lap_a[sym(i, j)] = acc;
                }
            }
            let mut hess_h = [ZERO; 3];
            for i in 0..2 {
                for j in i..2 {
                    // symmetrize the nested difference
                    let mut v = linalg::scale(&linalg::add(&d_nh(i, j), &d_nh(j, i)), 0.5);
                    for l in 0..2 {
                        linalg::axpy(&mut v, -gam[l][i][j], &nh[l]);
                    }
                    hess_h[sym(i, j)] = v;
                }
            }
            // everything in the orthonormal frame from here on
            let af = |p: usize, q: usize| nd.in_frame(&nd.a, p, q);
            let kt = nd.k_til;
            let mut worst = 0.0;
            for x in 0..2 {
                for y in 0..2 {
                    let mut r =
                        linalg::sub(&nd.in_frame(&lap_a, x, y), &nd.in_frame(&hess_h, x, y));
                    linalg::axpy(&mut r, -2.0 * kt, &af(x, y));
                    if x == y {
                        linalg::axpy(&mut r, kt, &nd.h);
                    }
                    for p in 0..2 {
                        for q in 0..2 {
                            linalg::axpy(&mut r, -nd.inner(&af(p, x), &af(q, y), n), &af(p, q));
                            linalg::axpy(&mut r, nd.inner(&af(p, q), &af(q, y), n), &af(p, x));
                        }
                    }
                    worst += nd.inner(&r, &r, n);
                }
            }
            Some(worst.sqrt())
        })
        .collect();

    let mut sup: f64 = 0.0;
    let mut integral = KahanSum::default();
    let mut cubic: f64 = 0.0;
    for (k, v) in per_node.iter().enumerate() {
        if let Some(v) = v {
            sup = sup.max(*v);
            integral.add(s.weight(k) * v * nodes[k].area_el);
            cubic = cubic.max(nodes[k].normsq_a.powf(1.5));
        }
    }
    SimonsResidual {
        sup,
        integral: integral.value(),
        cubic_scale: cubic,
    }
}
