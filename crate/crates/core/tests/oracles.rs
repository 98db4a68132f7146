//! Discrete geometry against closed forms and independent quadratures.

use std::f64::consts::PI;
use std::sync::Arc;

use willmore_core::linalg::{self, from_slice};
use willmore_core::scenarios;
use willmore_core::surface::{
    normal_laplacian, simons_residual, ImmersionField, SurfaceError, LEVEL_CURVATURE,
};
use willmore_core::willmore::{gradient, gradient_pairing_check, l2_pairing, project_normal};
use willmore_core::{
    compute_geometry, energies, AmbientManifold, BoundedGeometry, GeometryCache, Vector,
};

/// Builds a test surface at grid size `n`.
type Maker = fn(usize) -> ImmersionField;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Periodic trapezoid rule on `[0, 2 pi)`, spectrally accurate.
fn periodic_quad(m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

/// `W_H` of the torus of revolution by direct quadrature of the principal
/// curvatures `1/r` and `cos v / (R + r cos v)`.
fn torus_w_h(big: f64, small: f64) -> f64 {
    let inner = periodic_quad(4096, |v| {
        let rho = big + small * v.cos();
        let h = 1.0 / small + v.cos() / rho;
        h * h * small * rho
    });
    0.5 * 2.0 * PI * inner
}

fn max_curvature_errors(cache: &GeometryCache, exact: impl Fn(usize) -> (f64, f64)) -> (f64, f64) {
    let mut ek: f64 = 0.0;
    let mut eh: f64 = 0.0;
    for (k, _) in cache.quadrature_nodes() {
        let nd = cache.node(k);
        if nd.level < LEVEL_CURVATURE {
            continue;
        }
        let (kk, hh) = exact(k);
        ek = ek.max((nd.k_til - kk).abs());
        eh = eh.max((nd.normsq_h - hh).abs());
    }
    (ek, eh)
}

#[test]
fn round_sphere_energies() {
    let f = scenarios::round_sphere_r3(1.0, 48).unwrap();
    let c = compute_geometry(&f).unwrap();
    let e = energies(&c).unwrap();
    assert!(rel(e.w_h, 8.0 * PI) < 1e-2, "W_H {}", e.w_h);
    assert!(rel(e.w_a, 4.0 * PI) < 1e-2, "W_A {}", e.w_a);
    assert!(e.w_circ < 1e-2);
    assert!(rel(e.area, 4.0 * PI) < 1e-2);
    assert!(rel(e.int_k, 4.0 * PI) < 1e-2);
    assert_eq!(e.euler_char, 2);
}

#[test]
fn energies_are_scale_invariant() {
    let a = energies(&compute_geometry(&scenarios::round_sphere_r3(1.0, 32).unwrap()).unwrap())
        .unwrap();
    let b = energies(&compute_geometry(&scenarios::round_sphere_r3(3.0, 32).unwrap()).unwrap())
        .unwrap();
    assert!(rel(b.w_h, a.w_h) < 1e-10);
    assert!(rel(b.area, 9.0 * a.area) < 1e-10);
}

#[test]
fn torus_energies_match_quadrature() {
    for (big, small) in [(2.0, 1.0), (std::f64::consts::SQRT_2, 1.0), (3.0, 0.5)] {
        let f = scenarios::torus_r3(big, small, 96, 96).unwrap();
        let e = energies(&compute_geometry(&f).unwrap()).unwrap();
        let oracle = torus_w_h(big, small);
        assert!(
            rel(e.w_h, oracle) < 5e-3,
            "R={big} r={small}: {} vs {oracle}",
            e.w_h
        );
        // W_A = W_H on tori in flat space since int K = 0
        assert!(rel(e.w_a, oracle) < 5e-3);
        assert!(rel(e.area, 4.0 * PI * PI * big * small) < 5e-3);
        assert!(e.int_k.abs() < 0.05);
    }
    // closed form at a = 2 and a = sqrt(2)
    let closed = |a: f64| 2.0 * PI * PI * a * a / (a * a - 1.0).sqrt();
    assert!(rel(torus_w_h(2.0, 1.0), closed(2.0)) < 1e-12);
    assert!(rel(torus_w_h(2f64.sqrt(), 1.0), 4.0 * PI * PI) < 1e-12);
}

#[test]
fn torus_pointwise_curvatures_converge() {
    let errs: Vec<(f64, f64)> = [32, 64]
        .iter()
        .map(|&n| {
            let f = scenarios::torus_r3(2.0, 1.0, n, n).unwrap();
            let c = compute_geometry(&f).unwrap();
            let s = f.surface().clone();
            max_curvature_errors(&c, |k| {
                let v = s.coord(k).1;
                let rho = 2.0 + v.cos();
                let h = 1.0 + v.cos() / rho;
                (v.cos() / rho, h * h)
            })
        })
        .collect();
    assert!(errs[1].0 < 2e-2 && errs[1].1 < 2e-2, "{errs:?}");
    assert!(errs[0].0 / errs[1].0 > 3.0, "{errs:?}");
    assert!(errs[0].1 / errs[1].1 > 3.0, "{errs:?}");
}

/// Chart sphere of radius `rho` in the unit `S^3` is a geodesic sphere of
/// radius `s = 2 atan(rho)`: `W_H = 8 pi cos^2 s`, area `4 pi sin^2 s`.
#[test]
fn geodesic_spheres_in_s3() {
    for rho in [0.3, 0.5, 1.0] {
        let f = scenarios::chart_ellipsoid_s3(1.0, [rho; 3], 64).unwrap();
        let e = energies(&compute_geometry(&f).unwrap()).unwrap();
        let s = 2.0 * rho.atan();
        let area = 4.0 * PI * s.sin().powi(2);
        assert!(
            rel(e.area, area) < 1e-2,
            "rho {rho}: area {} vs {area}",
            e.area
        );
        assert!(
            (e.w_h - 8.0 * PI * s.cos().powi(2)).abs() < 1e-2 * 8.0 * PI,
            "rho {rho}: {}",
            e.w_h
        );
        // K(T Sigma) = 1 everywhere
        assert!(rel(e.int_kts, e.area) < 1e-9);
        assert!(e.identity_residual < 2e-2 * 8.0 * PI);
    }
}

/// Chart sphere of radius `rho` in the Poincare ball of curvature -1:
/// `s = 2 artanh(rho)`, `W_H = 8 pi cosh^2 s`, area `4 pi sinh^2 s`.
#[test]
fn geodesic_spheres_in_h3() {
    for rho in [0.2, 0.4] {
        let f = scenarios::sphere_h3(1.0, rho, 0.0, 64).unwrap();
        let e = energies(&compute_geometry(&f).unwrap()).unwrap();
        let s = 2.0 * rho.atanh();
        assert!(rel(e.area, 4.0 * PI * s.sinh().powi(2)) < 1e-2);
        assert!(rel(e.w_h, 8.0 * PI * s.cosh().powi(2)) < 1e-2);
        assert!(rel(e.int_kts, -e.area) < 1e-9);
    }
}

#[test]
fn flat_product_torus_in_r4() {
    let (a, b) = (1.0, 0.6);
    let f = scenarios::product_torus_r4(a, b, 64, 64).unwrap();
    let c = compute_geometry(&f).unwrap();
    let e = energies(&c).unwrap();
    let area = 4.0 * PI * PI * a * b;
    assert!(rel(e.area, area) < 1e-2);
    assert!(rel(e.w_h, 0.5 * area * (1.0 / (a * a) + 1.0 / (b * b))) < 1e-2);
    assert!(e.int_k.abs() < 1e-8);
    // |A|^2 = |H|^2 = 1/a^2 + 1/b^2, so |A°|^2 = |H|^2 / 2 and W_circ = W_H
    assert!(rel(e.w_circ, e.w_h) < 1e-2, "{} vs {}", e.w_circ, e.w_h);
}

/// Geodesic spheres in a space form of curvature `c` have `W = 2 c H`.
#[test]
fn gradient_on_geodesic_spheres() {
    let cases: Vec<(Maker, f64)> = vec![
        (
            |n| scenarios::chart_ellipsoid_s3(1.0, [0.4; 3], n).unwrap(),
            1.0,
        ),
        (|n| scenarios::sphere_h3(1.0, 0.3, 0.0, n).unwrap(), -1.0),
        (|n| scenarios::round_sphere_r3(1.0, n).unwrap(), 0.0),
    ];
    for (make, curv) in cases {
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let c = compute_geometry(&make(n)).unwrap();
                let w = gradient(&c);
                let h: Vec<Vector> = c.nodes().iter().map(|nd| nd.h).collect();
                let diff: Vec<Vector> = w
                    .iter()
                    .zip(&h)
                    .map(|(a, b)| linalg::sub(a, &linalg::scale(b, 2.0 * curv)))
                    .collect();
                l2_pairing(&c, &diff, &diff).sqrt() / l2_pairing(&c, &h, &h).sqrt()
            })
            .collect();
        assert!(
            errs[1] < 0.05 && errs[0] / errs[1] > 3.0,
            "curvature {curv}: {errs:?}"
        );
    }
}

#[test]
fn clifford_torus_is_critical() {
    let norms: Vec<f64> = [48, 96]
        .iter()
        .map(|&n| {
            let c = compute_geometry(&scenarios::clifford_torus_r3(1.0, n, n).unwrap()).unwrap();
            let w = gradient(&c);
            l2_pairing(&c, &w, &w).sqrt()
        })
        .collect();
    assert!(norms[0] / norms[1] > 3.0, "{norms:?}");
    let c = compute_geometry(&scenarios::torus_r3(2.0, 1.0, 48, 48).unwrap()).unwrap();
    let w = gradient(&c);
    assert!(l2_pairing(&c, &w, &w).sqrt() > 10.0 * norms[0]);
}

#[test]
fn normal_laplacian_of_spherical_harmonic() {
    // on the unit sphere Delta (z nu) = -2 z nu, and Delta H = 0
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            let f = scenarios::round_sphere_r3(1.0, n).unwrap();
            let c = compute_geometry(&f).unwrap();
            let raw: Vec<Vector> = c
                .nodes()
                .iter()
                .map(|nd| linalg::scale(&nd.f, nd.f[2]))
                .collect();
            let phi = project_normal(&c, &raw);
            let lap = normal_laplacian(&c, &phi).unwrap();
            let expect: Vec<Vector> = phi.iter().map(|p| linalg::scale(p, -2.0)).collect();
            let d: Vec<Vector> = lap
                .iter()
                .zip(&expect)
                .map(|(a, b)| linalg::sub(a, b))
                .collect();
            let h: Vec<Vector> = c.nodes().iter().map(|nd| nd.h).collect();
            let lh = normal_laplacian(&c, &h).unwrap();
            let e1 = l2_pairing(&c, &d, &d).sqrt();
            let e2 = l2_pairing(&c, &lh, &lh).sqrt();
            e1.max(e2)
        })
        .collect();
    assert!(errs[1] < 0.05, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn normal_laplacian_rejects_tangential_fields() {
    let f = scenarios::torus_r3(2.0, 1.0, 32, 32).unwrap();
    let c = compute_geometry(&f).unwrap();
    let t: Vec<Vector> = c.nodes().iter().map(|nd| nd.df[0]).collect();
    assert!(matches!(
        normal_laplacian(&c, &t),
        Err(SurfaceError::NotNormal { .. })
    ));
}

#[test]
fn simons_identity() {
    // flat product torus satisfies it exactly
    let f = scenarios::product_torus_r4(1.0, 1.0, 32, 32).unwrap();
    let s = simons_residual(&compute_geometry(&f).unwrap());
    assert!(s.sup < 1e-10 * s.cubic_scale, "{s:?}");
    let makers: [fn(usize) -> ImmersionField; 2] = [
        |n| scenarios::torus_r3(2.0, 1.0, n, n).unwrap(),
        |n| scenarios::round_sphere_r3(1.0, n).unwrap(),
    ];
    for make in makers {
        let r: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let s = simons_residual(&compute_geometry(&make(n)).unwrap());
                s.sup / s.cubic_scale
            })
            .collect();
        assert!(r[1] < 0.06 && r[0] / r[1] > 3.0, "{r:?}");
    }
}

#[test]
fn gradient_pairs_with_energy_variation() {
    let f = scenarios::torus_r3(2.0, 1.0, 64, 64).unwrap();
    let c = compute_geometry(&f).unwrap();
    let h: Vec<Vector> = c.nodes().iter().map(|nd| nd.h).collect();
    let p = gradient_pairing_check(&f, &h, 1e-5).unwrap();
    assert!(p.rel_err < 0.05, "{p:?}");
    // curvature terms: anisotropic spheres in S^3 and H^3
    for make in [
        (|n| scenarios::chart_ellipsoid_s3(1.0, [0.5, 0.4, 0.3], n).unwrap())
            as fn(usize) -> ImmersionField,
        |n| scenarios::sphere_h3(1.0, 0.3, 0.2, n).unwrap(),
    ] {
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let f = make(n);
                let c = compute_geometry(&f).unwrap();
                let w = gradient(&c);
                gradient_pairing_check(&f, &w, 1e-6).unwrap().rel_err
            })
            .collect();
        assert!(errs[1] < 0.15 && errs[0] / errs[1] > 3.0, "{errs:?}");
    }
}

#[test]
fn collapsed_immersion_is_degenerate() {
    let amb = Arc::new(AmbientManifold::euclidean(3).unwrap());
    let f = ImmersionField::from_torus_fn(16, 16, amb, |u, _| from_slice(&[u.cos(), u.sin(), 0.0]))
        .unwrap();
    assert!(matches!(
        compute_geometry(&f),
        Err(SurfaceError::DegenerateMetric { .. })
    ));
}

#[test]
fn custom_metric_reproduces_builtin_sphere() {
    let kappa = 1.0;
    let metric = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let l = 2.0 / (1.0 + kappa * kappa * r2);
        let mut m = [[0.0; willmore_core::MAX_DIM]; willmore_core::MAX_DIM];
        for (a, row) in m.iter_mut().enumerate().take(3) {
            row[a] = l * l;
        }
        m
    });
    let bounds = BoundedGeometry::flat(2);
    let custom = Arc::new(AmbientManifold::custom(3, metric, 1e-4, bounds).unwrap());
    let built = scenarios::chart_ellipsoid_s3(1.0, [0.5, 0.4, 0.3], 32).unwrap();
    let other = built.with_ambient(custom);
    let a = energies(&compute_geometry(&built).unwrap()).unwrap();
    let b = energies(&compute_geometry(&other).unwrap()).unwrap();
    assert!(rel(b.w_h, a.w_h) < 1e-5, "{} vs {}", b.w_h, a.w_h);
    assert!(
        rel(b.int_kts, a.int_kts) < 1e-4,
        "{} vs {}",
        b.int_kts,
        a.int_kts
    );
    let cb = compute_geometry(&other).unwrap();
    let ca = compute_geometry(&built).unwrap();
    let wa = gradient(&ca);
    let wb = gradient(&cb);
    let d: Vec<Vector> = wa.iter().zip(&wb).map(|(x, y)| linalg::sub(x, y)).collect();
    assert!(l2_pairing(&ca, &d, &d).sqrt() < 1e-3 * l2_pairing(&ca, &wa, &wa).sqrt());
    // projecting a normal field is the identity
    let p = project_normal(&ca, &wa);
    let d: Vec<Vector> = p.iter().zip(&wa).map(|(x, y)| linalg::sub(x, y)).collect();
    assert!(l2_pairing(&ca, &d, &d).sqrt() < 1e-10 * l2_pairing(&ca, &wa, &wa).sqrt());
}
