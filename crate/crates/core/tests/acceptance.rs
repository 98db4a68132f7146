//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore_core::analysis::{
    concentration, lifespan_bound, lifespan_precondition, michael_simon_check, monotonicity_check,
    negative_curvature_area_bound, AnalysisError, CenterSet, LifespanBound,
};
use willmore_core::blowup::{
    increasing_tail, max_curvature_samples, normal_coordinates, rescale, type2_indicator,
    BlowupSpec, Sample,
};
use willmore_core::flow::{
    self, area_holder_check, dissipation_check, DiagnosticsRecord, DtPolicy, FlowConfig, FlowRun,
    Scheme,
};
use willmore_core::linalg::{self, from_slice};
use willmore_core::willmore::{gradient, gradient_pairing_check, l2_pairing};
use willmore_core::{
    compute_geometry, energies, scenarios, GeometryCache, ImmersionField, TerminalStatus, Vector,
};

/// Builds a test surface at grid size `n`.
type Maker = fn(usize) -> ImmersionField;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn geometry(f: &ImmersionField) -> GeometryCache {
    compute_geometry(f).expect("valid immersion")
}

fn torus(n: usize) -> ImmersionField {
    scenarios::torus_r3(2.0, 1.0, n, n).unwrap()
}

/// Stabilized torus flow used by the convergence, mass and lifespan criteria.
fn torus_flow_config() -> FlowConfig {
    FlowConfig {
        dt_policy: DtPolicy::Fixed(2e-3),
        scheme: Scheme::Stabilized { strength: 1.0 },
        max_steps: 3000,
        convergence_tol: 3.0,
        ..FlowConfig::default()
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let e = energies(&geometry(&scenarios::round_sphere_r3(1.0, 64).unwrap())).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = rel(e.w_h, 8.0 * PI);
    let id = e.identity_residual / e.w_h;
    outcome(
        err < 0.01 && e.w_circ <= 1e-3 && id <= 0.01 && secs < 10.0,
        format!(
            "W_H rel err {err:.2e}, W_circ {:.2e}, identity residual {id:.2e} W_H, {secs:.2}s",
            e.w_circ
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = energies(&geometry(&scenarios::round_sphere_r3(1.0, 64).unwrap())).unwrap();
    let t = energies(&geometry(&torus(96))).unwrap();
    let es = rel(s.int_k, 4.0 * PI);
    outcome(
        es < 0.01 && t.int_k.abs() < 0.1,
        format!("sphere int K rel err {es:.2e}, torus int K {:.2e}", t.int_k),
    )
}

fn criterion_3() -> Outcome {
    let cases: [(&str, Maker); 3] = [
        ("sphere-R3", |n| scenarios::round_sphere_r3(1.0, n).unwrap()),
        ("torus-R3", |n| torus(n)),
        ("sphere-S3", |n| {
            scenarios::chart_ellipsoid_s3(1.0, [0.5, 0.4, 0.3], n).unwrap()
        }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, make) in cases {
        let coarse = geometry(&make(32)).gauss_residual();
        let fine = geometry(&make(64)).gauss_residual();
        let ratio = coarse / fine;
        pass &= ratio >= 3.0;
        parts.push(format!("{name} {coarse:.2e}->{fine:.2e} ({ratio:.1}x)"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let f = torus(96);
    let c = geometry(&f);
    let w = gradient(&c);
    let normal: Vec<Vector> = c
        .nodes()
        .iter()
        .map(|nd| linalg::scale(&nd.h, 1.0 / nd.normsq_h.sqrt().max(1e-300)))
        .collect();
    let s = f.surface().clone();
    let bent: Vec<Vector> = normal
        .iter()
        .enumerate()
        .map(|(k, nu)| linalg::scale(nu, s.coord(k).1.cos()))
        .collect();
    let h: Vec<Vector> = c.nodes().iter().map(|nd| nd.h).collect();
    let mut worst: f64 = 0.0;
    for phi in [&w, &normal, &bent, &h] {
        worst = worst.max(gradient_pairing_check(&f, phi, 1e-5).unwrap().rel_err);
    }
    let norms: Vec<f64> = [48, 96]
        .iter()
        .map(|&n| {
            let c = geometry(&scenarios::clifford_torus_r3(1.0, n, n).unwrap());
            let w = gradient(&c);
            l2_pairing(&c, &w, &w).sqrt()
        })
        .collect();
    let ratio = norms[0] / norms[1];
    outcome(
        worst < 0.02 && ratio >= 3.0,
        format!("worst pairing rel err {worst:.2e} over 4 directions, Clifford ||W|| {:.2e}->{:.2e} ({ratio:.1}x)", norms[0], norms[1]),
    )
}

fn criterion_5() -> Outcome {
    let residual = |dt: f64, steps: usize| {
        let cfg = FlowConfig {
            dt_policy: DtPolicy::Fixed(dt),
            scheme: Scheme::Stabilized { strength: 1.0 },
            max_steps: steps,
            stop_when_converged: false,
            ..FlowConfig::default()
        };
        let run = flow::run(torus(96), &cfg).unwrap();
        (
            dissipation_check(run.history(), cfg.convergence_tol).unwrap(),
            run.history().len() - 1,
        )
    };
    let (a, na) = residual(1e-3, 200);
    let (b, nb) = residual(5e-4, 400);
    let ratio = a / b;
    outcome(
        na == 200 && nb == 400 && a < 0.1 && ratio >= 1.5,
        format!(
            "max residual {a:.2e} ({na} steps at dt 1e-3), {b:.2e} at dt 5e-4, ratio {ratio:.2}"
        ),
    )
}

fn criterion_6(run: &FlowRun, secs: f64) -> Outcome {
    let w = run.state.energy.w_h;
    let err = rel(w, 4.0 * PI * PI);
    let singular = matches!(run.status, TerminalStatus::Singular { .. });
    outcome(
        err < 0.02 && !singular && secs < 600.0,
        format!(
            "W_H {w:.5} vs 4pi^2 {:.5} (rel err {err:.2e}) after {} steps, status {:?}, {secs:.0}s",
            4.0 * PI * PI,
            run.state.step,
            run.status
        ),
    )
}

fn holder_ok(h: &[DiagnosticsRecord], w0: f64, area0: f64) -> (bool, f64) {
    let Some(r) = area_holder_check(h, w0) else {
        return (false, f64::NAN);
    };
    let m = r.worst_margin.min(r.finite_time_margin);
    (m >= -1e-6 * area0, m)
}

fn criterion_7(runs: &[(&str, &FlowRun)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in runs {
        let (ok, m) = holder_ok(run.history(), run.state.w0, run.state.area0);
        pass &= ok && run.history().len() >= 2;
        parts.push(format!("{name} {m:.2e} ({} records)", run.history().len()));
    }
    // negative control on the torus history
    let (_, torus_run) = runs[0];
    let mut faulty = torus_run.history().to_vec();
    for r in faulty.iter_mut().skip(1) {
        r.area *= 2.0;
    }
    let (bad_ok, bad_m) = holder_ok(&faulty, torus_run.state.w0, torus_run.state.area0);
    pass &= !bad_ok;
    parts.push(format!("injected fault margin {bad_m:.2e} detected"));
    outcome(pass, format!("worst margins: {}", parts.join(", ")))
}

fn hyperbolic_run() -> FlowRun {
    let f = scenarios::sphere_h3(1.0, 0.3, 0.2, 48).unwrap();
    let cfg = FlowConfig {
        max_steps: 300,
        stop_when_converged: false,
        ..FlowConfig::default()
    };
    flow::run(f, &cfg).unwrap()
}

fn criterion_8(run: &FlowRun) -> Outcome {
    let bound = negative_curvature_area_bound(run.state.w0, 2, 1.0);
    let worst = run.history().iter().map(|r| r.area).fold(0.0, f64::max);
    let h = run.history();
    outcome(
        worst <= bound && h.len() > 1,
        format!(
            "max area {worst:.6} <= bound {bound:.6} over {} records (t = {:.2e})",
            h.len(),
            h.last().unwrap().t
        ),
    )
}

/// `(1 - (d / w)^2)^3` inside the ball, zero outside.
fn bump(c: &GeometryCache, center: &Vector, width: f64) -> Vec<f64> {
    c.nodes()
        .iter()
        .map(|nd| {
            let d = c
                .ambient()
                .geodesic_distance(center, &nd.f)
                .unwrap_or(f64::INFINITY);
            let s = 1.0 - (d / width).powi(2);
            if s > 0.0 {
                s.powi(3)
            } else {
                0.0
            }
        })
        .collect()
}

fn random_node_images(c: &GeometryCache, count: usize, seed: u64) -> Vec<Vector> {
    let nodes: Vec<usize> = c.quadrature_nodes().map(|(k, _)| k).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| c.node(nodes[rng.random_range(0..nodes.len())]).f)
        .collect()
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, f) in [
        ("sphere", scenarios::round_sphere_r3(1.0, 64).unwrap()),
        ("torus", torus(64)),
    ] {
        let c = geometry(&f);
        let centers = random_node_images(&c, 50, if name == "sphere" { 11 } else { 12 });
        for (i, p) in centers.iter().enumerate() {
            // widths from a few grid cells to the size of the surface
            let width = 0.25 * (8.0f64).powf(i as f64 / 49.0);
            let r = michael_simon_check(&c, c.ambient(), &bump(&c, p, width)).unwrap();
            worst = worst.max(r.empirical_c);
            count += 1;
        }
    }
    let g = geometry(&scenarios::geodesic_sphere_s3(1.0, 48).unwrap());
    let ones = vec![1.0; g.len()];
    let ce = michael_simon_check(&g, g.ambient(), &ones).unwrap();
    let fails_without = ce.empirical_c_without_lambda > 2.0;
    let passes_with = ce.empirical_c <= 2.0;
    outcome(
        worst <= 2.0 && fails_without && passes_with,
        format!(
            "max empirical c {worst:.3} over {count} bumps; S^2 in S^3 with u = 1: {:.1} without Lambda, {:.3} with",
            ce.empirical_c_without_lambda, ce.empirical_c
        ),
    )
}

fn criterion_10() -> Outcome {
    let smallness = 100.0;
    let mut worst: f64 = 0.0;
    let mut all_small = true;
    let mut parts = Vec::new();
    for (name, f) in [
        ("sphere-R3", scenarios::round_sphere_r3(1.0, 64).unwrap()),
        ("torus-R3", torus(64)),
        (
            "geodesic-S2-in-S3",
            scenarios::geodesic_sphere_s3(1.0, 64).unwrap(),
        ),
    ] {
        let c = geometry(&f);
        let mut local: f64 = 0.0;
        for p in random_node_images(&c, 20, 21) {
            let r = monotonicity_check(&c, c.ambient(), &p, 0.2, 0.5, smallness).unwrap();
            all_small &= r.smallness_ok;
            local = local.max(r.empirical_c);
        }
        worst = worst.max(local);
        parts.push(format!("{name} {local:.3}"));
    }
    // plane-like patches: small radii on a finely resolved unit sphere
    let fine = geometry(&scenarios::round_sphere_r3(1.0, 256).unwrap());
    let mut flat: f64 = 0.0;
    for p in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
        let r = monotonicity_check(&fine, fine.ambient(), &from_slice(&p), 0.1, 0.2, smallness)
            .unwrap();
        flat = flat.max(r.empirical_c);
    }
    outcome(
        worst <= 100.0 && all_small && flat <= 1.2,
        format!(
            "max empirical C: {}; flat-patch {flat:.3}",
            parts.join(", ")
        ),
    )
}

fn criterion_11() -> Outcome {
    let times: Vec<f64> = (0..15).map(|k| 1.0 - 2f64.powf(-0.5 * k as f64)).collect();
    let traj: Vec<Sample> = times
        .iter()
        .map(|&t| Sample {
            t,
            field: scenarios::shrinking_sphere(t, 32).unwrap(),
        })
        .collect();
    let mut chi_err: f64 = 0.0;
    let mut sphere_err: f64 = 0.0;
    let mut wh_err: f64 = 0.0;
    for (i, s) in traj.iter().enumerate() {
        let spec = BlowupSpec {
            t_j: s.t,
            r_j: (1.0 - s.t).sqrt(),
            p_j: vec![0.0; 3],
            chi: 0.0,
            sample: i,
        };
        let states = rescale(&traj, &spec, -1e-9, 1e-9).unwrap();
        let src = geometry(&s.field);
        let src_wh = energies(&src).unwrap().w_h;
        for st in &states {
            let y = normal_coordinates(&st.field, &spec.center());
            sphere_err = sphere_err.max(
                y.iter()
                    .map(|p| (linalg::norm(p) - 1.0).abs())
                    .fold(0.0, f64::max),
            );
            wh_err = wh_err.max(rel(st.w_h, src_wh));
            let resc = geometry(&st.field);
            for rho in [0.5, 1.0, 1.7] {
                let a = concentration(&resc, resc.ambient(), rho, &CenterSet::AllNodes).chi;
                let b =
                    concentration(&src, src.ambient(), spec.r_j * rho, &CenterSet::AllNodes).chi;
                chi_err = chi_err.max((a - b).abs() / b.max(1.0));
            }
        }
    }
    let samples = max_curvature_samples(&traj).unwrap();
    let ind = type2_indicator(&samples, 1.0).unwrap();
    let diverging = increasing_tail(&ind, 10);
    outcome(
        chi_err <= 1e-10 && sphere_err <= 1e-8 && wh_err <= 1e-10 && diverging,
        format!(
            "chi scaling {chi_err:.1e}, unit-sphere {sphere_err:.1e}, W_H {wh_err:.1e}, indicator {:.2}->{:.2} increasing over last 10: {diverging}",
            ind[ind.len() - 10],
            ind[ind.len() - 1]
        ),
    )
}

fn criterion_12(run: &FlowRun, cfg: &FlowConfig) -> Outcome {
    let (c, eps0sq) = (1e-2, 1e-2);
    let h = run.history();
    let first = &h[0];
    let crossing = h.iter().find(|r| r.chi_value >= eps0sq).map(|r| r.t);
    let f0 = torus(96);
    let bounds = f0.ambient().bounds().clone();
    let pre = lifespan_precondition(&bounds, cfg.chi_radius, 100.0);
    let bound = lifespan_bound(
        first.chi_value,
        cfg.chi_radius,
        bounds.sup_dr,
        first.area,
        first.w_h,
        c,
        eps0sq,
    );
    let (pass, what) = match (bound, crossing) {
        (Err(AnalysisError::VacuousBound { log_arg }), _) => {
            (true, format!("vacuous (log argument {log_arg:.2e})"))
        }
        (Ok(LifespanBound::Finite(t)), Some(tc)) => {
            (t <= tc, format!("bound {t:.3e} vs crossing {tc:.3e}"))
        }
        (Ok(LifespanBound::Finite(t)), None) => {
            (true, format!("bound {t:.3e}, no crossing observed"))
        }
        (Ok(LifespanBound::Unbounded), None) => (true, "unbounded, no crossing".to_string()),
        (Ok(LifespanBound::Unbounded), Some(tc)) => {
            (false, format!("unbounded but crossed at {tc:.3e}"))
        }
        (Err(e), _) => (false, e.to_string()),
    };
    outcome(
        pass,
        format!(
            "chi(0) = {:.3e} at rho {}, {what}; smallness rho*Lambda = {:.2e} (ok: {})",
            first.chi_value, cfg.chi_radius, pre.value, pre.satisfied
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {:<4} {name}: {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o, secs));
    };

    record(1, "round-sphere energies", &mut criterion_1);
    record(2, "Gauss-Bonnet", &mut criterion_2);
    record(3, "Gauss-equation residual", &mut criterion_3);
    record(4, "gradient consistency", &mut criterion_4);
    record(5, "dissipation identity", &mut criterion_5);

    let cfg = torus_flow_config();
    let start = Instant::now();
    let torus_run = flow::run(torus(96), &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    record(6, "flow convergence", &mut || criterion_6(&torus_run, secs));

    let hyper = hyperbolic_run();
    let short = |f: ImmersionField| {
        let c = FlowConfig {
            max_steps: 20,
            stop_when_converged: false,
            ..FlowConfig::default()
        };
        flow::run(f, &c).unwrap()
    };
    let sphere = short(scenarios::round_sphere_r3(1.0, 48).unwrap());
    let clifford = short(scenarios::clifford_torus_r3(1.0, 48, 48).unwrap());
    let great = short(scenarios::geodesic_sphere_s3(1.0, 32).unwrap());
    let runs = [
        ("torus_r3", &torus_run),
        ("sphere_r3", &sphere),
        ("clifford_torus_r3", &clifford),
        ("geodesic_sphere_s3", &great),
        ("sphere_h3", &hyper),
    ];
    record(7, "area Hoelder and finite-time mass bound", &mut || {
        criterion_7(&runs)
    });
    record(8, "hyperbolic area bound", &mut || criterion_8(&hyper));
    record(9, "Michael-Simon verifier", &mut criterion_9);
    record(10, "monotonicity formula", &mut criterion_10);
    record(11, "blow-up mechanics", &mut criterion_11);
    record(12, "lifespan bound sanity", &mut || {
        criterion_12(&torus_run, &cfg)
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
