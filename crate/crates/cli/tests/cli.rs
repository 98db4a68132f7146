use std::fs;
use std::path::Path;
use std::process::Command;

use willmore_cli::commands::{self, BLOWUP, DIAGNOSTICS, SNAPSHOTS, SUMMARY};
use willmore_cli::config::RunConfig;
use willmore_core::TerminalStatus;

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text, Path::new("test.toml")).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_willmore"))
}

const SINGULAR: &str =
    "[scenario]\nname = \"torus_r3\"\nmajor = 2.0\nminor = 1.0\n[grid]\nn = 24\n\
    [flow]\nscheme = \"stabilized\"\ndt_policy = \"fixed\"\ndt = 2e-3\nmax_steps = 400\n\
    snapshot_every = 10\nsingularity_a_max = 1.9\n[verify]\nmonotonicity = false\n\
    michael_simon = false\nsobolev = false\nmass_density = false\n";

#[test]
fn round_sphere_converges_to_eight_pi() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[scenario]\nname = \"sphere_r3\"\n[grid]\nn = 64\n[flow]\nmax_steps = 50\n");
    let s = commands::run(&c, dir.path()).unwrap();
    assert_eq!(s.status, TerminalStatus::Converged);
    let w = s.final_energy.w_h;
    assert!((w / (8.0 * std::f64::consts::PI) - 1.0).abs() < 0.01, "{w}");
    assert!(s.verifiers_pass);
    for f in [DIAGNOSTICS, SUMMARY] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(dir
        .path()
        .join(SNAPSHOTS)
        .join(commands::snapshot_name(0))
        .is_file());
}

#[test]
fn reruns_are_byte_identical() {
    let text =
        "seed = 7\n[scenario]\nname = \"torus_r3\"\nmajor = 2.0\nminor = 1.0\n[grid]\nn = 24\n\
                [perturbation]\namplitude = 0.01\n[flow]\nmax_steps = 15\nsnapshot_every = 5\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    commands::run(&cfg(text), a.path()).unwrap();
    commands::run(&cfg(text), b.path()).unwrap();
    let read = |d: &Path| fs::read(d.join(DIAGNOSTICS)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let snap = |d: &Path| fs::read(d.join(SNAPSHOTS).join(commands::snapshot_name(15))).unwrap();
    assert_eq!(snap(a.path()), snap(b.path()));
    let rows = fs::read_to_string(a.path().join(DIAGNOSTICS))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 17);
}

#[test]
fn bad_configs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "[scenario]\nname = \"sphere_r3\"\nradius = 1.0\nradiuss = 2.0\n",
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("radiuss") && err.contains("line 4"), "{err}");

    fs::write(&path, "[scenario]\nname = \"sphere_r3\"\n[grid]\nn = 2\n").unwrap();
    let out = bin().arg("verify").arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 8"));

    let out = bin()
        .arg("run")
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn verify_writes_a_summary_without_flowing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(
        &path,
        "[scenario]\nname = \"sphere_h3\"\nrho = 0.3\naniso = 0.2\n[grid]\nn = 48\n",
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let out = bin()
        .arg("verify")
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--threads")
        .arg("2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join(SUMMARY)).unwrap()).unwrap();
    assert_eq!(v["steps"], 0);
    assert!(v.get("flow").is_none());
    assert!(v["verifiers"]["monotonicity"].is_object());
    assert!(v["verifiers"]["kappabound"].is_object());
    assert!(!out_dir.join(DIAGNOSTICS).exists());
}

#[test]
fn blowup_reads_a_singular_history() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, SINGULAR).unwrap();
    let run_dir = dir.path().join("run");
    let out = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(run_dir.join(SUMMARY)).unwrap()).unwrap();
    assert_eq!(v["status"]["status"], "Singular", "{}", v["status"]);
    assert!(v["blowup"].is_object());

    let out = bin()
        .arg("blowup")
        .arg(&path)
        .arg("--history")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let b: serde_json::Value =
        serde_json::from_slice(&fs::read(run_dir.join(BLOWUP)).unwrap()).unwrap();
    let t_est = v["status"]["t"].as_f64().unwrap();
    assert_eq!(b["t_est"].as_f64().unwrap(), t_est);
    let specs = b["specs"].as_array().unwrap();
    assert!(!specs.is_empty());
    let r = specs.last().unwrap()["r_j"].as_f64().unwrap();
    assert_eq!(b["metric_scale"].as_f64().unwrap(), r.powi(-2));
    let rescaled = fs::read_dir(run_dir.join("rescaled")).unwrap().count();
    assert_eq!(rescaled, b["rescaled"].as_array().unwrap().len());
    let head =
        fs::read_to_string(run_dir.join("rescaled").join(commands::snapshot_name(0))).unwrap();
    assert!(
        head.contains(&format!("# metric_scale {}", r.powi(-2))),
        "{head}"
    );
}

#[test]
fn blowup_needs_a_singular_time() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[scenario]\nname = \"sphere_r3\"\n[grid]\nn = 32\n[flow]\nmax_steps = 0\n");
    commands::run(&c, dir.path()).unwrap();
    let err = commands::blowup(&c, dir.path(), dir.path()).unwrap_err();
    assert!(err.to_string().contains("t_est"), "{err}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 3);
}
