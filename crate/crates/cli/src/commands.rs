//! The `run`, `verify` and `blowup` commands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use willmore_core::analysis::CenterSet;
use willmore_core::blowup::{
    self, detect_concentration, rescale, type2_indicator, window_dissipation, BlowupError,
    BlowupSpec, RescaledSummary, Sample,
};
use willmore_core::flow::{
    self, area_holder_check, dissipation_check, variation_identities_check, write_diagnostics_csv,
    AreaHolderReport, FlowConfig, FlowState, TerminalStatus, VariationResiduals,
};
use willmore_core::surface::obj::{read_obj, write_obj};
use willmore_core::surface::{simons_residual, SimonsResidual};
use willmore_core::{compute_geometry, energies, EnergyReport, GeometryCache, ImmersionField};

use crate::config::RunConfig;
use crate::scenario;
use crate::verify::{run_verifiers, VerifierBlocks};

pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const SUMMARY: &str = "summary.json";
pub const SNAPSHOTS: &str = "snapshots";
pub const BLOWUP: &str = "blowup.json";

pub fn snapshot_name(step: usize) -> String {
    format!("step_{step:06}.obj")
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryChecks {
    pub identity_residual: f64,
    pub gauss_residual: f64,
    /// Present for flat ambients only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simons: Option<SimonsResidual>,
    pub max_norm_a: f64,
    pub min_det_gtil: f64,
}

impl GeometryChecks {
    fn of(cache: &GeometryCache, e: &EnergyReport) -> Self {
        GeometryChecks {
            identity_residual: e.identity_residual,
            gauss_residual: cache.gauss_residual(),
            simons: cache.ambient().is_flat().then(|| simons_residual(cache)),
            max_norm_a: cache.max_norm_a(),
            min_det_gtil: cache.min_det(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowChecks {
    /// `None` with fewer than two records.
    pub dissipation_max_residual: Option<f64>,
    pub area_holder: Option<AreaHolderReport>,
    pub area_holder_pass: bool,
    /// Variation identities at the final state with its last step size.
    pub variation: Option<VariationResiduals>,
    pub stationarity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub t_est: f64,
    pub specs: Vec<BlowupSpec>,
    /// Rescaled states around the last (smallest radius) concentration.
    pub rescaled: Vec<RescaledSummary>,
    /// Metric factor `r_j^{-2}` of the rescaled snapshots.
    pub metric_scale: Option<f64>,
    pub window_dissipation: Option<f64>,
    pub type2_indicator: Vec<(f64, f64)>,
    /// Strict increase over the last ten samples.
    pub type2: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: &'static str,
    pub config: RunConfig,
    pub status: TerminalStatus,
    pub steps: usize,
    pub t: f64,
    pub initial_energy: EnergyReport,
    pub final_energy: EnergyReport,
    pub geometry: GeometryChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowChecks>,
    pub verifiers: VerifierBlocks,
    pub verifiers_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupReport>,
}

/// Fields of a previous summary needed by the blow-up command.
#[derive(Debug, Clone, Deserialize)]
struct PriorSummary {
    status: PriorStatus,
}

#[derive(Debug, Clone, Deserialize)]
struct PriorStatus {
    status: String,
    #[serde(default)]
    t: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_snapshot(dir: &Path, field: &ImmersionField, t: f64, step: usize) -> Result<()> {
    let path = dir.join(snapshot_name(step));
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    write_obj(&mut w, field, t, step)?;
    w.flush()?;
    Ok(())
}

fn blowup_report(cfg: &RunConfig, traj: &[Sample], t_est: f64) -> Result<BlowupReport> {
    let a = &cfg.analysis;
    let curv = blowup::max_curvature_samples(traj)?;
    let before: Vec<(f64, f64)> = curv.iter().copied().filter(|(t, _)| *t < t_est).collect();
    let ind = type2_indicator(&before, t_est)?;
    let type2_indicator: Vec<(f64, f64)> = before
        .iter()
        .map(|s| s.0)
        .zip(ind.iter().copied())
        .collect();
    let type2 = blowup::increasing_tail(&ind, 10);
    let mut report = BlowupReport {
        t_est,
        specs: Vec::new(),
        rescaled: Vec::new(),
        metric_scale: None,
        window_dissipation: None,
        type2_indicator,
        type2,
        note: None,
    };
    match detect_concentration(
        traj,
        a.eps0sq,
        &a.rho_schedule,
        &CenterSet::Stride(a.chi_stride),
    ) {
        Ok(specs) => {
            let last = specs.last().expect("non-empty").clone();
            match rescale(traj, &last, a.tau_min, a.tau_max) {
                Ok(states) => {
                    report.window_dissipation = Some(window_dissipation(&states));
                    report.rescaled = states.iter().map(|s| s.summary()).collect();
                    report.metric_scale = Some(last.r_j.powi(-2));
                }
                Err(BlowupError::WindowEmpty) => {
                    report.note = Some("no samples in the rescaled window".into())
                }
                Err(e) => return Err(e.into()),
            }
            report.specs = specs;
        }
        Err(BlowupError::NoConcentration) => {
            report.note = Some("no radius reached the concentration threshold".into())
        }
        Err(e) => return Err(e.into()),
    }
    Ok(report)
}

/// Flow the configured scenario and write diagnostics, snapshots and the summary.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let flow_cfg = cfg.flow_config();
    let f0 = scenario::initial_field(cfg)?;
    let snap_dir = out.join(SNAPSHOTS);
    fs::create_dir_all(&snap_dir)
        .with_context(|| format!("cannot create {}", snap_dir.display()))?;
    let every = flow_cfg.snapshot_every;
    let mut samples: Vec<Sample> = Vec::new();
    let mut io_error: Option<anyhow::Error> = None;
    let result = flow::run_with(f0, &flow_cfg, |s: &FlowState| {
        if every > 0 && s.step.is_multiple_of(every) && io_error.is_none() {
            if let Err(e) = write_snapshot(&snap_dir, s.field(), s.t, s.step) {
                io_error = Some(e);
            }
            samples.push(Sample {
                t: s.t,
                field: s.field().clone(),
            });
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let state = &result.state;
    if every == 0 || !state.step.is_multiple_of(every) {
        write_snapshot(&snap_dir, state.field(), state.t, state.step)?;
        samples.push(Sample {
            t: state.t,
            field: state.field().clone(),
        });
    }
    let csv_path = out.join(DIAGNOSTICS);
    let csv = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("cannot create {}", csv_path.display()))?,
    );
    write_diagnostics_csv(csv, &state.history)?;

    let summary = summarize(
        cfg,
        &flow_cfg,
        &result.state,
        result.status.clone(),
        &samples,
    )?;
    write_json(&out.join(SUMMARY), &summary)?;
    Ok(summary)
}

fn summarize(
    cfg: &RunConfig,
    flow_cfg: &FlowConfig,
    state: &FlowState,
    status: TerminalStatus,
    samples: &[Sample],
) -> Result<Summary> {
    let history = &state.history;
    let initial = energies(&compute_geometry(&scenario::initial_field(cfg)?)?)?;
    let holder = area_holder_check(history, state.w0);
    let last_dt = history.last().map(|r| r.dt).filter(|dt| *dt > 0.0);
    let variation = match (cfg.verify.variation, last_dt) {
        (true, Some(dt)) => variation_identities_check(state, dt, flow_cfg).ok(),
        _ => None,
    };
    let flow_checks = FlowChecks {
        dissipation_max_residual: dissipation_check(history, flow_cfg.convergence_tol),
        area_holder_pass: holder
            .is_some_and(|h| h.worst_margin.min(h.finite_time_margin) >= -1e-6 * state.area0),
        area_holder: holder,
        variation,
        stationarity: state.stationarity(),
    };
    let verifiers = run_verifiers(cfg, &state.cache, history, state.w0);
    let blowup = match &status {
        TerminalStatus::Singular { t, .. } if samples.len() >= 2 => {
            let t_est = cfg.analysis.t_est.unwrap_or(*t);
            // the singular state itself sits at t_est
            let before: Vec<Sample> = samples.iter().filter(|s| s.t < t_est).cloned().collect();
            if before.is_empty() {
                None
            } else {
                Some(blowup_report(cfg, &before, t_est)?)
            }
        }
        _ => None,
    };
    Ok(Summary {
        scenario: cfg.scenario.name(),
        config: cfg.clone(),
        status,
        steps: state.step,
        t: state.t,
        initial_energy: initial,
        final_energy: state.energy,
        geometry: GeometryChecks::of(&state.cache, &state.energy),
        flow: Some(flow_checks),
        verifiers_pass: verifiers.all_pass(),
        verifiers,
        blowup,
    })
}

/// Geometry and verifiers on the initial surface, without flowing.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let mut flow_cfg = cfg.flow_config();
    flow_cfg.max_steps = 0;
    let state = FlowState::new(scenario::initial_field(cfg)?, &flow_cfg)?;
    let verifiers = run_verifiers(cfg, &state.cache, &state.history, state.w0);
    let summary = Summary {
        scenario: cfg.scenario.name(),
        config: cfg.clone(),
        status: if state.is_converged(&flow_cfg) {
            TerminalStatus::Converged
        } else {
            TerminalStatus::TimeOut
        },
        steps: 0,
        t: 0.0,
        initial_energy: state.energy,
        final_energy: state.energy,
        geometry: GeometryChecks::of(&state.cache, &state.energy),
        flow: None,
        verifiers_pass: verifiers.all_pass(),
        verifiers,
        blowup: None,
    };
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_json(&out.join(SUMMARY), &summary)?;
    Ok(summary)
}

/// Snapshots of a previous run, sorted by time.
pub fn load_history(cfg: &RunConfig, dir: &Path) -> Result<Vec<Sample>> {
    let snap_dir = dir.join(SNAPSHOTS);
    let ambient = std::sync::Arc::clone(scenario::base_field(cfg)?.ambient());
    let mut paths: Vec<PathBuf> = fs::read_dir(&snap_dir)
        .with_context(|| format!("cannot list {}", snap_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "obj"))
        .collect();
    paths.sort();
    let mut samples = Vec::with_capacity(paths.len());
    for p in paths {
        let snap = read_obj(BufReader::new(File::open(&p)?))
            .with_context(|| format!("cannot read {}", p.display()))?;
        let t = snap.t;
        samples.push(Sample {
            t,
            field: snap.into_field(std::sync::Arc::clone(&ambient))?,
        });
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    samples.dedup_by(|a, b| a.t == b.t);
    if samples.is_empty() {
        bail!("no snapshots in {}", snap_dir.display());
    }
    Ok(samples)
}

/// Blow-up analysis of the snapshots of a previous run. Writes `blowup.json`
/// and the rescaled snapshots of the last concentration into `out`.
pub fn blowup(cfg: &RunConfig, history_dir: &Path, out: &Path) -> Result<BlowupReport> {
    let samples = load_history(cfg, history_dir)?;
    let t_est = match cfg.analysis.t_est {
        Some(t) => t,
        None => {
            let path = history_dir.join(SUMMARY);
            let prior: PriorSummary =
                serde_json::from_reader(BufReader::new(File::open(&path).with_context(|| {
                    format!("cannot open {}; set analysis.t_est", path.display())
                })?))?;
            match (prior.status.status.as_str(), prior.status.t) {
                ("Singular", Some(t)) => t,
                _ => bail!("the run did not end singular; set analysis.t_est"),
            }
        }
    };
    let before: Vec<Sample> = samples.into_iter().filter(|s| s.t < t_est).collect();
    if before.is_empty() {
        bail!("no snapshots before t_est = {t_est}");
    }
    let report = blowup_report(cfg, &before, t_est)?;
    fs::create_dir_all(out)?;
    if let Some(spec) = report.specs.last() {
        let dir = out.join("rescaled");
        fs::create_dir_all(&dir)?;
        let a = &cfg.analysis;
        if let Ok(states) = rescale(&before, spec, a.tau_min, a.tau_max) {
            for (i, s) in states.iter().enumerate() {
                write_snapshot(&dir, &s.field, s.tau, i)?;
            }
        }
    }
    write_json(&out.join(BLOWUP), &report)?;
    Ok(report)
}
