//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use willmore_core::flow::{DtPolicy, FlowConfig, Scheme};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}{hint}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
        hint: String,
    },
    #[error("{field}: {msg}")]
    Invalid { field: &'static str, msg: String },
}

/// Tagged tables lose key positions; point at the offending key instead.
fn unknown_key_hint(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    let Some(key) = msg
        .strip_prefix("unknown field `")
        .and_then(|r| r.split('`').next())
    else {
        return String::new();
    };
    text.lines()
        .position(|l| l.split('=').next().is_some_and(|k| k.trim() == key) && l.contains('='))
        .map(|i| format!("(key `{key}` at line {})", i + 1))
        .unwrap_or_default()
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for perturbations and sampled centres.
    #[serde(default)]
    pub seed: u64,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Ambient for surfaces read from a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmbientConfig {
    Euclidean { dim: usize },
    Sphere { dim: usize, kappa: f64 },
    Hyperbolic { dim: usize, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    SphereR3 {
        #[serde(default = "one")]
        radius: f64,
    },
    EllipsoidR3 {
        axes: [f64; 3],
    },
    TorusR3 {
        major: f64,
        minor: f64,
    },
    CliffordTorusR3 {
        #[serde(default = "one")]
        minor: f64,
    },
    ProductTorusR4 {
        a: f64,
        b: f64,
    },
    GeodesicSphereS3 {
        #[serde(default = "one")]
        kappa: f64,
    },
    EllipsoidS3 {
        #[serde(default = "one")]
        kappa: f64,
        axes: [f64; 3],
    },
    SphereH3 {
        #[serde(default = "one")]
        kappa: f64,
        rho: f64,
        #[serde(default)]
        aniso: f64,
    },
    /// Surface read from an OBJ snapshot written by this tool.
    Custom {
        file: PathBuf,
        ambient: AmbientConfig,
    },
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::SphereR3 { .. } => "sphere_r3",
            ScenarioConfig::EllipsoidR3 { .. } => "ellipsoid_r3",
            ScenarioConfig::TorusR3 { .. } => "torus_r3",
            ScenarioConfig::CliffordTorusR3 { .. } => "clifford_torus_r3",
            ScenarioConfig::ProductTorusR4 { .. } => "product_torus_r4",
            ScenarioConfig::GeodesicSphereS3 { .. } => "geodesic_sphere_s3",
            ScenarioConfig::EllipsoidS3 { .. } => "ellipsoid_s3",
            ScenarioConfig::SphereH3 { .. } => "sphere_h3",
            ScenarioConfig::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Nodes per side of each sphere chart, and the torus default.
    pub n: usize,
    pub nu: Option<usize>,
    pub nv: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 48,
            nu: None,
            nv: None,
        }
    }
}

/// Smooth random normal displacement of the initial surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Largest displacement in chart units; 0 disables.
    pub amplitude: f64,
    /// Number of random plane waves.
    pub modes: usize,
    /// Largest wave number in chart units.
    pub max_frequency: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            amplitude: 0.0,
            modes: 6,
            max_frequency: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtKind {
    Cfl,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Explicit,
    Stabilized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub dt_policy: DtKind,
    pub c_cfl: f64,
    pub dt: f64,
    pub scheme: SchemeKind,
    pub strength: f64,
    pub max_steps: usize,
    pub t_end: Option<f64>,
    pub energy_backtrack: bool,
    pub max_halvings: u32,
    pub snapshot_every: usize,
    pub singularity_a_max: Option<f64>,
    pub convergence_tol: f64,
    pub stop_when_converged: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::default();
        let c_cfl = match d.dt_policy {
            DtPolicy::Cfl(c) => c,
            DtPolicy::Fixed(_) => 0.02,
        };
        FlowSection {
            dt_policy: DtKind::Cfl,
            c_cfl,
            dt: 1e-3,
            scheme: SchemeKind::Explicit,
            strength: 1.0,
            max_steps: d.max_steps,
            t_end: None,
            energy_backtrack: d.energy_backtrack,
            max_halvings: d.max_halvings,
            snapshot_every: d.snapshot_every,
            singularity_a_max: d.singularity_a_max,
            convergence_tol: d.convergence_tol,
            stop_when_converged: d.stop_when_converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Radius of the concentration value recorded per step.
    pub chi_radius: f64,
    pub chi_stride: usize,
    /// Decreasing radii for concentration detection.
    pub rho_schedule: Vec<f64>,
    pub eps0sq: f64,
    /// Universal constant `C` of the lifespan bound.
    pub c_lifespan: f64,
    /// Smallness constant `c(n)`.
    pub c_n: f64,
    /// Constant `c` of the mass-density bound.
    pub c_mass: f64,
    /// Estimated singular time for blow-up analysis; defaults to the time of
    /// a singular terminal status.
    pub t_est: Option<f64>,
    /// Rescaled time window.
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let d = FlowConfig::default();
        AnalysisSection {
            chi_radius: d.chi_radius,
            chi_stride: d.chi_stride,
            rho_schedule: vec![0.5, 0.25, 0.125],
            eps0sq: 1e-2,
            c_lifespan: 1e-2,
            c_n: 100.0,
            c_mass: 1.0,
            t_est: None,
            tau_min: -1e3,
            tau_max: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub monotonicity: bool,
    pub michael_simon: bool,
    pub sobolev: bool,
    pub mass_density: bool,
    pub lifespan: bool,
    pub kappabound: bool,
    pub pairing: bool,
    pub variation: bool,
    /// Number of sampled centres for the monotonicity check.
    pub centers: usize,
    pub sigma: f64,
    pub rho: f64,
    pub monotonicity_c_max: f64,
    /// Bump functions for the Sobolev-type checks.
    pub bumps: usize,
    pub bump_width_min: f64,
    pub bump_width_max: f64,
    pub michael_simon_c_max: f64,
    pub sobolev_p: f64,
    pub sobolev_m: f64,
    pub mass_radii: Vec<f64>,
    pub pairing_eps: f64,
    pub pairing_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            monotonicity: true,
            michael_simon: true,
            sobolev: true,
            mass_density: true,
            lifespan: true,
            kappabound: true,
            pairing: false,
            variation: true,
            centers: 20,
            sigma: 0.2,
            rho: 0.5,
            monotonicity_c_max: 100.0,
            bumps: 10,
            bump_width_min: 0.25,
            bump_width_max: 2.0,
            michael_simon_c_max: 2.0,
            sobolev_p: 4.0,
            sobolev_m: 2.0,
            mass_radii: vec![0.5, 1.0, 10.0],
            pairing_eps: 1e-5,
            pairing_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            hint: unknown_key_hint(text, &e),
            source: Box::new(e),
        })?;
        // snapshot paths are relative to the config file
        if let ScenarioConfig::Custom { file, .. } = &mut cfg.scenario {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid.n < 8
            || self.grid.nu.is_some_and(|v| v < 8)
            || self.grid.nv.is_some_and(|v| v < 8)
        {
            return Err(invalid("grid", "every grid size must be at least 8"));
        }
        let p = &self.perturbation;
        if !(p.amplitude >= 0.0 && p.amplitude.is_finite() && p.max_frequency > 0.0) {
            return Err(invalid(
                "perturbation",
                "need amplitude >= 0 and max_frequency > 0",
            ));
        }
        self.flow_config()
            .validate()
            .map_err(|e| invalid("flow", e.to_string()))?;
        let a = &self.analysis;
        if a.rho_schedule.is_empty()
            || a.rho_schedule.iter().any(|r| !(*r > 0.0))
            || a.rho_schedule.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(invalid(
                "analysis.rho_schedule",
                "radii must be positive and decreasing",
            ));
        }
        if !(a.eps0sq > 0.0 && a.c_lifespan > 0.0 && a.c_n > 0.0 && a.c_mass > 0.0) {
            return Err(invalid("analysis", "constants must be positive"));
        }
        if !(a.tau_min <= a.tau_max) {
            return Err(invalid("analysis", "need tau_min <= tau_max"));
        }
        let v = &self.verify;
        if !(v.sigma > 0.0 && v.sigma <= v.rho) {
            return Err(invalid("verify", "need 0 < sigma <= rho"));
        }
        if !(v.bump_width_min > 0.0 && v.bump_width_min <= v.bump_width_max) {
            return Err(invalid(
                "verify",
                "need 0 < bump_width_min <= bump_width_max",
            ));
        }
        if v.mass_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("verify.mass_radii", "radii must be positive"));
        }
        Ok(())
    }

    pub fn flow_config(&self) -> FlowConfig {
        let f = &self.flow;
        FlowConfig {
            dt_policy: match f.dt_policy {
                DtKind::Cfl => DtPolicy::Cfl(f.c_cfl),
                DtKind::Fixed => DtPolicy::Fixed(f.dt),
            },
            scheme: match f.scheme {
                SchemeKind::Explicit => Scheme::Explicit,
                SchemeKind::Stabilized => Scheme::Stabilized {
                    strength: f.strength,
                },
            },
            max_steps: f.max_steps,
            t_end: f.t_end.unwrap_or(f64::INFINITY),
            energy_backtrack: f.energy_backtrack,
            max_halvings: f.max_halvings,
            snapshot_every: f.snapshot_every,
            singularity_a_max: f.singularity_a_max,
            chi_radius: self.analysis.chi_radius,
            chi_stride: self.analysis.chi_stride,
            convergence_tol: f.convergence_tol,
            stop_when_converged: f.stop_when_converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse("[scenario]\nname = \"sphere_r3\"\n").unwrap();
        assert_eq!(c.scenario, ScenarioConfig::SphereR3 { radius: 1.0 });
        assert_eq!(c.flow_config(), FlowConfig::default());
    }

    #[test]
    fn unknown_fields_name_the_line() {
        let err = parse("[scenario]\nname = \"torus_r3\"\nmajor = 2.0\nminor = 1.0\nmajr = 3.0\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("majr") && msg.contains("line 5"), "{msg}");
        let err = parse("[scenario]\nname = \"sphere_r3\"\n[flow]\nmax_step = 3\n").unwrap_err();
        assert!(err.to_string().contains("max_step"), "{err}");
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(parse("[scenario]\nname = \"klein_bottle\"\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let err =
            parse("[scenario]\nname = \"sphere_r3\"\n[flow]\ndt_policy = \"fixed\"\ndt = -1.0\n")
                .unwrap_err();
        assert!(
            matches!(err, ConfigError::Invalid { field: "flow", .. }),
            "{err}"
        );
        let err =
            parse("[scenario]\nname = \"sphere_r3\"\n[analysis]\nrho_schedule = [0.1, 0.2]\n")
                .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
    }

    #[test]
    fn stabilized_fixed_step_maps_to_flow_config() {
        let c = parse(
            "[scenario]\nname = \"torus_r3\"\nmajor = 2.0\nminor = 1.0\n\
             [flow]\ndt_policy = \"fixed\"\ndt = 0.002\nscheme = \"stabilized\"\nstrength = 1.5\n",
        )
        .unwrap();
        let f = c.flow_config();
        assert_eq!(f.dt_policy, DtPolicy::Fixed(0.002));
        assert_eq!(f.scheme, Scheme::Stabilized { strength: 1.5 });
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let c =
            parse("seed = 9\n[scenario]\nname = \"sphere_h3\"\nrho = 0.3\naniso = 0.2\n").unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn custom_paths_resolve_against_the_config() {
        let c = RunConfig::from_toml(
            "[scenario]\nname = \"custom\"\nfile = \"s.obj\"\nambient = { kind = \"euclidean\", dim = 3 }\n",
            Path::new("/tmp/cfg/run.toml"),
        )
        .unwrap();
        match c.scenario {
            ScenarioConfig::Custom { file, .. } => {
                assert_eq!(file, PathBuf::from("/tmp/cfg/s.obj"))
            }
            other => panic!("{other:?}"),
        }
    }
}
