//! Deterministic parameter sweeps over the readout, storage, overlap and
//! dispersive-shift computations, emitted as CSV with a commented
//! parameter header.
//!
//! Configuration is layered: recipe defaults, then an optional named preset
//! reproducing one figure, then a TOML file, then `section.key=value`
//! overrides. Every resolved parameter is echoed into the CSV header.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;
use toml::{Table, Value};

use crate::anneal::{bare_dressed_overlap, storage_fidelity_with, ProjectionMode, QfpParams};
use crate::bases::{BasisTag, QubitParams};
use crate::jcm::DispersiveParams;
use crate::measurement::{model_config, run_protocol_with, FidelityMode, InitialState};
use crate::models::{derive, InteractionMode, ModelKind, ModelParams, ModelSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Invalid configuration, with the place it came from when known.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{field}: {message}", .location.as_ref().map(|l| format!("{l}: ")).unwrap_or_default())]
pub struct ConfigError {
    /// `file:line` or `--set #k`.
    pub location: Option<String>,
    /// `section.key`, or the offending token.
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { location: None, field: field.into(), message: message.into() }
    }

    fn at(mut self, location: Option<String>) -> Self {
        if self.location.is_none() {
            self.location = location;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recipe {
    ChiT,
    Alpha,
    JCoupling,
    StorageT,
    StorageBetaMax,
    OverlapG,
    ChiVsDelta,
    ChiVsTheta,
}

impl Recipe {
    pub const ALL: [Recipe; 8] = [
        Self::ChiT,
        Self::Alpha,
        Self::JCoupling,
        Self::StorageT,
        Self::StorageBetaMax,
        Self::OverlapG,
        Self::ChiVsDelta,
        Self::ChiVsTheta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::ChiT => "chi_t",
            Self::Alpha => "alpha",
            Self::JCoupling => "j_coupling",
            Self::StorageT => "storage_t",
            Self::StorageBetaMax => "storage_beta_max",
            Self::OverlapG => "overlap_g",
            Self::ChiVsDelta => "chi_vs_delta",
            Self::ChiVsTheta => "chi_vs_theta",
        }
    }

    /// Name of the swept quantity, used as the `sweep_var` column.
    pub fn sweep_var(&self) -> &'static str {
        match self {
            Self::ChiT => "chi_t",
            Self::Alpha => "alpha",
            Self::JCoupling => "j_ratio",
            Self::StorageT => "t_over_tqfp",
            Self::StorageBetaMax => "beta_max",
            Self::OverlapG => "g_over_wr",
            Self::ChiVsDelta => "delta_over_g",
            Self::ChiVsTheta => "theta_q",
        }
    }

    /// What the `fidelity` column holds for this recipe.
    pub fn observable(&self) -> &'static str {
        match self {
            Self::ChiT | Self::Alpha | Self::JCoupling => "readout fidelity of the measured qubit",
            Self::StorageT | Self::StorageBetaMax => "storage fidelity of the annealing step",
            Self::OverlapG => "bare/dressed overlap in one Fock level",
            Self::ChiVsDelta | Self::ChiVsTheta => "dispersive shift over qubit frequency",
        }
    }

    fn is_readout(&self) -> bool {
        matches!(self, Self::ChiT | Self::Alpha | Self::JCoupling)
    }

    fn default_grid(&self) -> Grid {
        let (start, stop, steps) = match self {
            Self::ChiT => (0.1, 2.0, 20),
            Self::Alpha => (0.1, 3.0, 30),
            Self::JCoupling => (0.01, 0.1, 10),
            Self::StorageT => (0.0, 1.0, 21),
            Self::StorageBetaMax => (1.5, 3.0, 16),
            Self::OverlapG => (0.0, 3.0, 31),
            Self::ChiVsDelta => (2.0, 20.0, 19),
            Self::ChiVsTheta => (0.05, FRAC_PI_2, 30),
        };
        Grid { start, stop, steps }
    }

    fn default_bases(&self) -> Vec<BasisSelection> {
        let flux = BasisSelection::new(BasisTag::Flux, InteractionMode::Full);
        let energy = BasisSelection::new(BasisTag::EnergyQ2, InteractionMode::Full);
        match self {
            Self::ChiT | Self::Alpha | Self::JCoupling | Self::StorageT | Self::StorageBetaMax => vec![flux, energy],
            // Basis-independent observables.
            _ => vec![flux],
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| ConfigError::new("sweep.recipe", format!("unknown recipe '{s}'")))
    }
}

/// A basis together with the coupling approximation used in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSelection {
    pub basis: BasisTag,
    pub mode: InteractionMode,
}

impl BasisSelection {
    pub fn new(basis: BasisTag, mode: InteractionMode) -> Self {
        Self { basis, mode }
    }
}

impl fmt::Display for BasisSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            InteractionMode::Full => f.write_str(self.basis.label()),
            m => write!(f, "{}:{}", self.basis.label(), m.label()),
        }
    }
}

impl FromStr for BasisSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (b, m) = s.split_once(':').unwrap_or((s, "full"));
        let basis = b.parse::<BasisTag>().map_err(|e| e.to_string())?;
        Ok(Self { basis, mode: m.parse()? })
    }
}

/// Uniform grid including both end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| if k + 1 == self.steps { self.stop } else { self.start + h * k as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSettings {
    pub alpha: f64,
    pub chi_t: f64,
    pub fidelity: FidelityMode,
    pub initial_state: InitialState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSettings {
    pub qfp: QfpParams,
    /// Tunnelling over bias of the stored qubit.
    pub delta_ratio: f64,
    pub projection: ProjectionMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapSettings {
    pub fock_level: usize,
    pub theta_q: f64,
}

/// Fully resolved sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub recipe: Recipe,
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub bases: Vec<BasisSelection>,
    pub grid: Grid,
    pub measurement: MeasurementSettings,
    pub storage: StorageSettings,
    pub overlap: OverlapSettings,
    /// Qubit angle for the dispersive-shift recipes; `None` uses the model's.
    pub dispersive_theta: Option<f64>,
    pub out_path: Option<PathBuf>,
}

/// Figure preset: a recipe plus overrides in `section.key=value` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub recipe: Recipe,
    pub description: &'static str,
    pub overrides: &'static [&'static str],
}

const TWO_QUBIT: &str = "model.kind=\"two_qubit\"";
const ANNEALED: &str = "model.kind=\"two_qubit_annealed\"";

pub const PRESETS: &[Preset] = &[
    Preset { name: "an_t", recipe: Recipe::StorageT, description: "storage fidelity during the anneal ramp", overrides: &["storage.delta_ratio=1.0", "storage.xi=0.4", "storage.beta_max=2.5"] },
    Preset { name: "an_betamax", recipe: Recipe::StorageBetaMax, description: "storage fidelity at the end of the ramp versus beta_max", overrides: &["storage.delta_ratio=0.5", "storage.xi=0.4"] },
    Preset { name: "bare_dressed", recipe: Recipe::OverlapG, description: "bare/dressed overlap versus g/w_r", overrides: &["overlap.fock_level=49", "overlap.theta_q=0.7853981633974483"] },
    Preset { name: "1q_chi_theta", recipe: Recipe::ChiVsTheta, description: "single-qubit dispersive shift versus qubit angle", overrides: &["model.delta_over_g=8.0", "model.eta2=1.25"] },
    Preset { name: "1q_chi_delta", recipe: Recipe::ChiVsDelta, description: "single-qubit dispersive shift versus detuning over coupling", overrides: &["dispersive.theta_q=0.7853981633974483", "model.eta2=1.25"] },
    Preset { name: "1q_chit", recipe: Recipe::ChiT, description: "single-qubit readout versus chi t", overrides: &["model.kind=\"single\"", "model.n_max=27", "model.delta2_ratio=1.0", "measurement.alpha=1.0", "model.delta_over_g=8.0", "model.eta2=1.25"] },
    Preset { name: "1q_alpha", recipe: Recipe::Alpha, description: "single-qubit readout versus alpha at chi t = pi/2", overrides: &["model.kind=\"single\"", "model.n_max=27", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "model.eta2=1.25", "measurement.chi_t=1.5707963267948966"] },
    Preset { name: "2qo_chi_delta", recipe: Recipe::ChiVsDelta, description: "two-qubit dispersive shift versus detuning over coupling", overrides: &[TWO_QUBIT, "model.delta2_ratio=0.3", "model.eta2=1.25"] },
    Preset { name: "2qo_chit", recipe: Recipe::ChiT, description: "FQ2 readout without FQ1 anneal versus chi t, three bases", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "sweep.bases=[\"flux\",\"energy_q2\",\"energy_q1q2\"]"] },
    Preset { name: "2qo_alpha", recipe: Recipe::Alpha, description: "FQ2 readout without FQ1 anneal versus alpha, three bases", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"flux\",\"energy_q2\",\"energy_q1q2\"]"] },
    Preset { name: "2qo_j", recipe: Recipe::JCoupling, description: "FQ2 readout without FQ1 anneal versus coupling, three bases", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"flux\",\"energy_q2\",\"energy_q1q2\"]"] },
    Preset { name: "2qo_bd_chit", recipe: Recipe::ChiT, description: "bare versus dressed FQ2 energy basis versus chi t", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "sweep.bases=[\"energy_q2\",\"dressed_q2\"]"] },
    Preset { name: "2qo_bd_alpha", recipe: Recipe::Alpha, description: "bare versus dressed FQ2 energy basis versus alpha", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q2\",\"dressed_q2\"]"] },
    Preset { name: "2qo_bd_j", recipe: Recipe::JCoupling, description: "bare versus dressed FQ2 energy basis versus coupling", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q2\",\"dressed_q2\"]"] },
    Preset { name: "2qo_zz_chit", recipe: Recipe::ChiT, description: "FQ1-FQ2 energy basis with and without the zz approximation versus chi t", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "sweep.bases=[\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qo_zz_alpha", recipe: Recipe::Alpha, description: "FQ1-FQ2 energy basis with and without the zz approximation versus alpha", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qo_zz_j", recipe: Recipe::JCoupling, description: "FQ1-FQ2 energy basis with and without the zz approximation versus coupling", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.delta2_ratio=1.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qo_xx_chit", recipe: Recipe::ChiT, description: "bare versus dressed basis under the xx approximation versus chi t", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=10.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
    Preset { name: "2qo_xx_alpha", recipe: Recipe::Alpha, description: "bare versus dressed basis under the xx approximation versus alpha", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.j_ratio=0.05", "model.delta2_ratio=10.0", "model.delta_over_g=8.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
    Preset { name: "2qo_xx_j", recipe: Recipe::JCoupling, description: "bare versus dressed basis under the xx approximation versus coupling", overrides: &[TWO_QUBIT, "model.n_max=27", "model.eta2=1.25", "model.delta2_ratio=10.0", "model.delta_over_g=8.0", "measurement.alpha=1.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
    Preset { name: "2qm_chi_delta", recipe: Recipe::ChiVsDelta, description: "dispersive shift with FQ1 annealed versus detuning over coupling", overrides: &[ANNEALED, "model.delta2_ratio=0.3", "model.eta2=1.25"] },
    Preset { name: "2qm_chit", recipe: Recipe::ChiT, description: "chi t sweep of FQ2 readout with FQ1 annealed", overrides: &[ANNEALED, "model.n_max=21", "measurement.alpha=2.0", "model.eta2=1.25", "model.eta1=1.25", "model.j_ratio=0.05", "model.delta2_ratio=0.5", "model.delta_over_g=8.0", "sweep.bases=[\"flux\",\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qm_alpha", recipe: Recipe::Alpha, description: "alpha sweep of FQ2 readout with FQ1 annealed", overrides: &[ANNEALED, "model.n_max=21", "model.eta2=1.25", "model.eta1=1.25", "model.j_ratio=0.05", "model.delta2_ratio=0.5", "model.delta_over_g=8.0", "measurement.chi_t=0.7853981633974483", "sweep.bases=[\"flux\",\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qm_j", recipe: Recipe::JCoupling, description: "coupling sweep of FQ2 readout with FQ1 annealed", overrides: &[ANNEALED, "model.n_max=21", "model.eta2=1.25", "model.eta1=1.25", "measurement.alpha=0.5", "model.delta2_ratio=0.5", "model.delta_over_g=8.0", "measurement.chi_t=0.7853981633974483", "sweep.bases=[\"flux\",\"energy_q1q2\",\"energy_q1q2:zz\"]"] },
    Preset { name: "2qm_xx_chit", recipe: Recipe::ChiT, description: "bare versus dressed basis with FQ1 annealed, xx approximation, versus chi t", overrides: &[ANNEALED, "model.n_max=21", "model.eta2=1.0", "model.eta1=1.0", "measurement.alpha=2.0", "model.j_ratio=0.05", "model.delta2_ratio=8.0", "model.delta_over_g=8.0", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
    Preset { name: "2qm_xx_alpha", recipe: Recipe::Alpha, description: "bare versus dressed basis with FQ1 annealed, xx approximation, versus alpha", overrides: &[ANNEALED, "model.n_max=21", "model.delta2_ratio=10.0", "model.eta2=1.0", "model.eta1=1.0", "model.j_ratio=0.05", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
    Preset { name: "2qm_xx_j", recipe: Recipe::JCoupling, description: "bare versus dressed basis with FQ1 annealed, xx approximation, versus coupling", overrides: &[ANNEALED, "model.n_max=21", "measurement.alpha=0.5", "model.delta2_ratio=0.8", "model.eta2=1.0", "model.eta1=1.0", "model.delta_over_g=8.0", "measurement.chi_t=1.5707963267948966", "sweep.bases=[\"energy_q1q2:xx\",\"dressed_q1q2:xx\"]"] },
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// One line per recipe and per preset, with the defaults each one sets.
pub fn list_recipes() -> String {
    let mut out = String::from("recipes:\n");
    for r in Recipe::ALL {
        let g = r.default_grid();
        out += &format!(
            "  {:<18} sweeps {:<13} [{}, {}] x {}  -> {}\n",
            r.name(),
            r.sweep_var(),
            g.start,
            g.stop,
            g.steps,
            r.observable()
        );
    }
    out += "figure presets:\n";
    for p in PRESETS {
        out += &format!("  {} \u{2192} {} ({}); {}\n", p.name, p.description, p.recipe.name(), p.overrides.join(", "));
    }
    out
}

/// Resolved parameters as `section.key -> value` text, sorted.
fn default_table(recipe: Recipe) -> Table {
    let m = ModelParams::default();
    let q = QfpParams::default();
    let g = recipe.default_grid();
    let mut t = Table::new();
    let section = |pairs: Vec<(&str, Value)>| -> Value {
        Value::Table(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    };
    t.insert(
        "sweep".into(),
        section(vec![
            ("recipe", Value::String(recipe.name().into())),
            ("start", Value::Float(g.start)),
            ("stop", Value::Float(g.stop)),
            ("steps", Value::Integer(g.steps as i64)),
            ("bases", Value::Array(recipe.default_bases().iter().map(|b| Value::String(b.to_string())).collect())),
        ]),
    );
    t.insert(
        "model".into(),
        section(vec![
            ("kind", Value::String(ModelKind::SingleQubit.label().into())),
            ("eps2", Value::Float(m.eps2)),
            ("delta2_ratio", Value::Float(m.delta2_ratio)),
            ("eta2", Value::Float(m.eta2)),
            ("eps1", Value::Float(m.eps1)),
            ("delta1", Value::Float(m.delta1)),
            ("eta1", Value::Float(m.eta1)),
            ("eps_scale", Value::Float(m.eps_scale)),
            ("delta_over_g", Value::Float(m.delta_over_g)),
            ("omega_r_ratio", Value::Float(m.omega_r_ratio)),
            ("j_ratio", Value::Float(m.j_ratio)),
            ("n_max", Value::Integer(m.n_max as i64)),
            ("literal_theta1", Value::Boolean(m.literal_theta1)),
            ("literal_lambda2", Value::Boolean(m.literal_lambda2)),
        ]),
    );
    t.insert(
        "measurement".into(),
        section(vec![
            ("alpha", Value::Float(1.0)),
            ("chi_t", Value::Float(FRAC_PI_2)),
            ("fidelity", Value::String(FidelityMode::default().label().into())),
            ("initial_state", Value::String(InitialState::default().label().into())),
        ]),
    );
    t.insert(
        "storage".into(),
        section(vec![
            ("xi", Value::Float(q.xi)),
            ("beta_max", Value::Float(q.beta_max)),
            ("lambda", Value::Float(q.lambda)),
            ("omega", Value::Float(q.omega)),
            ("e_l", Value::Float(q.e_l)),
            ("delta_ratio", Value::Float(1.0)),
            ("projection", Value::String("real_part".into())),
        ]),
    );
    t.insert(
        "overlap".into(),
        section(vec![("fock_level", Value::Integer(49)), ("theta_q", Value::Float(FRAC_PI_4))]),
    );
    t.insert("dispersive".into(), section(vec![("theta_q", Value::String("model".into()))]));
    t
}

/// Line of `key` inside `[section]` of a TOML source, 1-based.
fn locate(src: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if key.is_none() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if let Some(k) = key {
            if current == section && l.split('=').next().map(str::trim) == Some(k) {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Where each `section.key` was last set.
type Origins = BTreeMap<String, String>;

fn merge(
    base: &mut Table,
    layer: &Table,
    origin: &dyn Fn(&str, Option<&str>) -> String,
    origins: &mut Origins,
) -> Result<(), ConfigError> {
    for (section, value) in layer {
        let Some(target) = base.get_mut(section).and_then(Value::as_table_mut) else {
            return Err(ConfigError::new(section.clone(), "unknown section").at(Some(origin(section, None))));
        };
        let Value::Table(entries) = value else {
            return Err(ConfigError::new(section.clone(), "expected a section of key = value pairs")
                .at(Some(origin(section, None))));
        };
        for (key, v) in entries {
            let field = format!("{section}.{key}");
            if !target.contains_key(key) {
                return Err(ConfigError::new(field, "unknown key").at(Some(origin(section, Some(key)))));
            }
            origins.insert(field, origin(section, Some(key)));
            target.insert(key.clone(), v.clone());
        }
    }
    Ok(())
}

/// Parses one `section.key=value` override; the value is TOML, or a bare string.
fn parse_override(arg: &str) -> Result<(String, String, Value), ConfigError> {
    let (path, raw) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError::new(arg, "expected section.key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| ConfigError::new(path.trim(), "expected section.key"))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((section.to_string(), key.to_string(), value))
}

/// Builder for a [`SweepConfig`] from layered sources.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    /// Recipe or preset name.
    pub recipe: Option<String>,
    /// TOML text and a display name for diagnostics.
    pub file: Option<(String, String)>,
    pub overrides: Vec<String>,
    pub out_path: Option<PathBuf>,
}

impl ConfigSources {
    pub fn resolve(&self) -> Result<SweepConfig, ConfigError> {
        let file_table = match &self.file {
            Some((name, src)) => Some(src.parse::<Table>().map_err(|e| {
                let line = e.span().map(|s| src[..s.start].matches('\n').count() + 1);
                ConfigError {
                    location: Some(match line {
                        Some(l) => format!("{name}:{l}"),
                        None => name.clone(),
                    }),
                    field: "syntax".into(),
                    message: e.message().to_string(),
                }
            })?),
            None => None,
        };
        let overrides = self
            .overrides
            .iter()
            .enumerate()
            .map(|(k, a)| parse_override(a).map_err(|e| e.at(Some(format!("--set #{}", k + 1)))))
            .collect::<Result<Vec<_>, _>>()?;

        // Recipe or preset: command line, then override, then file.
        let from_file = file_table
            .as_ref()
            .and_then(|t| t.get("sweep"))
            .and_then(|s| s.get("recipe"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let from_set = overrides
            .iter()
            .rev()
            .find(|(s, k, _)| s == "sweep" && k == "recipe")
            .and_then(|(_, _, v)| v.as_str().map(str::to_string));
        let name = self
            .recipe
            .clone()
            .or(from_set)
            .or(from_file)
            .ok_or_else(|| ConfigError::new("sweep.recipe", "no recipe given"))?;
        let (recipe, preset) = match find_preset(&name) {
            Some(p) => (p.recipe, Some(p)),
            None => (name.parse::<Recipe>()?, None),
        };

        let mut table = default_table(recipe);
        let mut origins = Origins::new();
        if let Some(p) = preset {
            for o in p.overrides {
                let (s, k, v) = parse_override(o).expect("preset overrides are well formed");
                let layer: Table = [(s, Value::Table([(k, v)].into_iter().collect()))].into_iter().collect();
                merge(&mut table, &layer, &|_, _| format!("preset {}", p.name), &mut origins)?;
            }
        }
        if let (Some(t), Some((name, src))) = (&file_table, &self.file) {
            let origin = |s: &str, k: Option<&str>| match locate(src, s, k) {
                Some(l) => format!("{name}:{l}"),
                None => name.clone(),
            };
            merge(&mut table, t, &origin, &mut origins)?;
        }
        for (k, (s, key, v)) in overrides.into_iter().enumerate() {
            let layer: Table = [(s, Value::Table([(key, v)].into_iter().collect()))].into_iter().collect();
            merge(&mut table, &layer, &|_, _| format!("--set #{}", k + 1), &mut origins)?;
        }
        // The recipe itself is fixed by the name resolved above.
        table["sweep"]["recipe"] = Value::String(recipe.name().into());

        let mut cfg = extract(&table, recipe).map_err(|e| {
            let loc = origins.get(&e.field).cloned();
            e.at(loc)
        })?;
        cfg.preset = preset.map(|p| p.name.to_string());
        cfg.out_path = self.out_path.clone();
        Ok(cfg)
    }
}

struct Reader<'a> {
    table: &'a Table,
}

impl Reader<'_> {
    fn value(&self, section: &str, key: &str) -> &Value {
        &self.table[section][key]
    }

    fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        match self.value(section, key) {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            v => Err(ConfigError::new(format!("{section}.{key}"), format!("expected a number, found {v}"))),
        }
        .and_then(|x| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(ConfigError::new(format!("{section}.{key}"), "must be finite"))
            }
        })
    }

    fn positive(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let x = self.f64(section, key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(ConfigError::new(format!("{section}.{key}"), format!("must be positive, got {x}")))
        }
    }

    fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        match self.value(section, key) {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            v => Err(ConfigError::new(format!("{section}.{key}"), format!("expected a nonnegative integer, found {v}"))),
        }
    }

    fn bool(&self, section: &str, key: &str) -> Result<bool, ConfigError> {
        self.value(section, key)
            .as_bool()
            .ok_or_else(|| ConfigError::new(format!("{section}.{key}"), "expected true or false"))
    }

    fn str(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.value(section, key)
            .as_str()
            .ok_or_else(|| ConfigError::new(format!("{section}.{key}"), "expected a string"))
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.str(section, key)?
            .parse()
            .map_err(|e: T::Err| ConfigError::new(format!("{section}.{key}"), e.to_string()))
    }
}

fn extract(table: &Table, recipe: Recipe) -> Result<SweepConfig, ConfigError> {
    let r = Reader { table };
    let grid = Grid { start: r.f64("sweep", "start")?, stop: r.f64("sweep", "stop")?, steps: r.usize("sweep", "steps")? };
    if grid.steps < 2 {
        return Err(ConfigError::new("sweep.steps", "need at least 2 grid points"));
    }
    if grid.start >= grid.stop {
        return Err(ConfigError::new("sweep.stop", format!("grid must increase, got {} .. {}", grid.start, grid.stop)));
    }
    let bases = match r.value("sweep", "bases") {
        Value::Array(items) if !items.is_empty() => items
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| "expected basis names".to_string())
                    .and_then(str::parse::<BasisSelection>)
                    .map_err(|e| ConfigError::new("sweep.bases", e))
            })
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(ConfigError::new("sweep.bases", "expected a nonempty list of basis names")),
    };
    let params = ModelParams {
        eps2: r.positive("model", "eps2")?,
        delta2_ratio: r.positive("model", "delta2_ratio")?,
        eta2: r.f64("model", "eta2")?,
        eps1: r.positive("model", "eps1")?,
        delta1: r.positive("model", "delta1")?,
        eta1: r.f64("model", "eta1")?,
        eps_scale: r.f64("model", "eps_scale")?,
        delta_over_g: r.positive("model", "delta_over_g")?,
        omega_r_ratio: r.positive("model", "omega_r_ratio")?,
        j_ratio: r.f64("model", "j_ratio")?,
        n_max: r.usize("model", "n_max")?,
        literal_theta1: r.bool("model", "literal_theta1")?,
        literal_lambda2: r.bool("model", "literal_lambda2")?,
    };
    if params.eta1 < 0.0 || params.eta2 < 0.0 {
        return Err(ConfigError::new("model.eta2", "suppression exponents must be nonnegative"));
    }
    if params.eps_scale < 1.0 {
        return Err(ConfigError::new("model.eps_scale", "must be at least 1"));
    }
    if params.n_max < 2 {
        return Err(ConfigError::new("model.n_max", "truncation must keep at least 2 Fock levels"));
    }
    let kind: ModelKind = r.parsed("model", "kind")?;
    let measurement = MeasurementSettings {
        alpha: r.f64("measurement", "alpha")?,
        chi_t: r.f64("measurement", "chi_t")?,
        fidelity: r.parsed("measurement", "fidelity")?,
        initial_state: r.parsed("measurement", "initial_state")?,
    };
    if measurement.alpha < 0.0 || measurement.chi_t < 0.0 {
        return Err(ConfigError::new("measurement.alpha", "alpha and chi_t must be nonnegative"));
    }
    let storage = StorageSettings {
        qfp: QfpParams {
            xi: r.positive("storage", "xi")?,
            beta_max: r.positive("storage", "beta_max")?,
            lambda: r.f64("storage", "lambda")?,
            omega: r.positive("storage", "omega")?,
            e_l: r.positive("storage", "e_l")?,
        },
        delta_ratio: r.positive("storage", "delta_ratio")?,
        projection: match r.str("storage", "projection")? {
            "real_part" => ProjectionMode::RealPart,
            "magnitude" => ProjectionMode::Magnitude,
            other => return Err(ConfigError::new("storage.projection", format!("unknown projection '{other}'"))),
        },
    };
    let overlap = OverlapSettings { fock_level: r.usize("overlap", "fock_level")?, theta_q: r.f64("overlap", "theta_q")? };
    let dispersive_theta = match r.value("dispersive", "theta_q") {
        Value::String(s) if s == "model" => None,
        _ => Some(r.f64("dispersive", "theta_q")?),
    };
    let first = bases[0];
    Ok(SweepConfig {
        recipe,
        preset: None,
        model: ModelSpec::new(kind, first.basis, first.mode, params),
        bases,
        grid,
        measurement,
        storage,
        overlap,
        dispersive_theta,
        out_path: None,
    })
}

impl SweepConfig {
    /// Every resolved parameter as sorted `section.key = value` pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.model.params;
        let q = &self.storage.qfp;
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("sweep.recipe", self.recipe.name().into());
        put("sweep.preset", self.preset.clone().unwrap_or_else(|| "none".into()));
        put("sweep.start", self.grid.start.to_string());
        put("sweep.stop", self.grid.stop.to_string());
        put("sweep.steps", self.grid.steps.to_string());
        put("sweep.bases", self.bases.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
        put("model.kind", self.model.kind.label().into());
        put("model.eps2", p.eps2.to_string());
        put("model.delta2_ratio", p.delta2_ratio.to_string());
        put("model.eta2", p.eta2.to_string());
        put("model.eps1", p.eps1.to_string());
        put("model.delta1", p.delta1.to_string());
        put("model.eta1", p.eta1.to_string());
        put("model.eps_scale", p.eps_scale.to_string());
        put("model.delta_over_g", p.delta_over_g.to_string());
        put("model.omega_r_ratio", p.omega_r_ratio.to_string());
        put("model.j_ratio", p.j_ratio.to_string());
        put("model.n_max", p.n_max.to_string());
        put("model.literal_theta1", p.literal_theta1.to_string());
        put("model.literal_lambda2", p.literal_lambda2.to_string());
        put("measurement.alpha", self.measurement.alpha.to_string());
        put("measurement.chi_t", self.measurement.chi_t.to_string());
        put("measurement.fidelity", self.measurement.fidelity.label().into());
        put("measurement.initial_state", self.measurement.initial_state.label().into());
        put("storage.xi", q.xi.to_string());
        put("storage.beta_max", q.beta_max.to_string());
        put("storage.lambda", q.lambda.to_string());
        put("storage.omega", q.omega.to_string());
        put("storage.e_l", q.e_l.to_string());
        put("storage.delta_ratio", self.storage.delta_ratio.to_string());
        put(
            "storage.projection",
            match self.storage.projection {
                ProjectionMode::RealPart => "real_part",
                ProjectionMode::Magnitude => "magnitude",
            }
            .into(),
        );
        put("overlap.fock_level", self.overlap.fock_level.to_string());
        put("overlap.theta_q", self.overlap.theta_q.to_string());
        put("dispersive.theta_q", self.dispersive_theta.map_or_else(|| "model".into(), |t| t.to_string()));
        out.into_iter().collect()
    }
}

/// One grid point in one basis.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub basis: String,
    pub fidelity: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    /// `ok`, `warn:<reasons>` or `error:<message>`.
    pub status: String,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }
}

// Bitwise float equality so that NaN placeholders round-trip.
impl PartialEq for SweepRow {
    fn eq(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits()
            && self.basis == other.basis
            && self.fidelity.to_bits() == other.fidelity.to_bits()
            && self.p_plus.to_bits() == other.p_plus.to_bits()
            && self.p_minus.to_bits() == other.p_minus.to_bits()
            && self.status == other.status
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sweep_var: String,
    /// `section.key = value` lines echoed in the header, plus `version`.
    pub header: Vec<(String, String)>,
    /// Sorted by `(value, basis)`.
    pub rows: Vec<SweepRow>,
}

pub const CSV_COLUMNS: [&str; 7] = ["sweep_var", "value", "basis", "fidelity", "p_plus", "p_minus", "status"];

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.is_error()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            out += &format!("# {k} = {v}\n");
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                self.sweep_var.clone(),
                r.value.to_string(),
                r.basis.clone(),
                r.fidelity.to_string(),
                r.p_plus.to_string(),
                r.p_minus.to_string(),
                r.status.clone(),
            ])
            .expect("in-memory write");
        }
        out += std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("ascii fields");
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut header = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(h) => {
                    let (k, v) = h.split_once(" = ").ok_or_else(|| format!("bad header line '{line}'"))?;
                    header.push((k.to_string(), v.to_string()));
                }
                None => {
                    body += line;
                    body.push('\n');
                }
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let cols: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        if cols != CSV_COLUMNS {
            return Err(format!("unexpected columns {cols:?}"));
        }
        let mut rows = Vec::new();
        let mut sweep_var = header
            .iter()
            .find(|(k, _)| k == "sweep_var")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("column {}: {e}", CSV_COLUMNS[i]));
            sweep_var = rec[0].to_string();
            rows.push(SweepRow {
                value: num(1)?,
                basis: rec[2].to_string(),
                fidelity: num(3)?,
                p_plus: num(4)?,
                p_minus: num(5)?,
                status: rec[6].to_string(),
            });
        }
        Ok(Self { sweep_var, header, rows })
    }

    /// Writes to a temporary file beside `path`, then renames it into place.
    pub fn write_atomic(&self, path: &Path) -> std::io::Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_csv().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

struct Point {
    fidelity: f64,
    p_plus: f64,
    p_minus: f64,
    warnings: Vec<String>,
}

fn evaluate(cfg: &SweepConfig, value: f64, sel: BasisSelection) -> Result<Point, String> {
    let mut spec = ModelSpec { basis: sel.basis, mode: sel.mode, ..cfg.model };
    let (mut alpha, mut chi_t) = (cfg.measurement.alpha, cfg.measurement.chi_t);
    match cfg.recipe {
        Recipe::ChiT => chi_t = value,
        Recipe::Alpha => alpha = value,
        Recipe::JCoupling => spec.params.j_ratio = value,
        Recipe::ChiVsDelta => spec.params.delta_over_g = value,
        _ => {}
    }
    if cfg.recipe.is_readout() {
        let derived = derive(&spec).map_err(|e| e.to_string())?;
        let mcfg = model_config(&spec, alpha, chi_t).map_err(|e| e.to_string())?;
        let psi = cfg.measurement.initial_state.vector();
        let out = run_protocol_with(&spec, &psi, None, &mcfg).map_err(|e| e.to_string())?;
        let mut warnings: Vec<String> = derived.warnings.iter().map(ToString::to_string).collect();
        if out.channel.tail > 1e-6 {
            warnings.push(format!("truncation_tail={:e}", out.channel.tail));
        }
        return Ok(Point {
            fidelity: out.value(cfg.measurement.fidelity),
            p_plus: out.channel.p_plus,
            p_minus: out.channel.p_minus,
            warnings,
        });
    }
    let probability = |f: f64| Point { fidelity: f, p_plus: f, p_minus: 1.0 - f, warnings: Vec::new() };
    match cfg.recipe {
        Recipe::StorageT | Recipe::StorageBetaMax => {
            let mut qfp = cfg.storage.qfp;
            let t = if cfg.recipe == Recipe::StorageT {
                value * qfp.t_qfp()
            } else {
                qfp.beta_max = value;
                qfp.t_qfp()
            };
            let qubit = QubitParams::new(1.0, cfg.storage.delta_ratio);
            storage_fidelity_with(&qfp, &qubit, t, sel.basis, cfg.storage.projection)
                .map(probability)
                .map_err(|e| e.to_string())
        }
        Recipe::OverlapG => {
            let o = bare_dressed_overlap(cfg.overlap.fock_level, value, cfg.overlap.theta_q, cfg.overlap.theta_q);
            Ok(Point { fidelity: o, p_plus: o * o, p_minus: 1.0 - o * o, warnings: Vec::new() })
        }
        Recipe::ChiVsDelta | Recipe::ChiVsTheta => {
            let d = derive(&spec).map_err(|e| e.to_string())?;
            let theta = match cfg.recipe {
                Recipe::ChiVsTheta => value,
                _ => cfg.dispersive_theta.unwrap_or(d.theta2),
            };
            let omega_q = d.omega2;
            let omega_r = spec.params.omega_r_ratio * omega_q;
            let g = (omega_q - omega_r).abs() / spec.params.delta_over_g;
            let disp = DispersiveParams::new(g, omega_q, theta, omega_r).map_err(|e| e.to_string())?;
            let warnings = if disp.is_dispersive() {
                Vec::new()
            } else {
                vec![format!("dispersive_ratio={}", disp.validity_ratio())]
            };
            Ok(Point { fidelity: disp.chi / omega_q, p_plus: f64::NAN, p_minus: f64::NAN, warnings })
        }
        _ => unreachable!("readout recipes handled above"),
    }
}

/// Evaluates every grid point in every basis. Per-point failures become
/// `error:` rows; the sweep itself never aborts.
pub fn run_sweep(cfg: &SweepConfig) -> SweepResult {
    let bases: Vec<BasisSelection> = match cfg.recipe {
        Recipe::OverlapG | Recipe::ChiVsDelta | Recipe::ChiVsTheta => vec![cfg.bases[0]],
        _ => cfg.bases.clone(),
    };
    let points: Vec<(f64, BasisSelection)> =
        cfg.grid.values().into_iter().flat_map(|v| bases.iter().map(move |b| (v, *b))).collect();
    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(value, sel)| {
            let basis = match cfg.recipe {
                Recipe::OverlapG | Recipe::ChiVsDelta | Recipe::ChiVsTheta => "none".to_string(),
                _ => sel.to_string(),
            };
            match evaluate(cfg, value, sel) {
                Ok(p) => SweepRow {
                    value,
                    basis,
                    fidelity: p.fidelity,
                    p_plus: p.p_plus,
                    p_minus: p.p_minus,
                    status: if p.warnings.is_empty() { "ok".into() } else { format!("warn:{}", p.warnings.join(";")) },
                },
                Err(e) => SweepRow {
                    value,
                    basis,
                    fidelity: f64::NAN,
                    p_plus: f64::NAN,
                    p_minus: f64::NAN,
                    status: format!("error:{e}"),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.basis.cmp(&b.basis)));
    let mut header = vec![
        ("version".to_string(), format!("qfp-readout {VERSION}")),
        ("sweep_var".to_string(), cfg.recipe.sweep_var().to_string()),
        ("observable".to_string(), cfg.recipe.observable().to_string()),
    ];
    header.extend(cfg.echo());
    SweepResult { sweep_var: cfg.recipe.sweep_var().to_string(), header, rows }
}

/// Runs the sweep and writes it to `cfg.out_path` when set.
pub fn execute(cfg: &SweepConfig) -> std::io::Result<SweepResult> {
    let result = run_sweep(cfg);
    if let Some(path) = &cfg.out_path {
        result.write_atomic(path)?;
    }
    Ok(result)
}
