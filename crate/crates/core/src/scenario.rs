//! Config-driven scenario runner: parse a scenario file, run the simulation,
//! emit a CSV time series and a machine-readable summary.
//!
//! Scenario files are flat sectioned key=value documents:
//!
//! ```text
//! [model]
//! kind = displaced          # dispersive | displaced | jaynes_cummings | spin_boson_mode
//! omega0 = 1.0
//! nu = 1.0
//! g = 0.3
//! n_fock = 16
//! energy_unit = 1.0         # optional divisor applied to every energy key
//!
//! [initial]
//! spin = mixture            # excited | ground | mixture | superposition
//! c = 0.25
//! mode = thermal            # fock | coherent | thermal
//! kT = 1.0
//!
//! [bath.1]                  # optional, repeatable as bath.2, ...
//! partition = 1
//! type = thermal_qubit      # thermal_qubit | thermal_mode
//! kT = 0.8
//! gamma0 = 0.5
//!
//! [evolution]
//! t_final = 12.0
//! dt = 0.0005
//! sample_every = 2          # optional, default 1
//! integrator = rk4          # optional; exact (closed only) | rk4
//!
//! [outputs]
//! decomposition = true      # optional; refused with two baths
//! ```
//!
//! Unknown sections and unknown keys are rejected, and validation reports
//! every problem at once, each with its `section.key` path. `energy_unit`
//! divides all energy-valued keys at load time (times are already in units of
//! the inverse post-division energy), so parameter sets quoted in physical
//! units run internally at O(1) magnitudes.
//!
//! Runs are deterministic: one scenario per invocation, no randomness, and
//! byte-identical CSV output for identical configs.

use std::fmt;
use std::io::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::dynamics::{run_full, EvolutionSpec, Integrator, Trajectory};
use crate::entropy::{entropy_identity_residual, EntropyRecord};
use crate::error::{Error, Result};
use crate::flux::FluxSample;
use crate::models::{
    build_model, classify, initial_state, thermal_mode_bath, thermal_qubit_bath, BathSpec,
    CommutationClass, ModeState, ModelKind, ModelParams, SpinState,
};
use crate::operator::{commutator, kron, spectral_decomposition, Operator, Side};
use crate::tolerances as tol;

// ---------------------------------------------------------------------------
// configuration model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// `section.key` path of the offending field, or `section` / `line N`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub fn config_errors_to_error(errors: &[ConfigError]) -> Error {
    Error::Config(
        errors
            .iter()
            .map(|e| format!("  {e}"))
            .collect::<Vec<_>>()
            .join("\n"),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BathKind {
    ThermalQubit,
    ThermalMode,
}

#[derive(Clone, Copy, Debug)]
pub struct BathConfig {
    pub partition: Side,
    pub kind: BathKind,
    /// Temperature in the file's energy unit (pre-division).
    pub k_t: f64,
    pub gamma0: f64,
    /// Transition gap; defaults to the spin gap or the mode frequency.
    pub gap: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub omega0: f64,
    pub v: f64,
    pub nu: f64,
    pub g: f64,
    pub n_fock: usize,
    pub energy_unit: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum ModeConfig {
    Fock(usize),
    Coherent(f64),
    Thermal { k_t: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub integrator: Option<Integrator>,
}

#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub decomposition: bool,
    pub columns: Vec<Column>,
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    pub spin: SpinState,
    pub mode: ModeConfig,
    pub baths: Vec<BathConfig>,
    pub evolution: EvolutionConfig,
    pub outputs: OutputConfig,
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

struct RawEntry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

struct RawSection {
    name: String,
    entries: Vec<RawEntry>,
}

fn parse_raw(text: &str) -> (Vec<RawSection>, Vec<ConfigError>) {
    let mut sections: Vec<RawSection> = Vec::new();
    let mut errors = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                errors.push(ConfigError {
                    path: format!("line {line_no}"),
                    message: "unterminated section header".into(),
                });
                continue;
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if sections.iter().any(|s| s.name == name) {
                errors.push(ConfigError {
                    path: name.clone(),
                    message: format!("duplicate section (line {line_no})"),
                });
            }
            sections.push(RawSection {
                name,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                path: format!("line {line_no}"),
                message: format!("expected `key = value`, got `{line}`"),
            });
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        match sections.last_mut() {
            Some(section) => {
                if section.entries.iter().any(|e| e.key == key) {
                    errors.push(ConfigError {
                        path: format!("{}.{}", section.name, key),
                        message: format!("duplicate key (line {line_no})"),
                    });
                }
                section.entries.push(RawEntry {
                    key,
                    value,
                    line: line_no,
                    used: false,
                });
            }
            None => errors.push(ConfigError {
                path: format!("line {line_no}"),
                message: "key outside any [section]".into(),
            }),
        }
    }
    (sections, errors)
}

struct SectionReader<'a> {
    name: &'a str,
    entries: &'a mut Vec<RawEntry>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> SectionReader<'a> {
    fn err(&mut self, key: &str, message: String) {
        self.errors.push(ConfigError {
            path: format!("{}.{}", self.name, key),
            message,
        });
    }

    fn take(&mut self, key: &str) -> Option<String> {
        for e in self.entries.iter_mut() {
            if e.key == key && !e.used {
                e.used = true;
                return Some(e.value.clone());
            }
        }
        None
    }

    fn f64_opt(&mut self, key: &str) -> Option<f64> {
        let raw = self.take(key)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                self.err(key, format!("must be finite, got {v}"));
                None
            }
            Err(_) => {
                self.err(key, format!("expected a number, got `{raw}`"));
                None
            }
        }
    }

    fn f64_required(&mut self, key: &str) -> Option<f64> {
        match self.f64_opt(key) {
            Some(v) => Some(v),
            None => {
                if !self.entries.iter().any(|e| e.key == key) {
                    self.err(key, "missing required key".into());
                }
                None
            }
        }
    }

    fn usize_opt(&mut self, key: &str) -> Option<usize> {
        let raw = self.take(key)?;
        match raw.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(key, format!("expected a non-negative integer, got `{raw}`"));
                None
            }
        }
    }

    fn bool_opt(&mut self, key: &str) -> Option<bool> {
        let raw = self.take(key)?;
        match raw.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            other => {
                self.err(key, format!("expected true or false, got `{other}`"));
                None
            }
        }
    }

    fn finish(&mut self) {
        for e in self.entries.iter() {
            if !e.used {
                self.errors.push(ConfigError {
                    path: format!("{}.{}", self.name, e.key),
                    message: format!("unknown key (line {})", e.line),
                });
            }
        }
    }
}

/// Parse and validate a scenario document, returning either a complete config
/// or the full list of problems (never just the first).
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, Vec<ConfigError>> {
    let (mut sections, mut errors) = parse_raw(text);

    let known = |name: &str| {
        matches!(name, "model" | "initial" | "evolution" | "outputs")
            || name
                .strip_prefix("bath.")
                .is_some_and(|n| n.parse::<usize>().is_ok())
    };
    for s in &sections {
        if !known(&s.name) {
            errors.push(ConfigError {
                path: s.name.clone(),
                message: "unknown section".into(),
            });
        }
    }
    for required in ["model", "initial", "evolution"] {
        if !sections.iter().any(|s| s.name == required) {
            errors.push(ConfigError {
                path: required.into(),
                message: "missing required section".into(),
            });
        }
    }

    // --- model ---
    let mut model: Option<ModelConfig> = None;
    if let Some(sec) = sections.iter_mut().find(|s| s.name == "model") {
        let mut r = SectionReader {
            name: "model",
            entries: &mut sec.entries,
            errors: &mut errors,
        };
        let kind = match r.take("kind") {
            Some(raw) => match raw.parse::<ModelKind>() {
                Ok(k) => Some(k),
                Err(e) => {
                    r.err("kind", e.to_string());
                    None
                }
            },
            None => {
                r.err("kind", "missing required key".into());
                None
            }
        };
        let omega0 = r.f64_required("omega0");
        let v = r.f64_opt("v");
        let nu = r.f64_required("nu");
        let g = r.f64_required("g");
        let n_fock = r.usize_opt("n_fock");
        if n_fock.is_none() && !r.entries.iter().any(|e| e.key == "n_fock") {
            r.err("n_fock", "missing required key".into());
        }
        if let Some(n) = n_fock {
            if n < 2 {
                r.err("n_fock", format!("must be at least 2, got {n}"));
            }
        }
        let energy_unit = r.f64_opt("energy_unit").unwrap_or(1.0);
        if energy_unit <= 0.0 {
            r.err("energy_unit", format!("must be positive, got {energy_unit}"));
        }
        if let Some(kind) = kind {
            if v.is_some() && kind != ModelKind::SpinBosonMode {
                r.err("v", "only valid for kind = spin_boson_mode".into());
            }
            if let (Some(omega0), Some(nu), Some(g), Some(n_fock)) = (omega0, nu, g, n_fock) {
                model = Some(ModelConfig {
                    kind,
                    omega0,
                    v: v.unwrap_or(0.0),
                    nu,
                    g,
                    n_fock,
                    energy_unit,
                });
            }
        }
        r.finish();
    }

    // --- initial ---
    let mut spin: Option<SpinState> = None;
    let mut mode: Option<ModeConfig> = None;
    if let Some(sec) = sections.iter_mut().find(|s| s.name == "initial") {
        let mut r = SectionReader {
            name: "initial",
            entries: &mut sec.entries,
            errors: &mut errors,
        };
        match r.take("spin").as_deref() {
            Some("excited") => spin = Some(SpinState::Excited),
            Some("ground") => spin = Some(SpinState::Ground),
            Some("mixture") => match r.f64_required("c") {
                Some(c) if (0.0..=1.0).contains(&c) => spin = Some(SpinState::Mixture(c)),
                Some(c) => r.err("c", format!("must lie in [0,1], got {c}")),
                None => {}
            },
            Some("superposition") => {
                let theta = r.f64_required("theta");
                let phi = r.f64_opt("phi").unwrap_or(0.0);
                if let Some(theta) = theta {
                    spin = Some(SpinState::Superposition { theta, phi });
                }
            }
            Some(other) => r.err(
                "spin",
                format!("unknown spin state `{other}` (expected excited | ground | mixture | superposition)"),
            ),
            None => r.err("spin", "missing required key".into()),
        }
        match r.take("mode").as_deref() {
            Some("fock") => match r.usize_opt("n") {
                Some(n) => mode = Some(ModeConfig::Fock(n)),
                None => r.err("n", "missing required key for mode = fock".into()),
            },
            Some("coherent") => match r.f64_required("x0") {
                Some(x0) => mode = Some(ModeConfig::Coherent(x0)),
                None => {}
            },
            Some("thermal") => match r.f64_required("kT") {
                Some(k_t) if k_t > 0.0 => mode = Some(ModeConfig::Thermal { k_t }),
                Some(k_t) => r.err("kT", format!("must be positive, got {k_t}")),
                None => {}
            },
            Some(other) => r.err(
                "mode",
                format!("unknown mode state `{other}` (expected fock | coherent | thermal)"),
            ),
            None => r.err("mode", "missing required key".into()),
        }
        r.finish();
    }

    // --- baths ---
    let mut baths = Vec::new();
    let bath_names: Vec<String> = sections
        .iter()
        .filter(|s| s.name.starts_with("bath."))
        .map(|s| s.name.clone())
        .collect();
    for name in bath_names {
        let sec = sections.iter_mut().find(|s| s.name == name).unwrap();
        let mut r = SectionReader {
            name: &name,
            entries: &mut sec.entries,
            errors: &mut errors,
        };
        let partition = match r.take("partition").as_deref() {
            Some("1") => Some(Side::One),
            Some("2") => Some(Side::Two),
            Some(other) => {
                r.err("partition", format!("partition must be 1 or 2, got {other}"));
                None
            }
            None => {
                r.err("partition", "missing required key".into());
                None
            }
        };
        let kind = match r.take("type").as_deref() {
            Some("thermal_qubit") => Some(BathKind::ThermalQubit),
            Some("thermal_mode") => Some(BathKind::ThermalMode),
            Some(other) => {
                r.err(
                    "type",
                    format!("unknown bath type `{other}` (expected thermal_qubit | thermal_mode)"),
                );
                None
            }
            None => {
                r.err("type", "missing required key".into());
                None
            }
        };
        let k_t = r.f64_required("kT");
        let gamma0 = r.f64_required("gamma0");
        let gap = r.f64_opt("gap");
        if let (Some(partition), Some(kind)) = (partition, kind) {
            match (kind, partition) {
                (BathKind::ThermalQubit, Side::Two) => r.err(
                    "type",
                    "thermal_qubit acts on the spin; set partition = 1".into(),
                ),
                (BathKind::ThermalMode, Side::One) => r.err(
                    "type",
                    "thermal_mode acts on the oscillator; set partition = 2".into(),
                ),
                _ => {}
            }
            if let (Some(k_t), Some(gamma0)) = (k_t, gamma0) {
                if k_t <= 0.0 {
                    r.err("kT", format!("must be positive, got {k_t}"));
                } else if gamma0 <= 0.0 {
                    r.err("gamma0", format!("must be positive, got {gamma0}"));
                } else {
                    baths.push(BathConfig {
                        partition,
                        kind,
                        k_t,
                        gamma0,
                        gap,
                    });
                }
            }
        }
        r.finish();
    }

    // --- evolution ---
    let mut evolution: Option<EvolutionConfig> = None;
    if let Some(sec) = sections.iter_mut().find(|s| s.name == "evolution") {
        let mut r = SectionReader {
            name: "evolution",
            entries: &mut sec.entries,
            errors: &mut errors,
        };
        let t_final = r.f64_required("t_final");
        let dt = r.f64_required("dt");
        let sample_every = r.usize_opt("sample_every").unwrap_or(1);
        if sample_every == 0 {
            r.err("sample_every", "must be at least 1".into());
        }
        let integrator = match r.take("integrator").as_deref() {
            Some("exact") => Some(Integrator::ExactExp),
            Some("rk4") => Some(Integrator::Rk4),
            Some(other) => {
                r.err(
                    "integrator",
                    format!("unknown integrator `{other}` (expected exact | rk4)"),
                );
                None
            }
            None => None,
        };
        if let (Some(t_final), Some(dt)) = (t_final, dt) {
            if t_final <= 0.0 {
                r.err("t_final", format!("must be positive, got {t_final}"));
            } else if dt <= 0.0 {
                r.err("dt", format!("must be positive, got {dt}"));
            } else {
                evolution = Some(EvolutionConfig {
                    t_final,
                    dt,
                    sample_every: sample_every.max(1),
                    integrator,
                });
            }
        }
        r.finish();
    }
    if let Some(ev) = &evolution {
        if ev.integrator == Some(Integrator::ExactExp) && !baths.is_empty() {
            errors.push(ConfigError {
                path: "evolution.integrator".into(),
                message: "exact propagation requires a closed system; use rk4 with baths".into(),
            });
        }
    }

    // --- outputs ---
    let mut out_path = None;
    let mut decomposition: Option<bool> = None;
    let mut columns: Option<Vec<Column>> = None;
    if let Some(sec) = sections.iter_mut().find(|s| s.name == "outputs") {
        let mut r = SectionReader {
            name: "outputs",
            entries: &mut sec.entries,
            errors: &mut errors,
        };
        out_path = r.take("path");
        decomposition = r.bool_opt("decomposition");
        if let Some(raw) = r.take("columns") {
            let mut cols = Vec::new();
            for token in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match Column::from_name(token) {
                    Some(c) => cols.push(c),
                    None => r.err("columns", format!("unknown column `{token}`")),
                }
            }
            columns = Some(cols);
        }
        r.finish();
    }
    let decomposition = decomposition.unwrap_or(baths.len() <= 1);
    if decomposition && baths.len() > 1 {
        errors.push(ConfigError {
            path: "outputs.decomposition".into(),
            message: "the entropy decomposition assumes at most one bath; disable it".into(),
        });
    }
    let columns = columns.unwrap_or_else(|| Column::default_set(decomposition));
    if !decomposition {
        for c in &columns {
            if matches!(c, Column::DsIrr | Column::DsRev) {
                errors.push(ConfigError {
                    path: "outputs.columns".into(),
                    message: format!(
                        "column `{}` requires decomposition = true",
                        c.name()
                    ),
                });
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ScenarioConfig {
        name: "scenario".into(),
        model: model.expect("validated"),
        spin: spin.expect("validated"),
        mode: mode.expect("validated"),
        baths,
        evolution: evolution.expect("validated"),
        outputs: OutputConfig {
            path: out_path,
            decomposition,
            columns,
        },
    })
}

// ---------------------------------------------------------------------------
// running
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    /// Observed worst-case value (NaN when not applicable).
    pub observed: f64,
    pub threshold: f64,
}

impl CheckResult {
    fn evaluated(name: &str, observed: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            verdict: if observed <= threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            observed,
            threshold,
        }
    }

    fn not_applicable(name: &str) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::NotApplicable,
            observed: f64::NAN,
            threshold: f64::NAN,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropySummary {
    pub min_entropy_production: f64,
    pub max_identity_residual: Option<f64>,
    pub identity_asserted: bool,
}

/// Machine-readable outcome of one scenario run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub commutation_class: String,
    pub bath_partitions: Vec<u8>,
    pub integrator: String,
    pub samples: usize,
    pub hamiltonian_norm: f64,
    pub max_energy_drift: f64,
    pub max_first_law_residual: f64,
    pub max_heat_form_discrepancy: f64,
    pub max_trace_error: f64,
    pub min_state_eigenvalue: f64,
    pub checks: Vec<CheckResult>,
    pub entropy: Option<EntropySummary>,
    pub warnings: Vec<String>,
    pub duration_seconds: f64,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }
}

/// A completed scenario: trajectory, optional entropy series and verdicts.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub entropy: Option<Vec<EntropyRecord>>,
    pub summary: RunSummary,
}

fn build_baths(cfg: &ScenarioConfig, params: &ModelParams, spin_gap: f64) -> Result<Vec<BathSpec>> {
    let unit = cfg.model.energy_unit;
    cfg.baths
        .iter()
        .map(|b| {
            let beta = unit / b.k_t;
            let gamma0 = b.gamma0 / unit;
            match b.kind {
                BathKind::ThermalQubit => {
                    let gap = b.gap.map(|g| g / unit).unwrap_or(spin_gap);
                    thermal_qubit_bath(beta, gap, gamma0)
                }
                BathKind::ThermalMode => {
                    let gap = b.gap.map(|g| g / unit).unwrap_or(params.nu);
                    thermal_mode_bath(beta, gap, gamma0, params.n_fock)
                }
            }
        })
        .collect()
}

/// A scenario config turned into runnable objects, in internal units.
pub struct RealizedScenario {
    pub params: ModelParams,
    pub sys: crate::models::BipartiteSystem,
    pub initial: crate::models::InitialState,
    pub baths: Vec<BathSpec>,
    pub evolution: EvolutionSpec,
    pub warnings: Vec<String>,
}

/// Apply the energy unit and build the system, initial state, baths and
/// evolution spec a config describes.
pub fn realize_config(cfg: &ScenarioConfig) -> Result<RealizedScenario> {
    let unit = cfg.model.energy_unit;
    let params = ModelParams {
        omega0: cfg.model.omega0 / unit,
        v: cfg.model.v / unit,
        nu: cfg.model.nu / unit,
        g: cfg.model.g / unit,
        n_fock: cfg.model.n_fock,
        c: match cfg.spin {
            SpinState::Mixture(c) => c,
            _ => 0.0,
        },
        x0: match cfg.mode {
            ModeConfig::Coherent(x0) => x0,
            _ => 0.0,
        },
        beta2: match cfg.mode {
            ModeConfig::Thermal { k_t } => unit / k_t,
            _ => 1.0,
        },
    };
    let sys = build_model(cfg.model.kind, &params)?;

    let mode_state = match cfg.mode {
        ModeConfig::Fock(n) => ModeState::Fock(n),
        ModeConfig::Coherent(x0) => ModeState::Coherent(x0),
        ModeConfig::Thermal { k_t } => ModeState::Thermal(unit / k_t),
    };
    let initial = initial_state(cfg.spin, mode_state, &params)?;
    let mut warnings = Vec::new();
    if let Some(w) = initial.leakage_warning() {
        warnings.push(w);
    }

    let h1_spec = spectral_decomposition(sys.local_hamiltonian(Side::One))?;
    let spin_gap = h1_spec.eigenvalues[h1_spec.eigenvalues.len() - 1] - h1_spec.eigenvalues[0];
    let baths = build_baths(cfg, &params, spin_gap)?;

    let integrator = cfg.evolution.integrator.unwrap_or(if baths.is_empty() {
        Integrator::ExactExp
    } else {
        Integrator::Rk4
    });
    let evolution = EvolutionSpec {
        sys: sys.clone(),
        baths: baths.clone(),
        t_final: cfg.evolution.t_final,
        dt: cfg.evolution.dt,
        sample_every: cfg.evolution.sample_every,
        integrator,
    };
    if integrator == Integrator::Rk4 {
        let bound = tol::RK4_STABILITY_FACTOR / sys.total_hamiltonian().max_norm().max(1e-300);
        if cfg.evolution.dt > bound {
            warnings.push(format!(
                "dt = {} exceeds the recommended stability bound {bound:.3e}",
                cfg.evolution.dt
            ));
        }
    }
    Ok(RealizedScenario {
        params,
        sys,
        initial,
        baths,
        evolution,
        warnings,
    })
}

/// Execute a scenario: build the model, run the dynamics, compute the
/// structural verdicts for its commutation class. Deterministic for a fixed
/// config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let started = Instant::now();
    let realized = realize_config(cfg)?;
    let class = classify(&realized.sys);

    let (trajectory, records) = run_full(&realized.evolution, &realized.initial.rho)?;
    let entropy = if cfg.outputs.decomposition { records } else { None };

    let summary = summarize(
        cfg,
        &realized.sys,
        class,
        &realized.baths,
        realized.evolution.integrator,
        &trajectory,
        entropy.as_deref(),
        realized.warnings.clone(),
        started.elapsed().as_secs_f64(),
    )?;
    Ok(ScenarioRun {
        trajectory,
        entropy,
        summary,
    })
}

fn max_over(samples: &[FluxSample], f: impl Fn(&FluxSample) -> f64) -> f64 {
    samples.iter().map(f).fold(0.0_f64, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    cfg: &ScenarioConfig,
    sys: &crate::models::BipartiteSystem,
    class: CommutationClass,
    baths: &[BathSpec],
    integrator: Integrator,
    traj: &Trajectory,
    entropy: Option<&[EntropyRecord]>,
    warnings: Vec<String>,
    duration_seconds: f64,
) -> Result<RunSummary> {
    let samples = &traj.samples;
    let scale = traj.h_norm;
    let closed = baths.is_empty();
    let mut checks = Vec::new();

    checks.push(CheckResult::evaluated(
        "trace_preserved",
        max_over(samples, |s| s.trace_err),
        tol::TRACE_ERR_MAX,
    ));
    let first_law = traj
        .first_law_residual(Side::One)
        .max(traj.first_law_residual(Side::Two));
    checks.push(CheckResult::evaluated(
        "first_law",
        first_law,
        tol::FIRST_LAW,
    ));
    checks.push(CheckResult::evaluated(
        "heat_form_equivalence",
        traj.max_heat_form_discrepancy,
        tol::HEAT_FORM_AGREEMENT * scale.max(1.0),
    ));
    checks.push(if closed {
        CheckResult::evaluated("energy_conserved", traj.energy_drift(), tol::ENERGY_DRIFT_REL)
    } else {
        CheckResult::not_applicable("energy_conserved")
    });

    // structural checks per commutation class and bath layout
    let work_sum = max_over(samples, |s| (s.w1 + s.w2).abs());
    let heat_sum = max_over(samples, |s| (s.q1 + s.q2).abs());
    let bath_sides: Vec<Side> = baths.iter().map(|b| b.partition).collect();
    let only_on = |side: Side| !bath_sides.is_empty() && bath_sides.iter().all(|&s| s == side);

    match class {
        CommutationClass::FullyCommuting => {
            if closed {
                let fluxes = max_over(samples, |s| {
                    s.w1.abs().max(s.w2.abs()).max(s.q1.abs()).max(s.q2.abs())
                });
                checks.push(CheckResult::evaluated(
                    "fluxes_zero",
                    fluxes,
                    tol::FLUX_ZERO_REL * scale,
                ));
            } else if only_on(Side::One) {
                checks.push(CheckResult::evaluated(
                    "w1_zero",
                    max_over(samples, |s| s.w1.abs()),
                    tol::FLUX_SUM_REL * scale,
                ));
                checks.push(CheckResult::evaluated(
                    "q2_zero",
                    max_over(samples, |s| s.q2.abs()),
                    tol::OPEN_HEAT_ZERO * scale.max(1.0),
                ));
            } else if only_on(Side::Two) {
                checks.push(CheckResult::evaluated(
                    "w2_zero",
                    max_over(samples, |s| s.w2.abs()),
                    tol::FLUX_SUM_REL * scale,
                ));
                checks.push(CheckResult::evaluated(
                    "q1_zero",
                    max_over(samples, |s| s.q1.abs()),
                    tol::OPEN_HEAT_ZERO * scale.max(1.0),
                ));
            }
            // thermalization: all fluxes die out after ~10 relaxation times
            if !closed {
                let gamma_min = cfg
                    .baths
                    .iter()
                    .map(|b| b.gamma0 / cfg.model.energy_unit)
                    .fold(f64::INFINITY, f64::min);
                let settle = 10.0 / gamma_min;
                if cfg.evolution.t_final >= settle {
                    let late = samples.iter().filter(|s| s.t >= settle);
                    let worst = late
                        .map(|s| {
                            s.w1.abs()
                                .max(s.w2.abs())
                                .max(s.q1.abs())
                                .max(s.q2.abs())
                                .max(s.q1_bath.abs())
                        })
                        .fold(0.0_f64, f64::max);
                    checks.push(CheckResult::evaluated(
                        "steady_state_fluxes_zero",
                        worst,
                        tol::STEADY_STATE_FLUX,
                    ));
                } else {
                    checks.push(CheckResult::not_applicable("steady_state_fluxes_zero"));
                }
            }
        }
        CommutationClass::PartiallyCommuting1 => {
            if closed || only_on(Side::One) {
                checks.push(CheckResult::evaluated(
                    "work_sum_zero",
                    work_sum,
                    tol::FLUX_SUM_REL * scale,
                ));
            }
            if closed {
                checks.push(CheckResult::evaluated(
                    "q1_zero",
                    max_over(samples, |s| s.q1.abs()),
                    tol::FLUX_SUM_REL * scale,
                ));
            } else if only_on(Side::Two) {
                // the commuting, bath-free partition receives no heat
                checks.push(CheckResult::evaluated(
                    "q1_zero",
                    max_over(samples, |s| s.q1.abs()),
                    tol::OPEN_HEAT_ZERO * scale.max(1.0),
                ));
            }
        }
        CommutationClass::PartiallyCommuting2 => {
            if closed || only_on(Side::Two) {
                checks.push(CheckResult::evaluated(
                    "work_sum_zero",
                    work_sum,
                    tol::FLUX_SUM_REL * scale,
                ));
            }
            if closed {
                checks.push(CheckResult::evaluated(
                    "q2_zero",
                    max_over(samples, |s| s.q2.abs()),
                    tol::FLUX_SUM_REL * scale,
                ));
            } else if only_on(Side::One) {
                checks.push(CheckResult::evaluated(
                    "q2_zero",
                    max_over(samples, |s| s.q2.abs()),
                    tol::OPEN_HEAT_ZERO * scale.max(1.0),
                ));
            }
        }
        CommutationClass::NonCommuting => {
            // the conservation pair only applies on resonance,
            // [H₁⊗I, H₁₂] = −[I⊗H₂, H₁₂]
            let (d1, d2) = sys.dims();
            let h12 = sys.interaction_operator();
            let c1 = commutator(
                &kron(sys.local_hamiltonian(Side::One), &Operator::identity(d2)),
                &h12,
            )?;
            let c2 = commutator(
                &kron(&Operator::identity(d1), sys.local_hamiltonian(Side::Two)),
                &h12,
            )?;
            let resonant = c1.add(&c2).max_norm() <= tol::COMMUTATION_REL * scale.max(1.0);
            if resonant {
                checks.push(CheckResult::evaluated(
                    "work_sum_zero",
                    work_sum,
                    tol::FLUX_SUM_REL * scale,
                ));
                if closed {
                    checks.push(CheckResult::evaluated(
                        "heat_sum_zero",
                        heat_sum,
                        tol::FLUX_SUM_REL * scale,
                    ));
                } else {
                    checks.push(CheckResult::not_applicable("heat_sum_zero"));
                }
            } else {
                checks.push(CheckResult::not_applicable("work_sum_zero"));
                checks.push(CheckResult::not_applicable("heat_sum_zero"));
            }
        }
    }

    let entropy_summary = entropy.map(|records| {
        let min_irr = records
            .iter()
            .map(|r| r.s_irr)
            .fold(f64::INFINITY, f64::min);
        checks.push(CheckResult::evaluated(
            "entropy_production_nonnegative",
            -min_irr,
            tol::ENTROPY_PRODUCTION_FLOOR,
        ));
        let identity_asserted = closed;
        let max_residual = records
            .iter()
            .filter_map(entropy_identity_residual)
            .fold(0.0_f64, f64::max);
        checks.push(if identity_asserted {
            CheckResult::evaluated("entropy_identity", max_residual, tol::ENTROPY_IDENTITY)
        } else {
            CheckResult::not_applicable("entropy_identity")
        });
        EntropySummary {
            min_entropy_production: min_irr,
            max_identity_residual: Some(max_residual),
            identity_asserted,
        }
    });

    Ok(RunSummary {
        scenario: cfg.name.clone(),
        commutation_class: class.as_str().into(),
        bath_partitions: cfg.baths.iter().map(|b| b.partition.index() as u8).collect(),
        integrator: match integrator {
            Integrator::ExactExp => "exact".into(),
            Integrator::Rk4 => "rk4".into(),
        },
        samples: samples.len(),
        hamiltonian_norm: scale,
        max_energy_drift: traj.energy_drift(),
        max_first_law_residual: first_law,
        max_heat_form_discrepancy: traj.max_heat_form_discrepancy,
        max_trace_error: max_over(samples, |s| s.trace_err),
        min_state_eigenvalue: samples
            .iter()
            .map(|s| s.min_eig)
            .fold(f64::INFINITY, f64::min),
        checks,
        entropy: entropy_summary,
        warnings,
        duration_seconds,
    })
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    T,
    W1dot,
    Q1dot,
    W2dot,
    Q2dot,
    Q1dotBath,
    U1,
    U2,
    W1cum,
    Q1cum,
    S1,
    Ds1,
    DsIrr,
    DsRev,
    CorrNorm,
    ETotal,
    TraceErr,
    MinEig,
}

impl Column {
    pub const fn name(self) -> &'static str {
        match self {
            Column::T => "t",
            Column::W1dot => "W1dot",
            Column::Q1dot => "Q1dot",
            Column::W2dot => "W2dot",
            Column::Q2dot => "Q2dot",
            Column::Q1dotBath => "Q1dot_bath",
            Column::U1 => "U1",
            Column::U2 => "U2",
            Column::W1cum => "W1cum",
            Column::Q1cum => "Q1cum",
            Column::S1 => "S1",
            Column::Ds1 => "dS1",
            Column::DsIrr => "dS_irr",
            Column::DsRev => "dS_rev",
            Column::CorrNorm => "corr_norm",
            Column::ETotal => "E_total",
            Column::TraceErr => "trace_err",
            Column::MinEig => "min_eig",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|c| c.name() == name)
    }

    pub fn all() -> [Column; 18] {
        [
            Column::T,
            Column::W1dot,
            Column::Q1dot,
            Column::W2dot,
            Column::Q2dot,
            Column::Q1dotBath,
            Column::U1,
            Column::U2,
            Column::W1cum,
            Column::Q1cum,
            Column::S1,
            Column::Ds1,
            Column::DsIrr,
            Column::DsRev,
            Column::CorrNorm,
            Column::ETotal,
            Column::TraceErr,
            Column::MinEig,
        ]
    }

    /// The full column set, with the decomposition columns dropped when the
    /// decomposition is off.
    pub fn default_set(decomposition: bool) -> Vec<Column> {
        Self::all()
            .into_iter()
            .filter(|c| decomposition || !matches!(c, Column::DsIrr | Column::DsRev))
            .collect()
    }
}

/// Write the per-sample table. Full double precision (shortest round-trip
/// decimal), '.' radix, ',' separator, '\n' line endings; byte-identical for
/// identical inputs.
pub fn emit_csv(
    traj: &Trajectory,
    entropy: Option<&[EntropyRecord]>,
    columns: &[Column],
    path: &std::path::Path,
) -> Result<()> {
    let mut out = Vec::with_capacity(traj.samples.len() * 160 + 256);
    let header: Vec<&str> = columns.iter().map(|c| c.name()).collect();
    out.extend_from_slice(header.join(",").as_bytes());
    out.push(b'\n');
    let s1_0 = traj.samples.first().map(|s| s.s1).unwrap_or(0.0);
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = String::with_capacity(160);
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                row.push(',');
            }
            let value = match col {
                Column::T => s.t,
                Column::W1dot => s.w1,
                Column::Q1dot => s.q1,
                Column::W2dot => s.w2,
                Column::Q2dot => s.q2,
                Column::Q1dotBath => s.q1_bath,
                Column::U1 => s.u1,
                Column::U2 => s.u2,
                Column::W1cum => traj.w1_cum[k],
                Column::Q1cum => traj.q1_cum[k],
                Column::S1 => s.s1,
                Column::Ds1 => s.s1 - s1_0,
                Column::DsIrr => entropy.map(|r| r[k].s_irr).unwrap_or(f64::NAN),
                Column::DsRev => entropy.map(|r| r[k].s_rev).unwrap_or(f64::NAN),
                Column::CorrNorm => s.corr_norm,
                Column::ETotal => s.e_total,
                Column::TraceErr => s.trace_err,
                Column::MinEig => s.min_eig,
            };
            row.push_str(&format!("{value}"));
        }
        row.push('\n');
        out.extend_from_slice(row.as_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Serialize the summary with stable field names.
pub fn summary_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn write_summary_json(summary: &RunSummary, path: &std::path::Path) -> Result<()> {
    let body = summary_json(summary);
    let mut file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    file.write_all(body.as_bytes()).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
