//! Config ingestion, mode dispatch and record/table output for `fconc`.
//!
//! Config files are TOML tagged with `schema = "fconc-config/1"`. Records are
//! JSON tagged with `schema = "fconc-record/1"` and carry the fully resolved
//! config under `config`; feeding a record back through `--config` replays
//! the run.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::estimator::{estimate, EstimateReport, TrialConfig, DEFAULT_TRIALS};
use crate::faraday::{
    empty_cavity_coefficient, perturbed_phases, phases_from_params, reflection_coefficient,
    CavityParams, FaradayPhases,
};
use crate::imperfect::{
    recover_concurrence_with, ImperfectionParams, LeakModel, RecoveredConcurrence,
};
use crate::linalg::Mat4;
use crate::oracle::{
    concurrence_mixed, concurrence_pure, concurrence_pure_general, wootters_lambdas, DensityMatrix,
};
use crate::protocol::{closed_form_outcome, run_analytic, TwoPhotonState};
use crate::qstate::C64;

pub const CONFIG_SCHEMA: &str = "fconc-config/1";
pub const RECORD_SCHEMA: &str = "fconc-record/1";
pub const SWEEP_COLUMNS: [&str; 9] = [
    "axis_value",
    "p1",
    "p2",
    "p_total",
    "c_est",
    "c_corrected",
    "oracle_c",
    "ci_low",
    "ci_high",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 config, 3 numerical failure, 4 inconsistent observation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                Error::Config(_) | Error::InvalidParameter(_) | Error::DuplicateLabel(_) => 2,
                Error::InconsistentObservation { .. } | Error::NonInvertible(_) => 4,
                _ => 3,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Oracle,
    Phases,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Sigma,
    EtaA,
    Trials,
    /// state cos θ|RR⟩ + sin θ|LL⟩
    Theta,
}

// ---- config document -------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imperfections: Option<ImperfectionsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDoc>,
}

/// Amplitudes as `[re, im]` pairs; missing ones are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    #[serde(default)]
    pub alpha: [f64; 2],
    #[serde(default)]
    pub beta: [f64; 2],
    #[serde(default)]
    pub gamma: [f64; 2],
    #[serde(default)]
    pub delta: [f64; 2],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_model: Option<LeakModel>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDoc {
    /// 4×4 rows of `[re, im]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_matrix: Option<[[[f64; 2]; 4]; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Accepts a TOML config, a JSON config, or a JSON record (its `config`).
pub fn parse_document(text: &str) -> CliResult<ConfigDoc> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) if value.get("schema").and_then(|s| s.as_str()) == Some(RECORD_SCHEMA) => {
                c.clone()
            }
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

// ---- resolved config -------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub state: Option<TwoPhotonState>,
    pub trials: u64,
    pub seed: u64,
    pub imperfections: ImperfectionParams,
    pub leak_model: LeakModel,
    pub cavity: Option<CavityParams>,
    pub density_matrix: Option<Mat4>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<PathBuf>,
}

fn pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn unpair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

/// Norm within 1e-6 of 1 is accepted, within 1e-3 rescaled with a notice,
/// anything further rejected.
fn ingest_state(doc: &StateDoc) -> CliResult<TwoPhotonState> {
    let amps = [doc.alpha, doc.beta, doc.gamma, doc.delta].map(pair);
    if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(CliError::Config("state amplitudes must be finite".into()));
    }
    let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let norm = norm_sqr.sqrt();
    let dev = (norm - 1.0).abs();
    if dev > 1e-3 {
        return Err(CliError::Config(format!(
            "state amplitudes have norm {norm}, expected 1"
        )));
    }
    if dev > 1e-6 {
        log::info!("state norm {norm} rescaled to 1");
    }
    let state = if (norm_sqr - 1.0).abs() <= 1e-12 {
        TwoPhotonState::new(amps[0], amps[1], amps[2], amps[3])
    } else {
        TwoPhotonState::normalized(amps[0], amps[1], amps[2], amps[3])
    };
    Ok(state?)
}

impl RunConfig {
    pub fn from_doc(doc: &ConfigDoc) -> CliResult<Self> {
        if let Some(schema) = &doc.schema {
            if schema != CONFIG_SCHEMA {
                return Err(CliError::Config(format!(
                    "schema: unsupported value {schema:?}, expected {CONFIG_SCHEMA:?}"
                )));
            }
        }
        let mode = doc.mode.ok_or_else(|| {
            CliError::Config("mode: missing (set it in the config or pass --mode)".into())
        })?;
        let state = doc.state.as_ref().map(ingest_state).transpose()?;
        let sim = doc.simulation.unwrap_or_default();
        let trials = sim.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Config(
                "simulation.trials: must be at least 1".into(),
            ));
        }
        let imp = doc.imperfections.unwrap_or_default();
        let imperfections =
            ImperfectionParams::new(imp.eta_a.unwrap_or(1.0), imp.sigma.unwrap_or(0.0))
                .map_err(|e| CliError::Config(format!("imperfections: {e}")))?;
        if let Some(c) = &doc.cavity {
            c.validate()
                .map_err(|e| CliError::Config(format!("cavity: {e}")))?;
        }
        let density_matrix = doc
            .oracle
            .and_then(|o| o.density_matrix)
            .map(|m| m.map(|row| row.map(pair)));
        let sweep = doc
            .sweep
            .map(|s| {
                if s.steps < 2 {
                    return Err(CliError::Config(format!(
                        "sweep.steps: must be >= 2, got {}",
                        s.steps
                    )));
                }
                if !(s.start.is_finite() && s.stop.is_finite()) {
                    return Err(CliError::Config("sweep.start/stop: must be finite".into()));
                }
                Ok(SweepSpec {
                    axis: s.axis,
                    start: s.start,
                    stop: s.stop,
                    steps: s.steps,
                })
            })
            .transpose()?;

        let needs_state = match mode {
            Mode::Analytic | Mode::Simulate => true,
            Mode::Oracle => density_matrix.is_none(),
            Mode::Sweep => !matches!(
                sweep,
                Some(SweepSpec {
                    axis: SweepAxis::Theta,
                    ..
                })
            ),
            Mode::Phases => false,
        };
        if needs_state && state.is_none() {
            return Err(CliError::Config("state: required for this mode".into()));
        }
        if mode == Mode::Phases && doc.cavity.is_none() {
            return Err(CliError::Config("cavity: required for phases mode".into()));
        }
        if mode == Mode::Sweep && sweep.is_none() {
            return Err(CliError::Config("sweep: required for sweep mode".into()));
        }

        Ok(Self {
            mode,
            state,
            trials,
            seed: sim.seed.unwrap_or(0),
            imperfections,
            leak_model: imp.leak_model.unwrap_or_default(),
            cavity: doc.cavity,
            density_matrix,
            sweep,
            output: doc.output.as_ref().and_then(|o| o.path.clone()),
        })
    }

    /// The resolved config with every default spelled out.
    pub fn to_doc(&self) -> ConfigDoc {
        ConfigDoc {
            schema: Some(CONFIG_SCHEMA.to_string()),
            mode: Some(self.mode),
            state: self.state.map(|s| StateDoc {
                alpha: unpair(s.alpha),
                beta: unpair(s.beta),
                gamma: unpair(s.gamma),
                delta: unpair(s.delta),
            }),
            simulation: Some(SimulationDoc {
                trials: Some(self.trials),
                seed: Some(self.seed),
            }),
            imperfections: Some(ImperfectionsDoc {
                eta_a: Some(self.imperfections.eta_a),
                sigma: Some(self.imperfections.sigma),
                leak_model: Some(self.leak_model),
            }),
            cavity: self.cavity,
            oracle: self.density_matrix.map(|m| OracleDoc {
                density_matrix: Some(m.map(|row| row.map(unpair))),
            }),
            sweep: self.sweep.map(|s| SweepDoc {
                axis: s.axis,
                start: s.start,
                stop: s.stop,
                steps: s.steps,
            }),
            output: self.output.clone().map(|p| OutputDoc { path: Some(p) }),
        }
    }

    /// Cavity-derived phases when a cavity is configured, otherwise the ideal
    /// phases rotated by `sigma`.
    pub fn phases(&self) -> Result<FaradayPhases, Error> {
        match &self.cavity {
            Some(c) => phases_from_params(c),
            None => perturbed_phases(self.imperfections.sigma),
        }
    }
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    RunConfig::from_doc(&parse_document(text)?)
}

// ---- command line ----------------------------------------------------------

#[derive(Debug, Default, Parser)]
#[command(
    name = "fconc",
    version,
    about = "Concurrence measurement via photonic Faraday rotation"
)]
pub struct Cli {
    /// TOML config or a previous JSON record
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// atom detection efficiency
    #[arg(long)]
    pub eta: Option<f64>,
    /// rotation-angle error (rad)
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// α β γ δ as eight numbers: re,im,re,im,re,im,re,im
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<String>,
    #[arg(long)]
    pub omega_c: Option<f64>,
    #[arg(long)]
    pub omega_p: Option<f64>,
    #[arg(long)]
    pub omega_0: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// atomic decay rate
    #[arg(long)]
    pub gamma: Option<f64>,
    /// atom–field coupling
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl Cli {
    /// Flags win over config values.
    pub fn apply(&self, doc: &mut ConfigDoc) -> CliResult<()> {
        if self.mode.is_some() {
            doc.mode = self.mode;
        }
        if self.trials.is_some() || self.seed.is_some() {
            let sim = doc.simulation.get_or_insert_with(Default::default);
            sim.trials = self.trials.or(sim.trials);
            sim.seed = self.seed.or(sim.seed);
        }
        if self.eta.is_some() || self.sigma.is_some() {
            let imp = doc.imperfections.get_or_insert_with(Default::default);
            imp.eta_a = self.eta.or(imp.eta_a);
            imp.sigma = self.sigma.or(imp.sigma);
        }
        if let Some(text) = &self.state {
            let v: Vec<f64> = text
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("--state: {e}")))?;
            if v.len() != 8 {
                return Err(CliError::Config(format!(
                    "--state: expected 8 numbers, got {}",
                    v.len()
                )));
            }
            doc.state = Some(StateDoc {
                alpha: [v[0], v[1]],
                beta: [v[2], v[3]],
                gamma: [v[4], v[5]],
                delta: [v[6], v[7]],
            });
        }
        let cavity_flags = [
            self.omega_c,
            self.omega_p,
            self.omega_0,
            self.kappa,
            self.gamma,
            self.lambda,
        ];
        if cavity_flags.iter().any(Option::is_some) {
            let base = doc.cavity;
            let pick = |flag: Option<f64>, name: &str, from: Option<f64>| {
                flag.or(from)
                    .ok_or_else(|| CliError::Config(format!("cavity.{name}: missing")))
            };
            doc.cavity = Some(CavityParams {
                omega_c: pick(self.omega_c, "omega_c", base.map(|c| c.omega_c))?,
                omega_p: pick(self.omega_p, "omega_p", base.map(|c| c.omega_p))?,
                omega_0: pick(self.omega_0, "omega_0", base.map(|c| c.omega_0))?,
                kappa: pick(self.kappa, "kappa", base.map(|c| c.kappa))?,
                gamma: pick(self.gamma, "gamma", base.map(|c| c.gamma))?,
                lambda: pick(self.lambda, "lambda", base.map(|c| c.lambda))?,
            });
        }
        if let Some(p) = &self.out {
            doc.output = Some(OutputDoc {
                path: Some(p.clone()),
            });
        }
        Ok(())
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut doc = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_document(&text)?
            }
            None => ConfigDoc::default(),
        };
        self.apply(&mut doc)?;
        RunConfig::from_doc(&doc)
    }
}

// ---- records ---------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct Record<T: Serialize> {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub mode: Mode,
    pub config: ConfigDoc,
    pub results: T,
}

#[derive(Debug, Serialize)]
pub struct PhasesSummary {
    pub phi: f64,
    pub phi0: f64,
    pub rotation: f64,
    pub r_modulus: f64,
    pub r0_modulus: f64,
}

impl From<&FaradayPhases> for PhasesSummary {
    fn from(p: &FaradayPhases) -> Self {
        Self {
            phi: p.phi(),
            phi0: p.phi0(),
            rotation: p.rotation(),
            r_modulus: p.r_modulus(),
            r0_modulus: p.r0_modulus(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ProbabilityTriple {
    pub p1: f64,
    pub p2: f64,
    pub p_total: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalyticResults {
    pub phases: PhasesSummary,
    /// exact simulation at the configured phases (leakage included)
    pub p1: f64,
    pub p2: f64,
    pub p_total: f64,
    pub c_estimate: f64,
    /// ideal-phase closed forms
    pub closed_form: ProbabilityTriple,
    pub oracle_c: f64,
    /// what a detector with efficiency eta_a would record
    pub observed: ProbabilityTriple,
    pub corrected: RecoveredConcurrence,
}

#[derive(Debug, Serialize)]
pub struct SimulateResults {
    pub phases: PhasesSummary,
    pub estimate: EstimateReport,
    pub analytic_p_total: f64,
    pub oracle_c: f64,
}

#[derive(Debug, Serialize)]
pub struct OracleResults {
    /// present for amplitude input
    pub concurrence_pure: Option<f64>,
    pub concurrence_pure_general: Option<f64>,
    pub concurrence_mixed: f64,
    pub lambdas: [f64; 4],
}

#[derive(Debug, Serialize)]
pub struct PhasesResults {
    pub r: [f64; 2],
    pub r0: [f64; 2],
    pub phases: PhasesSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub p1: f64,
    pub p2: f64,
    pub p_total: f64,
    pub c_est: f64,
    pub c_corrected: f64,
    pub oracle_c: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SweepRow {
    fn fields(&self) -> [f64; 9] {
        [
            self.axis_value,
            self.p1,
            self.p2,
            self.p_total,
            self.c_est,
            self.c_corrected,
            self.oracle_c,
            self.ci_low,
            self.ci_high,
        ]
    }
}

#[derive(Debug, Serialize)]
pub struct SweepResults {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// What one invocation produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    /// JSON record
    pub record: String,
    /// CSV table (sweep mode only)
    pub table: Option<String>,
}

fn render<T: Serialize>(config: &RunConfig, results: T) -> CliResult<String> {
    let record = Record {
        schema: RECORD_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        mode: config.mode,
        config: config.to_doc(),
        results,
    };
    serde_json::to_string_pretty(&record).map_err(|e| CliError::Config(e.to_string()))
}

fn require_state(config: &RunConfig) -> CliResult<TwoPhotonState> {
    config
        .state
        .ok_or_else(|| CliError::Config("state: required for this mode".into()))
}

fn analytic(config: &RunConfig) -> CliResult<AnalyticResults> {
    let state = require_state(config)?;
    let phases = config.phases()?;
    let exact = run_analytic(&state, &phases)?;
    let ideal = closed_form_outcome(&state);
    let eta = config.imperfections.eta_a;
    let observed = ProbabilityTriple {
        p1: exact.p1 * eta * eta,
        p2: exact.p2 * eta,
        p_total: exact.p_total * eta.powi(3),
    };
    let corrected = recover_concurrence_with(
        observed.p1,
        observed.p2,
        &config.imperfections,
        config.leak_model,
    )?;
    Ok(AnalyticResults {
        phases: (&phases).into(),
        p1: exact.p1,
        p2: exact.p2,
        p_total: exact.p_total,
        c_estimate: exact.c_estimate,
        closed_form: ProbabilityTriple {
            p1: ideal.p1,
            p2: ideal.p2,
            p_total: ideal.p_total,
        },
        oracle_c: concurrence_pure(&state),
        observed,
        corrected,
    })
}

fn trial_config(config: &RunConfig, state: TwoPhotonState, phases: FaradayPhases) -> TrialConfig {
    TrialConfig {
        n_trials: config.trials,
        master_seed: config.seed,
        state,
        phases,
        imperfections: config.imperfections,
        leak_model: config.leak_model,
    }
}

fn simulate(config: &RunConfig) -> CliResult<SimulateResults> {
    let state = require_state(config)?;
    let phases = config.phases()?;
    let report = estimate(&trial_config(config, state, phases))?;
    Ok(SimulateResults {
        phases: (&phases).into(),
        estimate: report,
        analytic_p_total: run_analytic(&state, &phases)?.p_total,
        oracle_c: concurrence_pure(&state),
    })
}

fn oracle(config: &RunConfig) -> CliResult<OracleResults> {
    match (&config.density_matrix, &config.state) {
        (Some(m), _) => {
            let rho = DensityMatrix::new(*m)?;
            Ok(OracleResults {
                concurrence_pure: None,
                concurrence_pure_general: None,
                concurrence_mixed: concurrence_mixed(&rho)?,
                lambdas: wootters_lambdas(&rho)?,
            })
        }
        (None, Some(s)) => {
            let rho = DensityMatrix::pure(&s.amplitudes())?;
            Ok(OracleResults {
                concurrence_pure: Some(concurrence_pure(s)),
                concurrence_pure_general: Some(concurrence_pure_general(&s.amplitudes())),
                concurrence_mixed: concurrence_mixed(&rho)?,
                lambdas: wootters_lambdas(&rho)?,
            })
        }
        (None, None) => Err(CliError::Config(
            "oracle mode needs state or oracle.density_matrix".into(),
        )),
    }
}

fn phases_mode(config: &RunConfig) -> CliResult<PhasesResults> {
    let cavity = config
        .cavity
        .ok_or_else(|| CliError::Config("cavity: required for phases mode".into()))?;
    let r = reflection_coefficient(&cavity)?;
    let r0 = empty_cavity_coefficient(&cavity)?;
    Ok(PhasesResults {
        r: unpair(r),
        r0: unpair(r0),
        phases: (&phases_from_params(&cavity)?).into(),
    })
}

pub fn sweep_rows(config: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let spec = config
        .sweep
        .ok_or_else(|| CliError::Config("sweep: required for sweep mode".into()))?;
    let mut rows = Vec::with_capacity(spec.steps);
    for value in spec.values() {
        let mut point = config.clone();
        match spec.axis {
            SweepAxis::Sigma => {
                point.imperfections = ImperfectionParams::new(point.imperfections.eta_a, value)?;
            }
            SweepAxis::EtaA => {
                point.imperfections = ImperfectionParams::new(value, point.imperfections.sigma)?;
            }
            SweepAxis::Trials => {
                let n = value.round();
                if !(n >= 1.0) {
                    return Err(CliError::Config(format!(
                        "sweep: trials value {value} is below 1"
                    )));
                }
                point.trials = n as u64;
            }
            SweepAxis::Theta => point.state = Some(TwoPhotonState::mixing_angle(value)),
        }
        let state = require_state(&point)?;
        let report = estimate(&trial_config(&point, state, point.phases()?))?;
        let row = SweepRow {
            axis_value: value,
            p1: report.p1_hat,
            p2: report.p2_hat,
            p_total: report.p_total_hat,
            c_est: report.c_hat,
            c_corrected: report.corrected_c_hat,
            oracle_c: concurrence_pure(&state),
            ci_low: report.c_low,
            ci_high: report.c_high,
        };
        if row.fields().iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite value in sweep row at {value}"
            ))
            .into());
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.fields().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Runs the configured mode and renders its outputs.
pub fn run(config: &RunConfig) -> CliResult<Emitted> {
    let record = match config.mode {
        Mode::Analytic => render(config, analytic(config)?)?,
        Mode::Simulate => render(config, simulate(config)?)?,
        Mode::Oracle => render(config, oracle(config)?)?,
        Mode::Phases => render(config, phases_mode(config)?)?,
        Mode::Sweep => {
            let rows = sweep_rows(config)?;
            let table = sweep_table(&rows);
            let axis = config.sweep.map(|s| s.axis).unwrap_or(SweepAxis::Sigma);
            let record = render(config, SweepResults { axis, rows })?;
            return Ok(Emitted {
                record,
                table: Some(table),
            });
        }
    };
    Ok(Emitted {
        record,
        table: None,
    })
}

/// Writes outputs: the record always goes to stdout except for a sweep
/// without `--out`, where stdout receives the CSV table instead. With `--out`,
/// the sweep table (or the record, for other modes) is also written there.
pub fn emit(config: &RunConfig, emitted: &Emitted) -> CliResult<()> {
    let write = |path: &PathBuf, text: &str| {
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })
    };
    match (&emitted.table, &config.output) {
        (Some(table), Some(path)) => {
            write(path, table)?;
            println!("{}", emitted.record);
        }
        (Some(table), None) => print!("{table}"),
        (None, Some(path)) => {
            write(path, &format!("{}\n", emitted.record))?;
            println!("{}", emitted.record);
        }
        (None, None) => println!("{}", emitted.record),
    }
    Ok(())
}
