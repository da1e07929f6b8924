//! Scenario config files: one flat TOML document per scenario with an
//! embedded schema version. Unknown keys are rejected so typos surface as
//! validation errors instead of silently ignored settings.

use std::path::PathBuf;

use serde::Deserialize;

use crate::CliError;

const SCHEMA_VERSION: u32 = 1;

/// Default trap frequency: 2π · 2 MHz in rad/μs.
fn default_omega() -> f64 {
    4.0 * std::f64::consts::PI
}

fn default_n_steps() -> usize {
    4096
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// One damped, driven mode label from the origin; CSV of z(t).
    Trajectory,
    /// Deterministic two-qubit gate run; CSV of all branch labels.
    Gate,
    /// Gate metrics swept over γ/ω at fixed duration.
    SweepGamma,
    /// Gate metrics swept over the protocol time at fixed γ/ω.
    #[serde(alias = "sweep-T")]
    SweepDuration,
    /// Monte Carlo thermal fidelity over a γn̄T ladder.
    ThermalMc,
    /// Cumulant-approximation fidelity over a γn̄T ladder.
    Cumulant,
    /// Master-equation cross-check of the coherent-label ansatz.
    OracleCheck,
}

/// The raw key-value document. Kind-specific fields are optional here and
/// checked during [`parse`].
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    kind: Kind,
    label: String,

    #[serde(default = "default_omega")]
    omega: f64,
    #[serde(default)]
    duration: Option<f64>,
    #[serde(default = "default_n_steps")]
    n_steps: usize,

    #[serde(default)]
    gamma_over_omega: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default = "default_true")]
    compensate: bool,

    #[serde(default)]
    gammas_over_omega: Option<Vec<f64>>,
    #[serde(default)]
    durations: Option<Vec<f64>>,

    #[serde(default)]
    gamma_nbar_t: Option<Vec<f64>>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    dump_paths: Option<usize>,

    #[serde(default)]
    mode_omega: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    drive_omega: Option<f64>,
    #[serde(default)]
    drive_phase: Option<f64>,
    #[serde(default)]
    drive_decay: Option<f64>,
    #[serde(default)]
    force_file: Option<String>,
    #[serde(default)]
    amplitude: Option<f64>,
    #[serde(default)]
    normalize_phase: Option<f64>,

    #[serde(default)]
    n_max: Option<usize>,
    #[serde(default)]
    tail_threshold: Option<f64>,
    #[serde(default)]
    dump_state: Option<bool>,
    #[serde(default)]
    full_gate: Option<bool>,
}

/// A single damped, driven mode.
#[derive(Clone, Debug)]
pub struct TrajectoryScenario {
    pub label: String,
    pub mode_omega: f64,
    pub gamma: f64,
    pub duration: f64,
    pub n_steps: usize,
    pub drive_omega: f64,
    pub drive_phase: f64,
    pub amplitude: f64,
    /// Rescale the amplitude so the zero-damping path encloses this phase
    /// magnitude.
    pub normalize_phase: Option<f64>,
}

/// Shared parameters of every two-qubit-gate scenario.
#[derive(Clone, Debug)]
pub struct GateParams {
    pub label: String,
    pub omega: f64,
    pub duration: f64,
    pub n_steps: usize,
    pub theta: f64,
    pub compensate: bool,
}

#[derive(Clone, Debug)]
pub struct GateScenario {
    pub base: GateParams,
    pub gamma_over_omega: f64,
}

#[derive(Clone, Debug)]
pub struct SweepGammaScenario {
    pub base: GateParams,
    pub gammas_over_omega: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepDurationScenario {
    pub base: GateParams,
    pub gamma_over_omega: f64,
    pub durations: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ThermalScenario {
    pub base: GateParams,
    pub gamma_over_omega: f64,
    /// Dimensionless heating ladder γn̄T, one Monte Carlo or cumulant row
    /// per value.
    pub gamma_nbar_t: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Number of per-realization label trajectories to dump (0 = none).
    pub dump_paths: usize,
}

#[derive(Clone, Debug)]
pub struct OracleCheckScenario {
    pub base: GateParams,
    pub gamma_over_omega: f64,
    pub gamma_nbar_t: f64,
    pub n_max: Option<usize>,
    pub tail_threshold: Option<f64>,
    /// Also solve all spin-combination pairs and compare the reduced spin
    /// state entrywise (slower; on by default).
    pub full_gate: bool,
    /// Write the final density matrix as a binary dump.
    pub dump_state: bool,
}

#[derive(Clone, Debug)]
pub enum Scenario {
    Trajectory(TrajectoryScenario),
    Gate(GateScenario),
    SweepGamma(SweepGammaScenario),
    SweepDuration(SweepDurationScenario),
    ThermalMc(ThermalScenario),
    Cumulant(ThermalScenario),
    OracleCheck(OracleCheckScenario),
}

impl Scenario {
    pub fn label(&self) -> &str {
        match self {
            Scenario::Trajectory(s) => &s.label,
            Scenario::Gate(s) => &s.base.label,
            Scenario::SweepGamma(s) => &s.base.label,
            Scenario::SweepDuration(s) => &s.base.label,
            Scenario::ThermalMc(s) | Scenario::Cumulant(s) => &s.base.label,
            Scenario::OracleCheck(s) => &s.base.label,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn require<T>(value: Option<T>, key: &str, kind: &str) -> Result<T, CliError> {
    value.ok_or_else(|| invalid(format!("`{key}` is required for kind \"{kind}\"")))
}

fn finite_positive(value: f64, key: &str) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("`{key}` must be positive and finite, got {value}")))
    }
}

fn finite_nonnegative(value: f64, key: &str) -> Result<f64, CliError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!(
            "`{key}` must be nonnegative and finite, got {value}"
        )))
    }
}

fn sorted_ladder(mut values: Vec<f64>, key: &str) -> Result<Vec<f64>, CliError> {
    if values.is_empty() {
        return Err(invalid(format!("`{key}` must not be empty")));
    }
    for &v in &values {
        finite_nonnegative(v, key)?;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(values)
}

/// Parses and validates one scenario document.
pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| invalid(format!("config parse error: {e}")))?;

    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if file.label.is_empty()
        || !file
            .label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(invalid(format!(
            "`label` must be a nonempty [A-Za-z0-9_-] string, got {:?}",
            file.label
        )));
    }
    if file.n_steps < 2 || file.n_steps % 2 != 0 {
        return Err(invalid(format!(
            "`n_steps` must be a positive even number, got {}",
            file.n_steps
        )));
    }
    finite_positive(file.omega, "omega")?;

    let kind_name = |k: Kind| match k {
        Kind::Trajectory => "trajectory",
        Kind::Gate => "gate",
        Kind::SweepGamma => "sweep-gamma",
        Kind::SweepDuration => "sweep-duration",
        Kind::ThermalMc => "thermal-mc",
        Kind::Cumulant => "cumulant",
        Kind::OracleCheck => "oracle-check",
    };
    let kind = kind_name(file.kind);

    let duration = |file: &ScenarioFile| -> Result<f64, CliError> {
        finite_positive(require(file.duration, "duration", kind)?, "duration")
    };
    let gate_base = |file: &ScenarioFile, duration: f64| -> Result<GateParams, CliError> {
        Ok(GateParams {
            label: file.label.clone(),
            omega: file.omega,
            duration,
            n_steps: file.n_steps,
            theta: finite_positive(require(file.theta, "theta", kind)?, "theta")?,
            compensate: file.compensate,
        })
    };
    let thermal = |file: &ScenarioFile| -> Result<ThermalScenario, CliError> {
        let duration = duration(file)?;
        Ok(ThermalScenario {
            base: gate_base(file, duration)?,
            gamma_over_omega: finite_nonnegative(
                require(file.gamma_over_omega, "gamma_over_omega", kind)?,
                "gamma_over_omega",
            )?,
            gamma_nbar_t: sorted_ladder(
                require(file.gamma_nbar_t.clone(), "gamma_nbar_t", kind)?,
                "gamma_nbar_t",
            )?,
            samples: file.samples.unwrap_or(1000),
            seed: file.seed.unwrap_or(1),
            dump_paths: file.dump_paths.unwrap_or(0),
        })
    };

    match file.kind {
        Kind::Trajectory => {
            let duration = duration(&file)?;
            let amplitude = file.amplitude.unwrap_or(1.0);
            if file.normalize_phase.is_none() && file.amplitude.is_none() {
                return Err(invalid(
                    "trajectory needs `amplitude`, `normalize_phase`, or both",
                ));
            }
            Ok(Scenario::Trajectory(TrajectoryScenario {
                label: file.label.clone(),
                mode_omega: finite_positive(
                    require(file.mode_omega, "mode_omega", kind)?,
                    "mode_omega",
                )?,
                gamma: finite_nonnegative(file.gamma.unwrap_or(0.0), "gamma")?,
                duration,
                n_steps: file.n_steps,
                drive_omega: finite_positive(
                    require(file.drive_omega, "drive_omega", kind)?,
                    "drive_omega",
                )?,
                drive_phase: file.drive_phase.unwrap_or(0.0),
                amplitude: finite_positive(amplitude, "amplitude")?,
                normalize_phase: file
                    .normalize_phase
                    .map(|p| finite_positive(p, "normalize_phase"))
                    .transpose()?,
            }))
        }
        Kind::Gate => {
            let duration = duration(&file)?;
            Ok(Scenario::Gate(GateScenario {
                base: gate_base(&file, duration)?,
                gamma_over_omega: finite_nonnegative(
                    file.gamma_over_omega.unwrap_or(0.0),
                    "gamma_over_omega",
                )?,
            }))
        }
        Kind::SweepGamma => {
            let duration = duration(&file)?;
            Ok(Scenario::SweepGamma(SweepGammaScenario {
                base: gate_base(&file, duration)?,
                gammas_over_omega: sorted_ladder(
                    require(file.gammas_over_omega.clone(), "gammas_over_omega", kind)?,
                    "gammas_over_omega",
                )?,
            }))
        }
        Kind::SweepDuration => {
            let durations = sorted_ladder(
                require(file.durations.clone(), "durations", kind)?,
                "durations",
            )?;
            for &t in &durations {
                finite_positive(t, "durations")?;
            }
            // The per-point grids are rebuilt from `durations`; a scalar
            // `duration` would be ignored, so reject it.
            if file.duration.is_some() {
                return Err(invalid(
                    "sweep-duration takes `durations`, not a scalar `duration`",
                ));
            }
            Ok(Scenario::SweepDuration(SweepDurationScenario {
                base: GateParams {
                    label: file.label.clone(),
                    omega: file.omega,
                    duration: durations[durations.len() - 1],
                    n_steps: file.n_steps,
                    theta: finite_positive(require(file.theta, "theta", kind)?, "theta")?,
                    compensate: file.compensate,
                },
                gamma_over_omega: finite_nonnegative(
                    require(file.gamma_over_omega, "gamma_over_omega", kind)?,
                    "gamma_over_omega",
                )?,
                durations,
            }))
        }
        Kind::ThermalMc => {
            let scenario = thermal(&file)?;
            if scenario.samples < 2 {
                return Err(invalid("`samples` must be at least 2"));
            }
            Ok(Scenario::ThermalMc(scenario))
        }
        Kind::Cumulant => Ok(Scenario::Cumulant(thermal(&file)?)),
        Kind::OracleCheck => {
            let duration = duration(&file)?;
            let ladder = file.gamma_nbar_t.clone().unwrap_or_else(|| vec![0.0]);
            if ladder.len() != 1 {
                return Err(invalid(
                    "oracle-check takes a single `gamma_nbar_t` value",
                ));
            }
            Ok(Scenario::OracleCheck(OracleCheckScenario {
                base: gate_base(&file, duration)?,
                gamma_over_omega: finite_nonnegative(
                    file.gamma_over_omega.unwrap_or(0.0),
                    "gamma_over_omega",
                )?,
                gamma_nbar_t: finite_nonnegative(ladder[0], "gamma_nbar_t")?,
                n_max: file.n_max,
                tail_threshold: file.tail_threshold,
                full_gate: file.full_gate.unwrap_or(true),
                dump_state: file.dump_state.unwrap_or(false),
            }))
        }
    }
}
