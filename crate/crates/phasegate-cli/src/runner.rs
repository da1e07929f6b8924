//! Executes validated scenarios and writes their CSV/JSON/binary outputs.
//!
//! All tables are emitted in a deterministic order (ladders are sorted at
//! parse time, time series follow the grid), so identical configs and seeds
//! reproduce byte-identical files.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::json;

use phasegate_core::design::closed_two_mode_family;
use phasegate_core::dynamics::{propagate_closed_form, ModeParams, Path as ModePath};
use phasegate_core::force::ForceProfile;
use phasegate_core::gate::{
    gate_drive_for_target, mode_forces, run_gate, sweep_duration, sweep_gamma, GateConfig,
    GateDrive, GateOutcome, SpinCombo, SweepPoint,
};
use phasegate_core::grid::TimeGrid;
use phasegate_core::oracle::{
    solve_single_mode, solve_two_mode_gate, DensityMatrix, TruncationPolicy,
};
use phasegate_core::phase::{isolated_phase, ledger as pair_ledger};
use phasegate_core::thermal::{
    cumulant_fidelity_variants, monte_carlo_fidelity, sample_noisy_path, NoiseRealization,
    NoiseScheme,
};

use crate::config::{
    GateParams, GateScenario, OracleCheckScenario, Scenario, SweepDurationScenario,
    SweepGammaScenario, ThermalScenario, TrajectoryScenario,
};
use crate::emit::{sig17, write_json, write_state, Table};
use crate::CliError;

const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

/// Command-line overrides applied to thermal scenarios.
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

pub fn run_scenario(
    scenario: &Scenario,
    overrides: &Overrides,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    match scenario {
        Scenario::Trajectory(s) => run_trajectory(s, out),
        Scenario::Gate(s) => run_gate_scenario(s, out),
        Scenario::SweepGamma(s) => run_sweep_gamma(s, out),
        Scenario::SweepDuration(s) => run_sweep_duration(s, out),
        Scenario::ThermalMc(s) => run_thermal_mc(s, overrides, out),
        Scenario::Cumulant(s) => run_cumulant(s, out),
        Scenario::OracleCheck(s) => run_oracle_check(s, out),
    }
}

struct BuiltGate {
    config: GateConfig,
    drive: GateDrive,
    grid: TimeGrid,
}

/// Builds the pulse family on the scenario grid, scales it to the phase
/// target (with damping compensation if configured), and assembles the gate
/// config.
fn build_gate(base: &GateParams, gamma_over_omega: f64, nbar: f64) -> Result<BuiltGate, CliError> {
    let grid = TimeGrid::new(base.duration, base.n_steps)?;
    let family = closed_two_mode_family(
        3.0f64.sqrt() * base.omega,
        base.omega,
        base.duration,
        &grid,
    )?;
    let gamma = gamma_over_omega * base.omega;
    let drive = gate_drive_for_target(
        &family,
        base.omega,
        gamma,
        base.duration,
        &grid,
        base.theta,
        base.compensate,
    )?;
    let config = GateConfig::new(
        base.omega,
        gamma,
        nbar,
        base.duration,
        1.0,
        drive.profile.clone(),
        grid.clone(),
    )?
    .with_target_phase(drive.target_phase);
    Ok(BuiltGate {
        config,
        drive,
        grid,
    })
}

fn occupation_for(gnt: f64, gamma: f64, duration: f64) -> Result<f64, CliError> {
    if gnt == 0.0 {
        return Ok(0.0);
    }
    if gamma == 0.0 {
        return Err(CliError::Validation(
            "nonzero gamma_nbar_t needs gamma_over_omega > 0".into(),
        ));
    }
    Ok(gnt / (gamma * duration))
}

fn gate_summary(
    kind: &str,
    base: &GateParams,
    gamma_over_omega: f64,
    nbar: f64,
    drive: &GateDrive,
    outcome: &GateOutcome,
) -> serde_json::Value {
    json!({
        "schema_version": 1,
        "kind": kind,
        "label": base.label,
        "omega": base.omega,
        "duration": base.duration,
        "n_steps": base.n_steps,
        "theta": base.theta,
        "compensate": base.compensate,
        "gamma_over_omega": gamma_over_omega,
        "gamma": gamma_over_omega * base.omega,
        "nbar": nbar,
        "target_phase": drive.target_phase,
        "kappa_squared": drive.kappa_squared,
        "sign_flipped": drive.sign_flipped,
        "phi_d": outcome.ledger.phi_d,
        "phi_g": outcome.ledger.phi_g,
        "phi_isol": outcome.ledger.phi_isol,
        "phi_l": outcome.ledger.phi_l,
        "eta": outcome.ledger.eta,
        "phi_realized": outcome.ledger.phi_total.re,
        "gamma_exponent": outcome.gamma_exponent,
        "delta_phi": outcome.delta_phi,
        "fidelity_bound": outcome.fidelity_bound,
        "fidelity_full": outcome.fidelity_full,
        "closure_residual_max": outcome.closure_residual_max,
    })
}

fn extend(summary: serde_json::Value, extra: Vec<(&str, serde_json::Value)>) -> serde_json::Value {
    let serde_json::Value::Object(mut map) = summary else {
        unreachable!("summaries are objects")
    };
    for (key, value) in extra {
        map.insert(key.to_string(), value);
    }
    serde_json::Value::Object(map)
}

fn run_trajectory(s: &TrajectoryScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = TimeGrid::new(s.duration, s.n_steps)?;
    let params = ModeParams::new(s.mode_omega, s.gamma, s.duration)?;
    let silent = ModePath::at_origin(grid.clone());
    let mut force = ForceProfile::scaled_sine(s.amplitude, s.drive_omega, s.drive_phase);
    let mut amplitude_factor = 1.0;
    if let Some(target) = s.normalize_phase {
        let params0 = ModeParams::new(s.mode_omega, 0.0, s.duration)?;
        let undamped = propagate_closed_form(ORIGIN, &force, &params0, &grid)?;
        let phi0 = isolated_phase(&undamped, &silent)?;
        if phi0 == 0.0 || !phi0.is_finite() {
            return Err(CliError::Numerical(format!(
                "drive encloses phase {phi0} at zero damping; cannot normalize"
            )));
        }
        amplitude_factor = (target / phi0.abs()).sqrt();
        force = force.scaled(amplitude_factor);
    }

    let path = propagate_closed_form(ORIGIN, &force, &params, &grid)?;
    let book = pair_ledger(&path, &silent, &params)?;

    let mut table = Table::create(
        out,
        &format!("{}.csv", s.label),
        &["t_us", "re_z", "im_z", "re_zdot", "im_zdot"],
    )?;
    for k in 0..grid.len() {
        table.row(&[
            sig17(grid.t(k)),
            sig17(path.z()[k].re),
            sig17(path.z()[k].im),
            sig17(path.zdot()[k].re),
            sig17(path.zdot()[k].im),
        ])?;
    }
    let csv_path = table.finish()?;

    let summary = json!({
        "schema_version": 1,
        "kind": "trajectory",
        "label": s.label,
        "mode_omega": s.mode_omega,
        "gamma": s.gamma,
        "duration": s.duration,
        "n_steps": s.n_steps,
        "drive_omega": s.drive_omega,
        "drive_phase": s.drive_phase,
        "base_amplitude": s.amplitude,
        "amplitude_factor": amplitude_factor,
        "phi_d": book.phi_d,
        "phi_g": book.phi_g,
        "phi_isol": book.phi_isol,
        "phi_l": book.phi_l,
        "eta": book.eta,
        "phi_realized": book.phi_total.re,
        "closure_residual": path.z_final().norm(),
    });
    let json_path = write_json(out, &format!("{}.json", s.label), &summary)?;
    Ok(vec![csv_path, json_path])
}

fn run_gate_scenario(s: &GateScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let built = build_gate(&s.base, s.gamma_over_omega, 0.0)?;
    let outcome = run_gate(&built.config, (ORIGIN, ORIGIN))?;

    let mut header = vec!["t_us".to_string()];
    for combo in ["uu", "dd", "ud", "du"] {
        for mode in ["minus", "plus"] {
            for part in ["re", "im"] {
                header.push(format!("{combo}_{mode}_{part}"));
            }
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(out, &format!("{}.csv", s.base.label), &header_refs)?;
    for k in 0..built.grid.len() {
        let mut row = vec![sig17(built.grid.t(k))];
        for paths in &outcome.paths {
            row.push(sig17(paths.minus.z()[k].re));
            row.push(sig17(paths.minus.z()[k].im));
            row.push(sig17(paths.plus.z()[k].re));
            row.push(sig17(paths.plus.z()[k].im));
        }
        table.row(&row)?;
    }
    let csv_path = table.finish()?;

    let summary = gate_summary("gate", &s.base, s.gamma_over_omega, 0.0, &built.drive, &outcome);
    let json_path = write_json(out, &format!("{}.json", s.base.label), &summary)?;
    Ok(vec![csv_path, json_path])
}

fn sweep_rows(points: &[SweepPoint]) -> Vec<serde_json::Value> {
    points
        .iter()
        .map(|p| {
            json!({
                "gamma_over_omega": p.gamma_over_omega,
                "t_us": p.t_us,
                "nbar": p.nbar,
                "gamma_exponent": p.gamma_exponent,
                "delta_phi_rad": p.delta_phi,
                "fidelity": p.fidelity,
                "closure_residual_max": p.closure_residual_max,
            })
        })
        .collect()
}

fn write_sweep(
    label: &str,
    points: &[SweepPoint],
    summary: serde_json::Value,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let mut table = Table::create(
        out,
        &format!("{label}.csv"),
        &[
            "gamma_over_omega",
            "t_us",
            "nbar",
            "gamma_exponent",
            "delta_phi_rad",
            "fidelity",
            "closure_residual_max",
        ],
    )?;
    for p in points {
        table.row(&[
            sig17(p.gamma_over_omega),
            sig17(p.t_us),
            sig17(p.nbar),
            sig17(p.gamma_exponent),
            sig17(p.delta_phi),
            sig17(p.fidelity),
            sig17(p.closure_residual_max),
        ])?;
    }
    let csv_path = table.finish()?;
    let json_path = write_json(out, &format!("{label}.json"), &summary)?;
    Ok(vec![csv_path, json_path])
}

fn run_sweep_gamma(s: &SweepGammaScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = TimeGrid::new(s.base.duration, s.base.n_steps)?;
    let family = closed_two_mode_family(
        3.0f64.sqrt() * s.base.omega,
        s.base.omega,
        s.base.duration,
        &grid,
    )?;
    let points = sweep_gamma(
        &family,
        s.base.omega,
        &s.gammas_over_omega,
        s.base.duration,
        &grid,
        s.base.theta,
        s.base.compensate,
    )?;
    let summary = json!({
        "schema_version": 1,
        "kind": "sweep-gamma",
        "label": s.base.label,
        "omega": s.base.omega,
        "duration": s.base.duration,
        "n_steps": s.base.n_steps,
        "theta": s.base.theta,
        "compensate": s.base.compensate,
        "rows": sweep_rows(&points),
    });
    write_sweep(&s.base.label, &points, summary, out)
}

fn run_sweep_duration(s: &SweepDurationScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let points = sweep_duration(
        s.base.omega,
        s.gamma_over_omega,
        &s.durations,
        s.base.n_steps,
        s.base.theta,
        s.base.compensate,
    )?;
    let summary = json!({
        "schema_version": 1,
        "kind": "sweep-duration",
        "label": s.base.label,
        "omega": s.base.omega,
        "n_steps": s.base.n_steps,
        "theta": s.base.theta,
        "compensate": s.base.compensate,
        "gamma_over_omega": s.gamma_over_omega,
        "rows": sweep_rows(&points),
    });
    write_sweep(&s.base.label, &points, summary, out)
}

fn run_thermal_mc(
    s: &ThermalScenario,
    overrides: &Overrides,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let samples = overrides.samples.unwrap_or(s.samples);
    if samples < 2 {
        return Err(CliError::Validation(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let seed = overrides.seed.unwrap_or(s.seed);
    let gamma = s.gamma_over_omega * s.base.omega;

    let built = build_gate(&s.base, s.gamma_over_omega, 0.0)?;
    let outcome = run_gate(&built.config, (ORIGIN, ORIGIN))?;

    let mut table = Table::create(
        out,
        &format!("{}.csv", s.base.label),
        &[
            "nbar",
            "gamma_nbar_t",
            "mean_fidelity",
            "std_error",
            "n_samples",
            "seed",
        ],
    )?;
    let mut rows = Vec::new();
    let mut last_config = None;
    for &gnt in &s.gamma_nbar_t {
        let nbar = occupation_for(gnt, gamma, s.base.duration)?;
        let config = GateConfig::new(
            s.base.omega,
            gamma,
            nbar,
            s.base.duration,
            1.0,
            built.drive.profile.clone(),
            built.grid.clone(),
        )?
        .with_target_phase(built.drive.target_phase);
        let estimate = monte_carlo_fidelity(&config, samples, seed)?;
        table.row(&[
            sig17(nbar),
            sig17(gnt),
            sig17(estimate.mean),
            sig17(estimate.std_error),
            estimate.n_samples.to_string(),
            estimate.seed.to_string(),
        ])?;
        rows.push(json!({
            "nbar": nbar,
            "gamma_nbar_t": gnt,
            "mean_fidelity": estimate.mean,
            "std_error": estimate.std_error,
            "n_samples": estimate.n_samples,
            "seed": estimate.seed,
        }));
        last_config = Some(config);
    }
    let csv_path = table.finish()?;

    let summary = extend(
        gate_summary("thermal-mc", &s.base, s.gamma_over_omega, 0.0, &built.drive, &outcome),
        vec![("rows", serde_json::Value::Array(rows))],
    );
    let json_path = write_json(out, &format!("{}.json", s.base.label), &summary)?;
    let mut written = vec![csv_path, json_path];

    if s.dump_paths > 0 {
        let config = last_config.expect("at least one ladder point");
        written.push(dump_noisy_paths(s, &config, seed, out)?);
    }
    Ok(written)
}

/// Writes `dump_paths` sample label trajectories of the highest-occupation
/// ladder point: both branches of both modes under the shared per-mode
/// noise streams.
fn dump_noisy_paths(
    s: &ThermalScenario,
    config: &GateConfig,
    seed: u64,
    out: &Path,
) -> Result<PathBuf, CliError> {
    let grid = &config.grid;
    let params_minus = config.params_minus()?;
    let params_plus = config.params_plus()?;
    let minus_force = mode_forces(SpinCombo::UpUp, config).1.as_real_profile();
    let plus_force = mode_forces(SpinCombo::UpDown, config).0.as_real_profile();
    let silent = ForceProfile::zero();

    let mut table = Table::create(
        out,
        &format!("{}_paths.csv", s.base.label),
        &[
            "realization",
            "t_us",
            "minus_par_re",
            "minus_par_im",
            "minus_anti_re",
            "minus_anti_im",
            "plus_par_re",
            "plus_par_im",
            "plus_anti_re",
            "plus_anti_im",
        ],
    )?;
    for r in 0..s.dump_paths {
        let draw = NoiseRealization::draw(seed, r as u64, grid);
        let scheme = NoiseScheme::Exponential;
        let minus_par = sample_noisy_path(
            ORIGIN, &minus_force, &params_minus, config.nbar, draw.minus(), grid, scheme,
        )?;
        let minus_anti = sample_noisy_path(
            ORIGIN, &silent, &params_minus, config.nbar, draw.minus(), grid, scheme,
        )?;
        let plus_par = sample_noisy_path(
            ORIGIN, &silent, &params_plus, config.nbar, draw.plus(), grid, scheme,
        )?;
        let plus_anti = sample_noisy_path(
            ORIGIN, &plus_force, &params_plus, config.nbar, draw.plus(), grid, scheme,
        )?;
        for k in 0..grid.len() {
            table.row(&[
                r.to_string(),
                sig17(grid.t(k)),
                sig17(minus_par.z()[k].re),
                sig17(minus_par.z()[k].im),
                sig17(minus_anti.z()[k].re),
                sig17(minus_anti.z()[k].im),
                sig17(plus_par.z()[k].re),
                sig17(plus_par.z()[k].im),
                sig17(plus_anti.z()[k].re),
                sig17(plus_anti.z()[k].im),
            ])?;
        }
    }
    table.finish()
}

fn run_cumulant(s: &ThermalScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let gamma = s.gamma_over_omega * s.base.omega;
    let built = build_gate(&s.base, s.gamma_over_omega, 0.0)?;
    let outcome = run_gate(&built.config, (ORIGIN, ORIGIN))?;

    let mut table = Table::create(
        out,
        &format!("{}.csv", s.base.label),
        &[
            "nbar",
            "gamma_nbar_t",
            "fidelity_linearized",
            "fidelity_unlinearized",
        ],
    )?;
    let mut rows = Vec::new();
    for &gnt in &s.gamma_nbar_t {
        let nbar = occupation_for(gnt, gamma, s.base.duration)?;
        let config = GateConfig::new(
            s.base.omega,
            gamma,
            nbar,
            s.base.duration,
            1.0,
            built.drive.profile.clone(),
            built.grid.clone(),
        )?
        .with_target_phase(built.drive.target_phase);
        let fidelity = cumulant_fidelity_variants(&config)?;
        table.row(&[
            sig17(nbar),
            sig17(gnt),
            sig17(fidelity.linearized),
            sig17(fidelity.unlinearized),
        ])?;
        rows.push(json!({
            "nbar": nbar,
            "gamma_nbar_t": gnt,
            "fidelity_linearized": fidelity.linearized,
            "fidelity_unlinearized": fidelity.unlinearized,
        }));
    }
    let csv_path = table.finish()?;

    let summary = extend(
        gate_summary("cumulant", &s.base, s.gamma_over_omega, 0.0, &built.drive, &outcome),
        vec![("rows", serde_json::Value::Array(rows))],
    );
    let json_path = write_json(out, &format!("{}.json", s.base.label), &summary)?;
    Ok(vec![csv_path, json_path])
}

fn run_oracle_check(s: &OracleCheckScenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let gamma = s.gamma_over_omega * s.base.omega;
    let nbar = occupation_for(s.gamma_nbar_t, gamma, s.base.duration)?;
    let built = build_gate(&s.base, s.gamma_over_omega, nbar)?;
    let outcome = run_gate(&built.config, (ORIGIN, ORIGIN))?;

    let policy = match (s.n_max, s.tail_threshold) {
        (None, None) => {
            if nbar == 0.0 {
                TruncationPolicy::zero_temperature()
            } else {
                TruncationPolicy::finite_temperature()
            }
        }
        (n, tail) => TruncationPolicy::new(
            n.unwrap_or(if nbar == 0.0 { 32 } else { 64 }),
            tail.unwrap_or(1e-8),
        )?,
    };

    // Mean label of the driven center-of-mass mode against the closed form.
    let minus_force = mode_forces(SpinCombo::UpUp, &built.config).1.as_real_profile();
    let params_minus = built.config.params_minus()?;
    let run = solve_single_mode(
        &minus_force,
        &params_minus,
        nbar,
        &built.grid,
        &policy,
        &DensityMatrix::vacuum(1),
    )?;
    let reference = &outcome.paths_for(SpinCombo::UpUp).minus;
    let mut table = Table::create(
        out,
        &format!("{}.csv", s.base.label),
        &["t_us", "re_mean_alpha", "im_mean_alpha", "re_z", "im_z", "abs_dev"],
    )?;
    let mut max_dev: f64 = 0.0;
    for (m, alpha) in run.mean_alpha.iter().enumerate() {
        let z = reference.z()[2 * m];
        let dev = (alpha - z).norm();
        max_dev = max_dev.max(dev);
        table.row(&[
            sig17(run.times[m]),
            sig17(alpha.re),
            sig17(alpha.im),
            sig17(z.re),
            sig17(z.im),
            sig17(dev),
        ])?;
    }
    let csv_path = table.finish()?;

    let mut extra = vec![
        ("mean_label_max_dev", json!(max_dev)),
        ("single_mode_dim_used", json!(run.dim_used)),
        ("single_mode_trace_drift", json!(run.trace_drift)),
        ("single_mode_tail_max", json!(run.tail_max)),
    ];
    let mut written = vec![csv_path];

    if s.full_gate {
        let oracle = solve_two_mode_gate(&built.config, &policy)?;
        let params_plus = built.config.params_plus()?;
        // Entrywise comparison of the oracle's reduced spin state against
        // the ledger-assembled prediction (diagonal ¼ is exact on both
        // sides, so pairs suffice).
        let mut spin_dev: f64 = 0.0;
        for (a, i) in SpinCombo::ALL.iter().enumerate() {
            for j in SpinCombo::ALL.iter().skip(a + 1) {
                let pi = outcome.paths_for(*i);
                let pj = outcome.paths_for(*j);
                let total = pair_ledger(&pi.minus, &pj.minus, &params_minus)?
                    .sum(&pair_ledger(&pi.plus, &pj.plus, &params_plus)?);
                let predicted = Complex64::from_polar(
                    0.25 * (-total.eta).exp(),
                    total.phi_isol + total.phi_l,
                );
                let actual = oracle.spin_state.data()[(i.index(), j.index())];
                spin_dev = spin_dev.max((predicted - actual).norm());
            }
        }
        extra.extend([
            ("oracle_coherence_decay", json!(oracle.coherence_decay)),
            ("oracle_coherence_phase", json!(oracle.coherence_phase)),
            (
                "oracle_spin_fidelity",
                json!(oracle.spin_fidelity.expect("target phase set")),
            ),
            (
                "oracle_ground_fidelity",
                json!(oracle.ground_fidelity.expect("target phase set")),
            ),
            ("oracle_dim_used", json!(oracle.dim_used)),
            ("spin_state_max_dev", json!(spin_dev)),
        ]);
        if s.dump_state {
            written.push(write_state(
                out,
                &format!("{}_rho.bin", s.base.label),
                &oracle.spin_state,
            )?);
        }
    } else if s.dump_state {
        written.push(write_state(
            out,
            &format!("{}_rho.bin", s.base.label),
            &run.final_state,
        )?);
    }

    let summary = extend(
        gate_summary(
            "oracle-check",
            &s.base,
            s.gamma_over_omega,
            nbar,
            &built.drive,
            &outcome,
        ),
        extra,
    );
    written.push(write_json(out, &format!("{}.json", s.base.label), &summary)?);
    Ok(written)
}
