//! Built-in scenario bundles, embedded at compile time.

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PresetName {
    /// Single-mode closed loops: ideal and damped, near and far detuning.
    Fig2,
    /// Two-ion gate trajectories at zero temperature, with an oracle check.
    Fig3,
    /// Damping sweeps: phase error and infidelity vs gamma, gate-time sweep.
    Fig4,
    /// Sample thermal noise trajectories for both modes.
    Fig5,
    /// Thermal fidelity: Monte Carlo ladder and cumulant curve.
    Fig6,
}

/// Returns the (file name, config text) pairs belonging to a preset.
pub fn files(name: PresetName) -> &'static [(&'static str, &'static str)] {
    macro_rules! bundle {
        ($($file:literal),+ $(,)?) => {
            &[$(($file, include_str!(concat!("../presets/", $file)))),+]
        };
    }
    match name {
        PresetName::Fig2 => bundle![
            "mode2_ideal.toml",
            "mode2_damped.toml",
            "mode4_ideal.toml",
            "mode4_damped.toml",
        ],
        PresetName::Fig3 => bundle![
            "gate_ideal.toml",
            "gate_uncompensated.toml",
            "gate_compensated.toml",
            "gate_oracle.toml",
        ],
        PresetName::Fig4 => bundle![
            "compensated_sweep.toml",
            "uncompensated_sweep.toml",
            "duration_sweep.toml",
        ],
        PresetName::Fig5 => bundle!["noisy_paths.toml"],
        PresetName::Fig6 => bundle!["monte_carlo.toml", "cumulant.toml"],
    }
}
