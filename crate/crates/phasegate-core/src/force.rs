//! Drive-force profiles.
//!
//! A [`ForceProfile`] is the real-valued control f(t) on [0, T], in units of
//! ħ × frequency (the scaled force; mass and ħ are absorbed into the
//! amplitude). Two representations are supported:
//!
//! * [`ForceProfile::Harmonics`]: a finite sum of damped sinusoids
//!   Σ aᵢ·e^{−dᵢt}·sin(ωᵢt + φᵢ), evaluated exactly at any t. The scaled-sine
//!   family A·e^{−γt}·sin(Ωt), constants, and every Gram-Schmidt construction
//!   built from sinusoidal seeds stay in this closed form, so damping
//!   compensation and amplitude rescaling are exact.
//! * [`ForceProfile::Sampled`]: a user-supplied table with piecewise-linear
//!   interpolation between strictly increasing time stamps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// One term a·e^{−decay·t}·sin(omega·t + phase) of an analytic profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicTerm {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub decay: f64,
}

impl HarmonicTerm {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp() * (self.omega * t + self.phase).sin()
    }
}

/// Uniformly or non-uniformly sampled force table.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledTable {
    fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "sampled profile needs at least 2 samples, got {}",
                times.len()
            )));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "sampled profile has {} time stamps but {} values",
                times.len(),
                values.len()
            )));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "sampled profile time stamps must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "sampled profile contains a non-finite entry".into(),
            ));
        }
        Ok(SampledTable { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear evaluation, clamped to the end values outside the
    /// sampled range.
    fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// A real drive force on [0, T].
#[derive(Clone, Debug, PartialEq)]
pub enum ForceProfile {
    /// Finite sum of damped sinusoids; exact evaluation everywhere.
    Harmonics(Vec<HarmonicTerm>),
    /// Sampled table with piecewise-linear interpolation.
    Sampled(SampledTable),
}

impl ForceProfile {
    /// The scaled-sine family A·e^{−decay·t}·sin(Ω·t).
    pub fn scaled_sine(amplitude: f64, drive_omega: f64, decay: f64) -> Self {
        ForceProfile::Harmonics(vec![HarmonicTerm {
            amplitude,
            omega: drive_omega,
            phase: 0.0,
            decay,
        }])
    }

    /// The constant profile f ≡ c.
    pub fn constant(c: f64) -> Self {
        ForceProfile::Harmonics(vec![HarmonicTerm {
            amplitude: c,
            omega: 0.0,
            phase: std::f64::consts::FRAC_PI_2,
            decay: 0.0,
        }])
    }

    /// The zero profile.
    pub fn zero() -> Self {
        ForceProfile::Harmonics(Vec::new())
    }

    /// A sampled profile; validates sample count, ordering, and finiteness.
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(ForceProfile::Sampled(SampledTable::new(times, values)?))
    }

    /// An analytic profile from explicit terms.
    pub fn harmonics(terms: Vec<HarmonicTerm>) -> Self {
        ForceProfile::Harmonics(terms)
    }

    /// f(t). Analytic profiles evaluate exactly; sampled ones interpolate.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ForceProfile::Harmonics(terms) => terms.iter().map(|h| h.eval(t)).sum(),
            ForceProfile::Sampled(table) => table.eval(t),
        }
    }

    /// Samples f on every point of `grid`.
    pub fn sample_on(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.len()).map(|k| self.eval(grid.t(k))).collect()
    }

    /// The profile scaled by a constant factor (exact in both representations).
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ForceProfile::Harmonics(terms) => ForceProfile::Harmonics(
                terms
                    .iter()
                    .map(|h| HarmonicTerm {
                        amplitude: factor * h.amplitude,
                        ..*h
                    })
                    .collect(),
            ),
            ForceProfile::Sampled(table) => ForceProfile::Sampled(SampledTable {
                times: table.times.clone(),
                values: table.values.iter().map(|v| factor * v).collect(),
            }),
        }
    }

    /// The profile multiplied by e^{−decay·t}.
    ///
    /// Exact for analytic profiles (the decay folds into each term). For
    /// sampled profiles the table values are damped in place, which is exact
    /// at the sample points; between them the result is the linear
    /// interpolant of the damped samples.
    pub fn damped(&self, decay: f64) -> Self {
        match self {
            ForceProfile::Harmonics(terms) => ForceProfile::Harmonics(
                terms
                    .iter()
                    .map(|h| HarmonicTerm {
                        decay: h.decay + decay,
                        ..*h
                    })
                    .collect(),
            ),
            ForceProfile::Sampled(table) => ForceProfile::Sampled(SampledTable {
                times: table.times.clone(),
                values: table
                    .times
                    .iter()
                    .zip(&table.values)
                    .map(|(&t, &v)| v * (-decay * t).exp())
                    .collect(),
            }),
        }
    }

    /// Pointwise sum of two profiles. Analytic pairs stay analytic; anything
    /// involving a table is resampled onto `grid`.
    pub fn add(&self, other: &ForceProfile, grid: &TimeGrid) -> Result<Self> {
        match (self, other) {
            (ForceProfile::Harmonics(a), ForceProfile::Harmonics(b)) => {
                let mut terms = a.clone();
                terms.extend_from_slice(b);
                Ok(ForceProfile::Harmonics(terms))
            }
            _ => {
                let values: Vec<f64> = (0..grid.len())
                    .map(|k| self.eval(grid.t(k)) + other.eval(grid.t(k)))
                    .collect();
                ForceProfile::sampled(grid.times(), values)
            }
        }
    }

    /// Errors if the profile evaluates to a non-finite value anywhere on `grid`.
    pub fn ensure_finite_on(&self, grid: &TimeGrid) -> Result<()> {
        for k in 0..grid.len() {
            let v = self.eval(grid.t(k));
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "force sample at t = {} is not finite",
                    grid.t(k)
                )));
            }
        }
        Ok(())
    }
}

/// An interaction-picture mode drive f̃(t) = amplitude · f(t) · e^{i·mode_omega·t}.
///
/// This is the complex force entering the coherent-label equation of motion
/// ż = −γz − i·f̃. A zero `amplitude` represents the identically vanishing
/// drive of an undriven mode.
#[derive(Clone, Debug)]
pub struct InteractionDrive {
    pub amplitude: f64,
    pub mode_omega: f64,
    pub profile: ForceProfile,
}

impl InteractionDrive {
    pub fn new(amplitude: f64, mode_omega: f64, profile: ForceProfile) -> Self {
        InteractionDrive {
            amplitude,
            mode_omega,
            profile,
        }
    }

    /// The identically zero drive for a mode of frequency `mode_omega`.
    pub fn silent(mode_omega: f64) -> Self {
        InteractionDrive {
            amplitude: 0.0,
            mode_omega,
            profile: ForceProfile::zero(),
        }
    }

    pub fn is_silent(&self) -> bool {
        self.amplitude == 0.0
    }

    /// f̃(t).
    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.mode_omega * t) * (self.amplitude * self.profile.eval(t))
    }

    /// The real profile amplitude·f(t), i.e. the drive with the interaction
    /// phase factor stripped; propagators re-apply e^{iωt} internally.
    pub fn as_real_profile(&self) -> ForceProfile {
        self.profile.scaled(self.amplitude)
    }
}
