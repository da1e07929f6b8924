//! Uniform time grids and the quadrature rules used throughout the crate.
//!
//! Every propagator, phase integral, and inner product in this crate works on
//! the same uniform grid t_k = k·T/n, k = 0..n. Definite integrals use
//! composite Simpson (which is why `n_steps` must be even); running integrals
//! use the half-panel Simpson rule, which agrees with composite Simpson at
//! even indices and interpolates the same parabolas at odd ones.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform partition of the protocol interval [0, T].
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    duration: f64,
    n_steps: usize,
}

/// Default number of steps per protocol: resolves a 2 MHz oscillation over
/// a microsecond with several hundred points per period.
pub const DEFAULT_N_STEPS: usize = 4096;

impl TimeGrid {
    /// A grid with `n_steps` uniform intervals over `[0, duration]`.
    ///
    /// `n_steps` must be even (composite Simpson quadrature) and `duration`
    /// positive and finite.
    pub fn new(duration: f64, n_steps: usize) -> Result<Self> {
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "grid duration must be positive and finite, got {duration}"
            )));
        }
        if n_steps < 2 || n_steps % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs an even number of steps >= 2, got {n_steps}"
            )));
        }
        Ok(TimeGrid { duration, n_steps })
    }

    /// The default 4096-step grid over `[0, duration]`.
    pub fn with_default_steps(duration: f64) -> Result<Self> {
        TimeGrid::new(duration, DEFAULT_N_STEPS)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing T/n.
    pub fn dt(&self) -> f64 {
        self.duration / self.n_steps as f64
    }

    /// t_k = k·T/n.
    pub fn t(&self, k: usize) -> f64 {
        // Computed as a product rather than k·dt summation drift; the final
        // point is exactly `duration` up to one rounding.
        self.duration * (k as f64) / (self.n_steps as f64)
    }

    /// All grid points in order.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }

    /// Errors unless `other` is the same grid.
    pub fn ensure_matches(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "expected {} steps over {}, got {} steps over {}",
                self.n_steps, self.duration, other.n_steps, other.duration
            )))
        }
    }

    /// A grid over the same interval with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.duration, self.n_steps * factor)
    }
}

/// Composite Simpson integral of samples on a uniform grid with spacing `dt`.
///
/// `values.len()` must be odd (an even number of intervals).
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    assert!(
        values.len() >= 3 && values.len() % 2 == 1,
        "composite Simpson needs an odd number of samples, got {}",
        values.len()
    );
    let mut acc = values[0] + values[values.len() - 1];
    for (k, v) in values.iter().enumerate().skip(1).take(values.len() - 2) {
        acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dt / 3.0
}

/// Complex-valued composite Simpson integral.
pub fn simpson_complex(values: &[Complex64], dt: f64) -> Complex64 {
    assert!(
        values.len() >= 3 && values.len() % 2 == 1,
        "composite Simpson needs an odd number of samples, got {}",
        values.len()
    );
    let mut acc = values[0] + values[values.len() - 1];
    for (k, v) in values.iter().enumerate().skip(1).take(values.len() - 2) {
        acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * (dt / 3.0)
}

/// Running integral I_k = ∫₀^{t_k} of the sampled integrand, by half-panel
/// Simpson: each sample triple (g_{2m}, g_{2m+1}, g_{2m+2}) is fit with a
/// parabola and integrated over each half of its panel. At even k this
/// telescopes to composite Simpson.
pub fn cumulative_simpson_complex(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    assert!(
        values.len() >= 3 && values.len() % 2 == 1,
        "cumulative Simpson needs an odd number of samples, got {}",
        values.len()
    );
    let mut out = Vec::with_capacity(values.len());
    out.push(Complex64::new(0.0, 0.0));
    let c = dt / 12.0;
    for m in 0..(values.len() - 1) / 2 {
        let (g0, g1, g2) = (values[2 * m], values[2 * m + 1], values[2 * m + 2]);
        let first = (g0 * 5.0 + g1 * 8.0 - g2) * c;
        let second = (-g0 + g1 * 8.0 + g2 * 5.0) * c;
        let base = out[2 * m];
        out.push(base + first);
        out.push(base + first + second);
    }
    out
}

/// Running trapezoid integral I_k = ∫₀^{t_k}, used for the nested integrals
/// of the thermal cumulant expansion.
pub fn cumulative_trapezoid_complex(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in values.windows(2) {
        acc += (w[0] + w[1]) * (0.5 * dt);
        out.push(acc);
    }
    out
}
