//! Coherent-label dynamics of a damped, driven harmonic mode.
//!
//! In the interaction picture the coherent-state label obeys
//!
//! > ż = −γ·z − i·f̃(t),  f̃(t) = f(t)·e^{iωt},
//!
//! with f the real drive force and ω the mode frequency. Two integrators are
//! provided: the closed-form solution
//!
//! > z(t) = e^{−γt}·[z(0) − i·∫₀ᵗ f(τ)·e^{(iω+γ)τ} dτ]
//!
//! evaluated by running Simpson quadrature, and a fixed-step 4th-order
//! Runge-Kutta integration of the ODE. Both fill the path's ż samples from
//! the equation of motion, so downstream phase integrals never touch finite
//! differences.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::force::ForceProfile;
use crate::grid::{cumulative_simpson_complex, TimeGrid};

/// Physical parameters of one damped mode over one protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams {
    /// Mode angular frequency ω in rad/μs.
    pub omega: f64,
    /// Damping rate γ in 1/μs.
    pub gamma: f64,
    /// Protocol time T in μs.
    pub duration: f64,
}

impl ModeParams {
    pub fn new(omega: f64, gamma: f64, duration: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mode frequency must be positive, got {omega}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "damping rate must be non-negative, got {gamma}"
            )));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidInput(format!(
                "protocol time must be positive, got {duration}"
            )));
        }
        Ok(ModeParams {
            omega,
            gamma,
            duration,
        })
    }

    /// The interaction-picture drive f̃(t) = f(t)·e^{iωt}.
    pub fn ftilde(&self, force: &ForceProfile, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.omega * t) * force.eval(t)
    }

    fn ensure_grid(&self, grid: &TimeGrid) -> Result<()> {
        if grid.duration() != self.duration {
            return Err(Error::InvalidInput(format!(
                "grid spans [0, {}] but the mode protocol time is {}",
                grid.duration(),
                self.duration
            )));
        }
        Ok(())
    }
}

/// Time grid plus complex coherent-state labels z(t) and their derivatives.
#[derive(Clone, Debug)]
pub struct Path {
    grid: TimeGrid,
    z: Vec<Complex64>,
    zdot: Vec<Complex64>,
}

impl Path {
    /// Builds a path from explicit samples. Both sample vectors must match
    /// the grid length and be finite; `zdot` holds ż at each grid point.
    pub fn from_samples(grid: TimeGrid, z: Vec<Complex64>, zdot: Vec<Complex64>) -> Result<Self> {
        if z.len() != grid.len() || zdot.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "path needs {} samples, got {} labels and {} derivatives",
                grid.len(),
                z.len(),
                zdot.len()
            )));
        }
        if z.iter().chain(zdot.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "path contains a non-finite sample".into(),
            ));
        }
        Ok(Path { grid, z, zdot })
    }

    /// The identically-zero path on `grid`.
    pub fn at_origin(grid: TimeGrid) -> Self {
        let n = grid.len();
        Path {
            grid,
            z: vec![Complex64::new(0.0, 0.0); n],
            zdot: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn zdot(&self) -> &[Complex64] {
        &self.zdot
    }

    pub fn z_initial(&self) -> Complex64 {
        self.z[0]
    }

    pub fn z_final(&self) -> Complex64 {
        *self.z.last().unwrap()
    }

    pub fn ensure_same_grid(&self, other: &Path) -> Result<()> {
        self.grid.ensure_matches(&other.grid)
    }
}

fn prepare(force: &ForceProfile, params: &ModeParams, grid: &TimeGrid) -> Result<()> {
    params.ensure_grid(grid)?;
    force.ensure_finite_on(grid)
}

fn zdot_from_eom(
    z: &[Complex64],
    force: &ForceProfile,
    params: &ModeParams,
    grid: &TimeGrid,
) -> Vec<Complex64> {
    (0..grid.len())
        .map(|k| {
            let i = Complex64::new(0.0, 1.0);
            -params.gamma * z[k] - i * params.ftilde(force, grid.t(k))
        })
        .collect()
}

/// Evolves the label by the closed-form solution, with the drive integral
/// evaluated by running Simpson quadrature on the grid.
pub fn propagate_closed_form(
    z0: Complex64,
    force: &ForceProfile,
    params: &ModeParams,
    grid: &TimeGrid,
) -> Result<Path> {
    prepare(force, params, grid)?;
    let i = Complex64::new(0.0, 1.0);
    let integrand: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let t = grid.t(k);
            Complex64::from_polar((params.gamma * t).exp(), params.omega * t) * force.eval(t)
        })
        .collect();
    let running = cumulative_simpson_complex(&integrand, grid.dt());
    let z: Vec<Complex64> = (0..grid.len())
        .map(|k| (-params.gamma * grid.t(k)).exp() * (z0 - i * running[k]))
        .collect();
    let zdot = zdot_from_eom(&z, force, params, grid);
    Path::from_samples(grid.clone(), z, zdot)
}

/// Evolves the label by fixed-step classical Runge-Kutta on the grid.
pub fn propagate_ode(
    z0: Complex64,
    force: &ForceProfile,
    params: &ModeParams,
    grid: &TimeGrid,
) -> Result<Path> {
    prepare(force, params, grid)?;
    let i = Complex64::new(0.0, 1.0);
    let rhs = |t: f64, z: Complex64| -> Complex64 { -params.gamma * z - i * params.ftilde(force, t) };
    let h = grid.dt();
    let mut z = Vec::with_capacity(grid.len());
    z.push(z0);
    let mut cur = z0;
    for k in 0..grid.n_steps() {
        let t = grid.t(k);
        let k1 = rhs(t, cur);
        let k2 = rhs(t + 0.5 * h, cur + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, cur + 0.5 * h * k2);
        let k4 = rhs(t + h, cur + h * k3);
        cur += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        z.push(cur);
    }
    let zdot = zdot_from_eom(&z, force, params, grid);
    Path::from_samples(grid.clone(), z, zdot)
}

/// Reports the closure residual |z(T) − z(0)| and whether it is within `tol`.
pub fn check_cyclic(path: &Path, tol: f64) -> (bool, f64) {
    let residual = (path.z_final() - path.z_initial()).norm();
    (residual <= tol, residual)
}
