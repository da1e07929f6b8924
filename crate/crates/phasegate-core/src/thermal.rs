//! Finite-temperature noise: stochastic mode trajectories, Monte Carlo
//! averaging of the per-realization gate fidelity, and the closed-form
//! second-order cumulant approximation of that average.
//!
//! The bath enters the label equation as a complex Gaussian white-noise term,
//! ż = −γz − i(f̃ + √(2γn̄)·χ), with ⟨χ(t)χ*(t′)⟩ = δ(t−t′) and ⟨χχ⟩ = 0.
//! Crucially the noise does not depend on the spin state, so one realization
//! is shared by every spin combination: the branch differences that build Γ
//! are noise-free, while the endpoint displacements and the accumulated phase
//! fluctuate. The Monte Carlo estimator averages the full fidelity over
//! realizations; [`cumulant_fidelity`] evaluates the deterministic
//! approximation obtained by a second-order cumulant expansion of that
//! average, in both its linearized (first order in n̄γT) and un-linearized
//! forms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dynamics::{ModeParams, Path};
use crate::error::{Error, Result};
use crate::force::{ForceProfile, InteractionDrive};
use crate::gate::{mode_forces, run_gate, GateConfig, SpinCombo};
use crate::grid::{cumulative_trapezoid_complex, simpson_complex, TimeGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Discretization of the stochastic label update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseScheme {
    /// Exact-in-drift exponential update
    /// z_{k+1} = e^{−γΔt}·z_k − iΔt·f̃(t_k)·e^{−γΔt/2} − i√(2γn̄)·ΔW_k.
    ///
    /// The default: it is exact for undriven motion at n̄ = 0, so the purely
    /// deterministic limit carries no Euler drift bias when compared against
    /// the quadrature propagator.
    #[default]
    Exponential,
    /// Plain Euler-Maruyama,
    /// z_{k+1} = z_k + Δt(−γz_k − i·f̃(t_k)) − i√(2γn̄)·ΔW_k.
    EulerMaruyama,
}

/// One realization of the complex Gaussian increments ΔW_k, drawn once and
/// shared by every spin combination.
///
/// Real and imaginary parts are independent with variance Δt/2 each, so that
/// ⟨ΔW ΔW*⟩ = Δt and ⟨ΔW²⟩ = 0, discretizing ⟨χχ*⟩ = δ(t−t′) and ⟨χχ⟩ = 0.
/// The two motional modes use independent counter-based streams keyed by
/// (seed, realization index, mode), making realizations reproducible and
/// order-independent under parallel execution.
#[derive(Clone, Debug)]
pub struct NoiseRealization {
    seed: u64,
    index: u64,
    minus: Vec<Complex64>,
    plus: Vec<Complex64>,
}

fn mode_rng(seed: u64, index: u64, mode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index + mode);
    rng
}

fn gaussian_increment(rng: &mut ChaCha8Rng, root_half_dt: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * root_half_dt, im * root_half_dt)
}

impl NoiseRealization {
    /// Draws the increments of realization `index` on `grid` (one increment
    /// per step and mode).
    pub fn draw(seed: u64, index: u64, grid: &TimeGrid) -> Self {
        let root_half_dt = (grid.dt() / 2.0).sqrt();
        let draw_mode = |mode: u64| {
            let mut rng = mode_rng(seed, index, mode);
            (0..grid.n_steps())
                .map(|_| gaussian_increment(&mut rng, root_half_dt))
                .collect()
        };
        let minus = draw_mode(0);
        let plus = draw_mode(1);
        NoiseRealization {
            seed,
            index,
            minus,
            plus,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Increments of the center-of-mass (minus) mode, one per step.
    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    /// Increments of the stretch (plus) mode, one per step.
    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn len(&self) -> usize {
        self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minus.is_empty()
    }
}

/// Evolves one noisy mode label from `z0` under `force` and the given
/// per-step increments, returning the sampled path.
///
/// The reported derivative samples are the drift part −γz − if̃ evaluated on
/// the realized trajectory; the white-noise part has no pointwise value.
pub fn sample_noisy_path(
    z0: Complex64,
    force: &ForceProfile,
    params: &ModeParams,
    nbar: f64,
    increments: &[Complex64],
    grid: &TimeGrid,
    scheme: NoiseScheme,
) -> Result<Path> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "thermal occupation must be nonnegative, got {nbar}"
        )));
    }
    if grid.duration() != params.duration {
        return Err(Error::GridMismatch(format!(
            "grid spans [0, {}] but the mode protocol time is {}",
            grid.duration(),
            params.duration
        )));
    }
    if increments.len() != grid.n_steps() {
        return Err(Error::GridMismatch(format!(
            "{} noise increments for {} steps",
            increments.len(),
            grid.n_steps()
        )));
    }
    force.ensure_finite_on(grid)?;

    let dt = grid.dt();
    let noise_amp = (2.0 * params.gamma * nbar).sqrt();
    let mut z = Vec::with_capacity(grid.len());
    let mut zk = z0;
    z.push(zk);
    for (k, dw) in increments.iter().enumerate() {
        let t = grid.t(k);
        let ftilde = params.ftilde(force, t);
        zk = match scheme {
            NoiseScheme::Exponential => {
                (-params.gamma * dt).exp() * zk
                    - I * dt * ftilde * (-params.gamma * dt / 2.0).exp()
            }
            NoiseScheme::EulerMaruyama => zk + dt * (-params.gamma * zk - I * ftilde),
        } - I * noise_amp * dw;
        z.push(zk);
    }
    let zdot = (0..grid.len())
        .map(|k| -params.gamma * z[k] - I * params.ftilde(force, grid.t(k)))
        .collect();
    Path::from_samples(grid.clone(), z, zdot)
}

/// The per-realization gate fidelity
/// F = ¼[e^{−S_A} + e^{−S_P} + 2cos(Δφ)e^{−Γ−(S_A+S_P)/2}],
/// with S = |z₊(T)|² + |z₋(T)|² the endpoint displacement of each branch.
///
/// `final_parallel` and `final_anti` are the (plus, minus) labels at T of the
/// two branches; Γ is the deterministic decoherence exponent, which the
/// shared noise leaves untouched.
pub fn fidelity_realization(
    final_parallel: (Complex64, Complex64),
    final_anti: (Complex64, Complex64),
    delta_phi: f64,
    gamma_exponent: f64,
) -> f64 {
    let s_parallel = final_parallel.0.norm_sqr() + final_parallel.1.norm_sqr();
    let s_anti = final_anti.0.norm_sqr() + final_anti.1.norm_sqr();
    0.25 * ((-s_anti).exp()
        + (-s_parallel).exp()
        + 2.0 * delta_phi.cos() * (-gamma_exponent - 0.5 * (s_anti + s_parallel)).exp())
}

/// A Monte Carlo fidelity estimate.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by √n_samples.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Precomputed deterministic context for Monte Carlo fidelity sampling.
///
/// Construction runs the deterministic gate once: the decoherence exponent Γ
/// is noise-independent and enters every realization unchanged. Realizations
/// are then independent, keyed by index, and may run in any order.
#[derive(Clone, Debug)]
pub struct McSampler {
    grid: TimeGrid,
    gamma: f64,
    noise_amp: f64,
    decay: f64,
    drift_minus: Vec<Complex64>,
    drift_plus: Vec<Complex64>,
    gamma_exponent: f64,
    target: f64,
    seed: u64,
}

fn drift_samples(
    drive: &InteractionDrive,
    gamma: f64,
    grid: &TimeGrid,
    scheme: NoiseScheme,
) -> Vec<Complex64> {
    let dt = grid.dt();
    let tail = match scheme {
        NoiseScheme::Exponential => (-gamma * dt / 2.0).exp(),
        NoiseScheme::EulerMaruyama => 1.0,
    };
    (0..grid.n_steps())
        .map(|k| -I * dt * drive.eval(grid.t(k)) * tail)
        .collect()
}

impl McSampler {
    /// Default exponential-update sampler.
    pub fn new(config: &GateConfig, seed: u64) -> Result<Self> {
        McSampler::with_scheme(config, seed, NoiseScheme::Exponential)
    }

    pub fn with_scheme(config: &GateConfig, seed: u64, scheme: NoiseScheme) -> Result<Self> {
        config.validate()?;
        let target = config.target_phase.ok_or_else(|| {
            Error::InvalidInput(
                "Monte Carlo fidelity needs a target phase as the reference for the phase error"
                    .into(),
            )
        })?;
        let outcome = run_gate(config, (Complex64::ZERO, Complex64::ZERO))?;
        let dt = config.grid.dt();
        let decay = match scheme {
            NoiseScheme::Exponential => (-config.gamma * dt).exp(),
            NoiseScheme::EulerMaruyama => 1.0 - config.gamma * dt,
        };
        let (_, driven_minus) = mode_forces(SpinCombo::UpUp, config);
        let (driven_plus, _) = mode_forces(SpinCombo::UpDown, config);
        Ok(McSampler {
            grid: config.grid.clone(),
            gamma: config.gamma,
            noise_amp: (2.0 * config.gamma * config.nbar).sqrt(),
            decay,
            drift_minus: drift_samples(&driven_minus, config.gamma, &config.grid, scheme),
            drift_plus: drift_samples(&driven_plus, config.gamma, &config.grid, scheme),
            gamma_exponent: outcome.gamma_exponent,
            target,
            seed,
        })
    }

    /// The deterministic decoherence exponent shared by all realizations.
    pub fn gamma_exponent(&self) -> f64 {
        self.gamma_exponent
    }

    /// Evolves the four branch-mode labels of realization `index` and returns
    /// its fidelity.
    ///
    /// Both branches of one mode share the mode's noise stream, so their
    /// difference (and with it Γ) stays deterministic; the phase is
    /// accumulated per step as Im(z̄·Δz) with the pre-step label, and the
    /// dissipative phase by the trapezoid rule on 2γ·Im(z_P·z̄_A).
    pub fn realization(&self, index: u64) -> f64 {
        let dt = self.grid.dt();
        let root_half_dt = (dt / 2.0).sqrt();
        let mut rng_minus = mode_rng(self.seed, index, 0);
        let mut rng_plus = mode_rng(self.seed, index, 1);

        let mut zm_par = Complex64::ZERO;
        let mut zm_anti = Complex64::ZERO;
        let mut zp_par = Complex64::ZERO;
        let mut zp_anti = Complex64::ZERO;
        let mut phase = 0.0;
        let mut phi_l = 0.0;
        let mut coupling_prev = 0.0;
        for k in 0..self.grid.n_steps() {
            let kick_minus =
                -I * self.noise_amp * gaussian_increment(&mut rng_minus, root_half_dt);
            let kick_plus = -I * self.noise_amp * gaussian_increment(&mut rng_plus, root_half_dt);
            let new_zm_par = self.decay * zm_par + self.drift_minus[k] + kick_minus;
            let new_zm_anti = self.decay * zm_anti + kick_minus;
            let new_zp_par = self.decay * zp_par + kick_plus;
            let new_zp_anti = self.decay * zp_anti + self.drift_plus[k] + kick_plus;
            phase += (zm_par.conj() * (new_zm_par - zm_par)).im
                - (zm_anti.conj() * (new_zm_anti - zm_anti)).im
                + (zp_par.conj() * (new_zp_par - zp_par)).im
                - (zp_anti.conj() * (new_zp_anti - zp_anti)).im;
            let coupling = (new_zm_par * new_zm_anti.conj()).im
                + (new_zp_par * new_zp_anti.conj()).im;
            phi_l += self.gamma * dt * (coupling_prev + coupling);
            coupling_prev = coupling;
            zm_par = new_zm_par;
            zm_anti = new_zm_anti;
            zp_par = new_zp_par;
            zp_anti = new_zp_anti;
        }
        let delta_phi = phase + phi_l - self.target;
        fidelity_realization(
            (zp_par, zm_par),
            (zp_anti, zm_anti),
            delta_phi,
            self.gamma_exponent,
        )
    }

    /// Averages `n_samples` realizations.
    ///
    /// Realizations are keyed by index, so the estimate is independent of
    /// execution order; with the `parallel` feature they run on the rayon
    /// pool and reduce in index order, giving bit-identical results to the
    /// sequential build.
    pub fn estimate(&self, n_samples: usize) -> Result<McEstimate> {
        if n_samples < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples for a standard error, got {n_samples}"
            )));
        }
        #[cfg(feature = "parallel")]
        let values: Vec<f64> = (0..n_samples as u64)
            .into_par_iter()
            .map(|index| self.realization(index))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let values: Vec<f64> = (0..n_samples as u64)
            .map(|index| self.realization(index))
            .collect();

        let mean = values.iter().sum::<f64>() / n_samples as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (n_samples as f64 - 1.0);
        Ok(McEstimate {
            mean,
            std_error: (variance / n_samples as f64).sqrt(),
            n_samples,
            seed: self.seed,
        })
    }
}

/// Monte Carlo estimate of the mean gate fidelity over `n_samples` noise
/// realizations with the default exponential update.
pub fn monte_carlo_fidelity(
    config: &GateConfig,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    McSampler::new(config, seed)?.estimate(n_samples)
}

/// Both variants of the cumulant approximation.
#[derive(Clone, Copy, Debug)]
pub struct CumulantFidelity {
    /// The final expression, linearized to first order in n̄γT.
    pub linearized: f64,
    /// The same approximation with the intermediate second-order expansion
    /// terms kept un-linearized (γ-dressed double integrals and
    /// m = n̄(1−e^{−2γT}) in place of its leading term 2n̄γT).
    pub unlinearized: f64,
}

/// The linearized cumulant approximation of the mean fidelity.
pub fn cumulant_fidelity(config: &GateConfig) -> Result<f64> {
    Ok(cumulant_fidelity_variants(config)?.linearized)
}

/// Evaluates the second-order cumulant approximation of the Monte Carlo
/// average from deterministic paths alone.
///
/// Splitting each label into its deterministic part and an independent
/// thermal part, the Gaussian averages of the endpoint, dephasing, and phase
/// factors reduce to five integral terms over the deterministic paths z(t)
/// and drives f̃(t): the decoherence exponent Γ = γ·I_d, the occupation
/// integral I_d itself, the single nested integral ∬ z̄(t₂)f̃(t₁) and the
/// double-drive integral ∬ f̃(t₁)f̃*(t₂)·w(t₂) on the triangular domain
/// t₂ ≤ t₁, plus the closed-form endpoint and label variances. In the
/// linearized variant the triangular weights are w = 1 and the variance per
/// label is 2n̄γT; the un-linearized variant keeps the γ-dressed weights
/// (e^{2γt₂}, sinh(γt₂) with e^{−γt₁} damping) and m = n̄(1−e^{−2γT}).
/// Endpoint displacements of open paths enter through the survival factors
/// e^{−S(1−2n̄γT)} (resp. 1−m); for the closed compensated paths of the
/// protocol these are identically 1.
pub fn cumulant_fidelity_variants(config: &GateConfig) -> Result<CumulantFidelity> {
    config.validate()?;
    let outcome = run_gate(config, (Complex64::ZERO, Complex64::ZERO))?;
    if config.nbar == 0.0 || config.gamma == 0.0 {
        return Ok(CumulantFidelity {
            linearized: outcome.fidelity_full,
            unlinearized: outcome.fidelity_full,
        });
    }

    let grid = &config.grid;
    let dt = grid.dt();
    let gamma = config.gamma;
    let nbar = config.nbar;
    let t_total = config.duration;
    let gnt = gamma * nbar * t_total;
    let m = nbar * (1.0 - (-2.0 * gamma * t_total).exp());

    let big_gamma = outcome.gamma_exponent;
    let occupation_integral = big_gamma / gamma;
    let delta_phi = outcome.delta_phi;
    let parallel = outcome.paths_for(SpinCombo::UpUp);
    let anti = outcome.paths_for(SpinCombo::UpDown);
    let s_parallel =
        parallel.plus.z_final().norm_sqr() + parallel.minus.z_final().norm_sqr();
    let s_anti = anti.plus.z_final().norm_sqr() + anti.minus.z_final().norm_sqr();

    let (_, driven_minus) = mode_forces(SpinCombo::UpUp, config);
    let (driven_plus, _) = mode_forces(SpinCombo::UpDown, config);
    let labels: [(&Path, &InteractionDrive); 2] = [
        (&parallel.minus, &driven_minus),
        (&anti.plus, &driven_plus),
    ];

    let mut d1 = Complex64::ZERO;
    let mut d1_dressed = Complex64::ZERO;
    let mut d2 = Complex64::ZERO;
    let mut d2_dressed = Complex64::ZERO;
    for (path, drive) in labels {
        let n = grid.len();
        let ftilde: Vec<Complex64> = (0..n).map(|k| drive.eval(grid.t(k))).collect();
        let z = path.z();

        let zbar: Vec<Complex64> = z.iter().map(|zk| zk.conj()).collect();
        let inner = cumulative_trapezoid_complex(&zbar, dt);
        let values: Vec<Complex64> = (0..n).map(|k| inner[k] * ftilde[k]).collect();
        d1 += simpson_complex(&values, dt);

        let dressed: Vec<Complex64> = (0..n)
            .map(|k| zbar[k] * (2.0 * gamma * grid.t(k)).exp())
            .collect();
        let inner = cumulative_trapezoid_complex(&dressed, dt);
        let values: Vec<Complex64> = (0..n)
            .map(|k| inner[k] * ftilde[k] * (-gamma * grid.t(k)).exp())
            .collect();
        d1_dressed += (-gamma * t_total).exp() * simpson_complex(&values, dt);

        let weighted: Vec<Complex64> = (0..n).map(|k| ftilde[k].conj() * grid.t(k)).collect();
        let inner = cumulative_trapezoid_complex(&weighted, dt);
        let values: Vec<Complex64> = (0..n).map(|k| ftilde[k] * inner[k]).collect();
        d2 += simpson_complex(&values, dt);

        let weighted: Vec<Complex64> = (0..n)
            .map(|k| ftilde[k].conj() * (gamma * grid.t(k)).sinh())
            .collect();
        let inner = cumulative_trapezoid_complex(&weighted, dt);
        let values: Vec<Complex64> = (0..n)
            .map(|k| ftilde[k] * inner[k] * (-gamma * grid.t(k)).exp())
            .collect();
        d2_dressed += simpson_complex(&values, dt);
    }

    let cross_exponent_lin = -big_gamma - 4.0 * gnt - 0.5 * gamma * nbar * occupation_integral
        + gamma * nbar * d1.im
        - gamma * nbar * d2.re;
    let linearized = 0.25
        * ((-4.0 * gnt).exp()
            * ((-s_anti * (1.0 - 2.0 * gnt)).exp() + (-s_parallel * (1.0 - 2.0 * gnt)).exp())
            + 2.0
                * delta_phi.cos()
                * cross_exponent_lin.exp()
                * (-0.5 * (s_anti + s_parallel) * (1.0 - 2.0 * gnt)).exp());

    let cross_exponent = -big_gamma - 2.0 * m - 0.5 * gamma * nbar * occupation_integral
        + gamma * nbar * d1_dressed.im
        - nbar * d2_dressed.re;
    let survival = (-2.0 * m + m * m).exp();
    let unlinearized = 0.25
        * (survival * ((-s_anti * (1.0 - m)).exp() + (-s_parallel * (1.0 - m)).exp())
            + 2.0
                * delta_phi.cos()
                * cross_exponent.exp()
                * (-0.5 * (s_anti + s_parallel) * (1.0 - m)).exp());

    Ok(CumulantFidelity {
        linearized,
        unlinearized,
    })
}
