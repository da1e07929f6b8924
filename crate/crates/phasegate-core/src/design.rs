//! Force construction.
//!
//! Three jobs live here:
//!
//! * [`compensate_damping`] and [`kappa_for_phase`]: turn a force that closes
//!   its path at γ = 0 into one that closes it at γ > 0 with the same phase,
//!   via f ↦ κ·e^{−γt}·f.
//! * [`gram_schmidt_force`]: project a seed profile onto the complement of a
//!   [`ConstraintSet`], producing forces that satisfy path closure (mode
//!   sin/cos conditions) and first-order offset robustness (zero mean).
//! * [`closed_two_mode_family`]: the built-in pulse family for the two-mode
//!   gate, assembled from low-order sine seeds with endpoint conditions
//!   f(0) = f(T) = 0 and the leftover freedom spent on maximizing phase per
//!   unit of integrated excitation.
//!
//! All inner products are the L² pairing ⟨g, h⟩ = ∫₀ᵀ g·h dt evaluated by
//! composite Simpson quadrature on a stated grid. Because the propagators use
//! the same quadrature, discrete orthogonality translates into path closure
//! at the roundoff level, well inside every stated tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{propagate_closed_form, ModeParams, Path};
use crate::error::{Error, Result};
use crate::force::{ForceProfile, HarmonicTerm};
use crate::grid::{simpson, TimeGrid};
use crate::phase::isolated_phase;

/// Condition-number guard for the constraint Gram matrix.
const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Residual threshold below which a seed counts as lying in the span of the
/// constraints, relative to the seed norm.
const DEGENERATE_SEED_REL: f64 = 1e-8;

/// Relative eigenvalue threshold for null-space extraction.
const NULLSPACE_REL: f64 = 1e-10;

/// Functions a designed force must be L²-orthogonal to.
///
/// Orthogonality to e^{γt}sin(ωt) and e^{γt}cos(ωt) makes the damped path of
/// that mode return to the origin; orthogonality to the constant makes the
/// phase first-order insensitive to a constant force offset.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    members: Vec<ForceProfile>,
}

impl ConstraintSet {
    /// An arbitrary constraint set from explicit members.
    pub fn new(members: Vec<ForceProfile>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("constraint set is empty".into()));
        }
        Ok(ConstraintSet { members })
    }

    /// Closure + robustness set for a single mode:
    /// {e^{γt}sin(ωt), e^{γt}cos(ωt), 1}.
    pub fn one_mode(omega: f64, gamma: f64) -> Result<Self> {
        check_rates(&[omega], gamma)?;
        ConstraintSet::new(vec![
            growing_sin(omega, gamma),
            growing_cos(omega, gamma),
            ForceProfile::constant(1.0),
        ])
    }

    /// Closure + robustness set for the two-mode gate:
    /// {e^{γt}sin(Ω₊t), e^{γt}cos(Ω₊t), e^{γt}sin(Ω₋t), e^{γt}cos(Ω₋t), 1}.
    pub fn two_mode(omega_plus: f64, omega_minus: f64, gamma: f64) -> Result<Self> {
        check_rates(&[omega_plus, omega_minus], gamma)?;
        if omega_plus == omega_minus {
            return Err(Error::InvalidInput(
                "two-mode constraint set needs distinct mode frequencies".into(),
            ));
        }
        ConstraintSet::new(vec![
            growing_sin(omega_plus, gamma),
            growing_cos(omega_plus, gamma),
            growing_sin(omega_minus, gamma),
            growing_cos(omega_minus, gamma),
            ForceProfile::constant(1.0),
        ])
    }

    pub fn members(&self) -> &[ForceProfile] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn check_rates(omegas: &[f64], gamma: f64) -> Result<()> {
    for &w in omegas {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mode frequency must be positive and finite, got {w}"
            )));
        }
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "damping rate must be nonnegative and finite, got {gamma}"
        )));
    }
    Ok(())
}

fn growing_sin(omega: f64, gamma: f64) -> ForceProfile {
    ForceProfile::harmonics(vec![HarmonicTerm {
        amplitude: 1.0,
        omega,
        phase: 0.0,
        decay: -gamma,
    }])
}

fn growing_cos(omega: f64, gamma: f64) -> ForceProfile {
    ForceProfile::harmonics(vec![HarmonicTerm {
        amplitude: 1.0,
        omega,
        phase: std::f64::consts::FRAC_PI_2,
        decay: -gamma,
    }])
}

/// L² inner product on [0, T], evaluated by composite Simpson on `grid`.
#[derive(Clone, Debug)]
pub struct InnerProductRule {
    grid: TimeGrid,
}

impl InnerProductRule {
    pub fn new(grid: TimeGrid) -> Self {
        InnerProductRule { grid }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// ⟨f, g⟩ = ∫₀ᵀ f(t)g(t) dt.
    pub fn pair(&self, f: &ForceProfile, g: &ForceProfile) -> f64 {
        let fs = f.sample_on(&self.grid);
        let gs = g.sample_on(&self.grid);
        self.pair_samples(&fs, &gs)
    }

    /// ‖f‖ = √⟨f, f⟩.
    pub fn norm(&self, f: &ForceProfile) -> f64 {
        let fs = f.sample_on(&self.grid);
        self.pair_samples(&fs, &fs).max(0.0).sqrt()
    }

    fn pair_samples(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        simpson(&prod, self.grid.dt())
    }
}

/// Returns t ↦ e^{−γt}·force_nd(t), the damping-compensated drive without the
/// κ amplitude factor (see [`kappa_for_phase`]).
///
/// If force_nd closes a mode path at γ = 0 from the origin, the compensated
/// force closes it at damping γ, with z_d(t) = e^{−γt}·z_nd(t) pointwise. At
/// γ = 0 the input is returned unchanged.
pub fn compensate_damping(force_nd: &ForceProfile, gamma: f64) -> ForceProfile {
    force_nd.damped(gamma)
}

/// Amplitude factor κ = √(target/achieved) such that scaling the force by κ
/// scales the single-path phase ∫Im(ż z̄)dt from `achieved` to `target`.
///
/// The path is driven from the origin, so the label and hence the enclosed
/// area scale linearly and quadratically with the force amplitude. Fails when
/// the force produces zero phase or a phase of the opposite sign.
pub fn kappa_for_phase(
    force: &ForceProfile,
    params: &ModeParams,
    grid: &TimeGrid,
    target_phase: f64,
) -> Result<f64> {
    let path = propagate_closed_form(Complex64::new(0.0, 0.0), force, params, grid)?;
    let achieved = isolated_phase(&path, &Path::at_origin(grid.clone()))?;
    if achieved == 0.0 || !achieved.is_finite() {
        return Err(Error::NoSolution(format!(
            "cannot rescale to phase {target_phase}: force produces phase {achieved}"
        )));
    }
    if target_phase * achieved < 0.0 {
        return Err(Error::NoSolution(format!(
            "target phase {target_phase} and achieved phase {achieved} have opposite signs"
        )));
    }
    Ok((target_phase / achieved).sqrt())
}

/// Projects `seed` onto the orthogonal complement of the constraint span.
///
/// Solves the Gram system ⟨cᵢ, cⱼ⟩β = ⟨cᵢ, seed⟩ by SVD and returns
/// seed − Σᵢ βᵢcᵢ. The output pairs to zero with every constraint under
/// `rule`, which for the mode sin/cos members means path closure from the
/// origin and for the constant member means a zero-mean force.
///
/// When the seed and all constraints are analytic profiles the output stays
/// analytic (term lists are merged), so downstream propagation, damping
/// compensation, and rescaling remain exact. Any sampled input degrades the
/// output to a sampled profile on the rule's grid.
pub fn gram_schmidt_force(
    seed: &ForceProfile,
    constraints: &ConstraintSet,
    rule: &InnerProductRule,
) -> Result<ForceProfile> {
    let grid = rule.grid();
    seed.ensure_finite_on(grid)?;
    let n = constraints.len();
    let member_samples: Vec<Vec<f64>> = constraints
        .members()
        .iter()
        .map(|c| c.sample_on(grid))
        .collect();
    let seed_samples = seed.sample_on(grid);

    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        for j in i..n {
            let g = rule.pair_samples(&member_samples[i], &member_samples[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
        rhs[i] = rule.pair_samples(&member_samples[i], &seed_samples);
    }

    let svd = gram.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_min > 0.0) || sigma_max / sigma_min > GRAM_CONDITION_LIMIT {
        return Err(Error::IllConditioned(format!(
            "constraint Gram matrix condition number {:.3e} exceeds {:.0e}",
            if sigma_min > 0.0 {
                sigma_max / sigma_min
            } else {
                f64::INFINITY
            },
            GRAM_CONDITION_LIMIT
        )));
    }
    let beta = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditioned(format!("Gram solve failed: {e}")))?;

    let residual: Vec<f64> = (0..seed_samples.len())
        .map(|k| {
            let proj: f64 = (0..n).map(|i| beta[i] * member_samples[i][k]).sum();
            seed_samples[k] - proj
        })
        .collect();
    let res_norm = rule.pair_samples(&residual, &residual).max(0.0).sqrt();
    let seed_norm = rule.pair_samples(&seed_samples, &seed_samples).max(0.0).sqrt();
    if res_norm <= DEGENERATE_SEED_REL * seed_norm {
        return Err(Error::DegenerateSeed(format!(
            "seed lies in the constraint span (residual {res_norm:.3e} vs seed norm {seed_norm:.3e})"
        )));
    }

    let mut out = seed.clone();
    for (i, member) in constraints.members().iter().enumerate() {
        out = out.add(&member.scaled(-beta[i]), grid)?;
    }
    Ok(out)
}

/// First-order phase response metric s = ∫₀ᵀ Re(e^{−iωt} z(t)) dt for the
/// path driven from the origin.
///
/// A constant offset δf added to the force shifts the accumulated phase by
/// −δf·2s to first order in the limit of slow damping and a closed path;
/// forces with zero mean driving closed paths have s = 0, which is the
/// robustness condition the constant constraint-set member enforces.
pub fn offset_sensitivity(
    force: &ForceProfile,
    params: &ModeParams,
    grid: &TimeGrid,
) -> Result<f64> {
    let path = propagate_closed_form(Complex64::new(0.0, 0.0), force, params, grid)?;
    let integrand: Vec<f64> = path
        .z()
        .iter()
        .enumerate()
        .map(|(k, z)| (Complex64::from_polar(1.0, -params.omega * grid.t(k)) * z).re)
        .collect();
    Ok(simpson(&integrand, grid.dt()))
}

/// Built-in two-mode pulse family: sine seeds sin(kπt/T) for k = 1..4 are
/// projected onto the complement of the γ = 0 two-mode constraint set, the
/// endpoint conditions f(0) = f(T) = 0 are imposed by superposition, and the
/// remaining freedom picks the member with the largest phase per unit of
/// integrated excitation ∫(|z₊|² + |z₋|²)dt.
///
/// The returned profile is analytic, unit-normalized in its seed
/// coefficients, and sign-fixed so its two-mode gate phase is reproducible;
/// amplitude scaling to a phase target is the caller's job via
/// [`kappa_for_phase`]. Damping is handled downstream by
/// [`compensate_damping`]; the family itself is built at γ = 0.
pub fn closed_two_mode_family(
    omega_plus: f64,
    omega_minus: f64,
    duration: f64,
    grid: &TimeGrid,
) -> Result<ForceProfile> {
    const K_SEEDS: usize = 4;
    let set = ConstraintSet::two_mode(omega_plus, omega_minus, 0.0)?;
    let rule = InnerProductRule::new(grid.clone());
    let params_p = ModeParams::new(omega_plus, 0.0, duration)?;
    let params_m = ModeParams::new(omega_minus, 0.0, duration)?;

    let mut projected = Vec::with_capacity(K_SEEDS);
    for k in 1..=K_SEEDS {
        let seed = ForceProfile::scaled_sine(1.0, k as f64 * std::f64::consts::PI / duration, 0.0);
        projected.push(gram_schmidt_force(&seed, &set, &rule)?);
    }

    // Null space of the endpoint-value matrix: members with f(0) = f(T) = 0.
    let endpoint = DMatrix::<f64>::from_fn(2, K_SEEDS, |r, c| {
        projected[c].eval(if r == 0 { 0.0 } else { duration })
    });
    let null_basis = symmetric_null_basis(&(endpoint.transpose() * &endpoint))?;

    // Cost form Q (integrated excitation) and phase form P over the seeds.
    let origin = Complex64::new(0.0, 0.0);
    let mut paths_p = Vec::with_capacity(K_SEEDS);
    let mut paths_m = Vec::with_capacity(K_SEEDS);
    for p in &projected {
        let drive = p.scaled(-1.0);
        paths_p.push(propagate_closed_form(origin, &drive, &params_p, grid)?);
        paths_m.push(propagate_closed_form(origin, &drive, &params_m, grid)?);
    }
    let dt = grid.dt();
    let mut q = DMatrix::<f64>::zeros(K_SEEDS, K_SEEDS);
    let mut p_form = DMatrix::<f64>::zeros(K_SEEDS, K_SEEDS);
    for i in 0..K_SEEDS {
        for j in 0..K_SEEDS {
            let qv: Vec<f64> = (0..grid.len())
                .map(|k| {
                    (paths_p[i].z()[k].conj() * paths_p[j].z()[k]
                        + paths_m[i].z()[k].conj() * paths_m[j].z()[k])
                        .re
                })
                .collect();
            q[(i, j)] = simpson(&qv, dt);
            let pv: Vec<f64> = (0..grid.len())
                .map(|k| {
                    (paths_m[i].zdot()[k] * paths_m[j].z()[k].conj()
                        - paths_p[i].zdot()[k] * paths_p[j].z()[k].conj())
                    .im
                })
                .collect();
            p_form[(i, j)] = simpson(&pv, dt);
        }
    }
    let p_form = (&p_form + p_form.transpose()) * 0.5;

    // Restrict both forms to the endpoint null space and maximize the
    // generalized Rayleigh quotient phase/cost there.
    let qn = null_basis.transpose() * &q * &null_basis;
    let pn = null_basis.transpose() * &p_form * &null_basis;
    let qe = nalgebra::SymmetricEigen::new(qn);
    let qe_max = qe.eigenvalues.max();
    if !(qe_max > 0.0) {
        return Err(Error::NoSolution(
            "pulse family cost form is not positive on the endpoint null space".into(),
        ));
    }
    let kept: Vec<usize> = (0..qe.eigenvalues.len())
        .filter(|&i| qe.eigenvalues[i] > NULLSPACE_REL * qe_max)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoSolution(
            "pulse family cost form is degenerate on the endpoint null space".into(),
        ));
    }
    let mut whiten = DMatrix::<f64>::zeros(qe.eigenvectors.nrows(), kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let scale = 1.0 / qe.eigenvalues[i].sqrt();
        whiten
            .column_mut(col)
            .copy_from(&(qe.eigenvectors.column(i) * scale));
    }
    let m = whiten.transpose() * &pn * &whiten;
    let m = (&m + m.transpose()) * 0.5;
    let me = nalgebra::SymmetricEigen::new(m);
    let (best, lambda) = (0..me.eigenvalues.len())
        .map(|i| (i, me.eigenvalues[i]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if lambda <= 0.0 {
        return Err(Error::NoSolution(
            "pulse family has no positive-phase member under the endpoint conditions".into(),
        ));
    }
    let coeffs = null_basis * (whiten * me.eigenvectors.column(best));

    // Canonical normalization: unit coefficient vector, dominant entry positive.
    let norm = coeffs.norm();
    let dominant = (0..coeffs.len())
        .max_by(|&a, &b| coeffs[a].abs().total_cmp(&coeffs[b].abs()))
        .unwrap();
    let sign = if coeffs[dominant] < 0.0 { -1.0 } else { 1.0 };
    let mut family = ForceProfile::zero();
    for (k, p) in projected.iter().enumerate() {
        family = family.add(&p.scaled(sign * coeffs[k] / norm), grid)?;
    }
    Ok(family)
}

/// Orthonormal basis of the (near-)null space of a symmetric PSD matrix,
/// using a relative eigenvalue threshold.
fn symmetric_null_basis(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(mat.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() <= NULLSPACE_REL * max)
        .collect();
    if cols.is_empty() {
        return Err(Error::NoSolution(
            "endpoint conditions leave no free direction in the seed span".into(),
        ));
    }
    let mut basis = DMatrix::<f64>::zeros(mat.nrows(), cols.len());
    for (c, &i) in cols.iter().enumerate() {
        basis.column_mut(c).copy_from(&eig.eigenvectors.column(i));
    }
    Ok(basis)
}
