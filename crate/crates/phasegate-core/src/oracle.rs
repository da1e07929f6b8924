//! Brute-force reference solver: dense truncated-Fock integration of the
//! damped, driven mode master equation
//! ρ̇ = −i[H̃(t), ρ] + γ(n̄+1)(2aρa† − a†aρ − ρa†a) + γn̄(2a†ρa − aa†ρ − ρaa†),
//! with H̃ = f̃*(t)a + f̃(t)a†.
//!
//! Everything here is deliberately slow and independent of the coherent-label
//! fast path: expectations, spin coherences, and gate fidelities computed in
//! a finite Fock basis back every closed-form claim of the other modules.
//! The spin degrees of freedom never need to be tensored in explicitly: each
//! spin pair (i, j) only tags which drive acts from the left and which from
//! the right of its motional block ⟨i|ρ|j⟩, so a gate solve reduces to a set
//! of independent block integrations whose traces assemble the reduced spin
//! state.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::ModeParams;
use crate::error::{Error, Result};
use crate::force::ForceProfile;
use crate::gate::{mode_forces, GateConfig, SpinCombo};
use crate::grid::TimeGrid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hard ceiling for truncation escalation.
pub const TRUNCATION_CAP: usize = 256;

/// Magic bytes opening a binary density-matrix dump.
pub const DUMP_MAGIC: &[u8; 8] = b"RHODMP01";

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_FLOOR: f64 = -1e-8;
const TRACE_DRIFT_LIMIT: f64 = 1e-6;
const ROTATION_RESOLUTION: f64 = 0.1;

/// Fock-space truncation with automatic escalation.
///
/// `tail_threshold` bounds the population allowed in the top two Fock levels
/// at any time during a run; a solve whose tail exceeds it restarts with
/// `n_max` doubled, up to [`TRUNCATION_CAP`].
#[derive(Clone, Copy, Debug)]
pub struct TruncationPolicy {
    pub n_max: usize,
    pub tail_threshold: f64,
}

impl TruncationPolicy {
    pub fn new(n_max: usize, tail_threshold: f64) -> Result<Self> {
        if n_max < 4 {
            return Err(Error::InvalidInput(format!(
                "truncation needs at least 4 levels, got {n_max}"
            )));
        }
        if !(tail_threshold > 0.0 && tail_threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail threshold must lie in (0, 1), got {tail_threshold}"
            )));
        }
        Ok(TruncationPolicy {
            n_max,
            tail_threshold,
        })
    }

    /// Default for zero-temperature runs: |z| ≲ 3 keeps Poisson tails
    /// negligible by n = 32.
    pub fn zero_temperature() -> Self {
        TruncationPolicy {
            n_max: 32,
            tail_threshold: 1e-8,
        }
    }

    /// Default for finite-temperature runs, where thermal tails decay more
    /// slowly than Poisson ones.
    pub fn finite_temperature() -> Self {
        TruncationPolicy {
            n_max: 64,
            tail_threshold: 1e-8,
        }
    }
}

/// A validated density matrix: Hermitian, unit trace, positive up to
/// integrator noise.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates and wraps a raw matrix. Hermiticity must hold to 1e−12,
    /// the trace must be 1 to 1e−10, and no eigenvalue may lie below −1e−8.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "density matrix must be square and nonempty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "density matrix has non-finite entries".into(),
            ));
        }
        let scale = data.iter().map(|x| x.norm()).fold(1.0f64, f64::max);
        let mut herm_dev = 0.0f64;
        for r in 0..data.nrows() {
            for c in r..data.ncols() {
                herm_dev = herm_dev.max((data[(r, c)] - data[(c, r)].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian: deviation {herm_dev:.2e}"
            )));
        }
        let trace = data.trace();
        if (trace - Complex64::ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidInput(format!(
                "trace must be 1, got {trace}"
            )));
        }
        let eigenvalues = nalgebra::SymmetricEigen::new(data.clone()).eigenvalues;
        let min_eigenvalue = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eigenvalue < POSITIVITY_FLOOR {
            return Err(Error::InvalidInput(format!(
                "matrix has a negative eigenvalue {min_eigenvalue:.2e}"
            )));
        }
        Ok(DensityMatrix { data })
    }

    /// The Fock vacuum |0⟩⟨0|.
    pub fn vacuum(dim: usize) -> Self {
        let mut data = DMatrix::zeros(dim, dim);
        data[(0, 0)] = Complex64::ONE;
        DensityMatrix { data }
    }

    /// A thermal state of mean occupation `nbar`, renormalized on the
    /// truncated basis.
    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "thermal occupation must be nonnegative, got {nbar}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let ratio = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..dim).map(|j| ratio.powi(j as i32)).collect();
        let norm: f64 = weights.iter().sum();
        let mut data = DMatrix::zeros(dim, dim);
        for (j, w) in weights.iter().enumerate() {
            data[(j, j)] = Complex64::new(w / norm, 0.0);
        }
        Ok(DensityMatrix { data })
    }

    /// The coherent state |z₀⟩⟨z₀|, truncated and renormalized.
    pub fn coherent(dim: usize, z0: Complex64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !z0.is_finite() {
            return Err(Error::InvalidInput("coherent label must be finite".into()));
        }
        let mut amps = Vec::with_capacity(dim);
        let mut amp = Complex64::ONE;
        amps.push(amp);
        for j in 1..dim {
            amp *= z0 / (j as f64).sqrt();
            amps.push(amp);
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let mut data = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                data[(r, c)] = amps[r] * amps[c].conj() / norm;
            }
        }
        Ok(DensityMatrix { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// tr ρ², i.e. 1 exactly on pure states.
    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// ⟨a†a⟩.
    pub fn occupation(&self) -> f64 {
        (0..self.dim())
            .map(|j| j as f64 * self.data[(j, j)].re)
            .sum()
    }

    /// ⟨a⟩.
    pub fn mean_alpha(&self) -> Complex64 {
        (0..self.dim().saturating_sub(1))
            .map(|j| ((j + 1) as f64).sqrt() * self.data[(j + 1, j)])
            .sum()
    }

    /// Ground-level population ⟨0|ρ|0⟩.
    pub fn ground_population(&self) -> f64 {
        self.data[(0, 0)].re
    }

    /// Writes the matrix as a binary dump: the magic bytes `RHODMP01`, the
    /// dimension as a little-endian u64, then row-major (re, im) f64 pairs,
    /// little-endian.
    pub fn write_binary<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        writer.write_all(DUMP_MAGIC)?;
        writer.write_all(&(self.dim() as u64).to_le_bytes())?;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                writer.write_all(&self.data[(r, c)].re.to_le_bytes())?;
                writer.write_all(&self.data[(r, c)].im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// One classical Runge-Kutta step of the full master equation with a
/// time-dependent Hamiltonian and an arbitrary list of (rate, operator)
/// dissipator pairs, each contributing rate·(2LρL† − L†Lρ − ρL†L).
///
/// The trace of the generator vanishes identically, so any drift beyond
/// 1e−6 signals a step too coarse for the generator norm; it is reported,
/// never renormalized away.
pub fn step_master_equation(
    rho: &DensityMatrix,
    hamiltonian: impl Fn(f64) -> DMatrix<Complex64>,
    lindblad: &[(f64, DMatrix<Complex64>)],
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let dim = rho.dim();
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {dt}"
        )));
    }
    for (rate, op) in lindblad {
        if !(rate.is_finite() && *rate >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "dissipator rates must be nonnegative, got {rate}"
            )));
        }
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "dissipator operator is {}x{} for dimension {dim}",
                op.nrows(),
                op.ncols()
            )));
        }
    }
    let rhs = |sigma: &DMatrix<Complex64>, time: f64| -> Result<DMatrix<Complex64>> {
        let h = hamiltonian(time);
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian is {}x{} for dimension {dim}",
                h.nrows(),
                h.ncols()
            )));
        }
        let mut out = (&h * sigma - sigma * &h) * (-I);
        for (rate, op) in lindblad {
            let op_dag = op.adjoint();
            let quad = &op_dag * op;
            out += ((op * sigma * &op_dag).scale(2.0) - &quad * sigma - sigma * &quad)
                .scale(*rate);
        }
        Ok(out)
    };

    let k1 = rhs(&rho.data, t)?;
    let k2 = rhs(&(&rho.data + k1.scale(dt / 2.0)), t + dt / 2.0)?;
    let k3 = rhs(&(&rho.data + k2.scale(dt / 2.0)), t + dt / 2.0)?;
    let k4 = rhs(&(&rho.data + k3.scale(dt)), t + dt)?;
    let next = &rho.data + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);

    // The negated comparison also trips on NaN, so a blown-up step cannot
    // masquerade as a small drift.
    let drift = (next.trace() - rho.trace()).norm();
    if !(drift <= TRACE_DRIFT_LIMIT) {
        return Err(Error::StepSize(format!(
            "trace drifted by {drift:.2e} in one step"
        )));
    }
    // An unstable step typically breaks positivity before the trace moves;
    // report that as a step-size problem too.
    DensityMatrix::new(next).map_err(|err| match err {
        Error::InvalidInput(msg) => Error::StepSize(format!("step left an invalid state: {msg}")),
        other => other,
    })
}

/// A dense integrator for one motional block ⟨i|ρ|j⟩ with the left branch
/// driven by `f_row` and the right branch by `f_col`; the indexed ladder
/// structure keeps every right-hand side evaluation O(dim²).
struct BlockIntegrator<'a> {
    dim: usize,
    sqrt: Vec<f64>,
    gamma_down: f64,
    gamma_up: f64,
    /// Diagonal of the truncated a·a†: j+1 below the cutoff, 0 at the top
    /// level. Using the projected operator product (rather than the
    /// infinite-space coefficients) keeps the truncated generator exactly
    /// trace-preserving, matching what [`step_master_equation`] builds from
    /// explicit matrices.
    heating_weight: Vec<f64>,
    f_row: Vec<Complex64>,
    f_col: Vec<Complex64>,
    grid: &'a TimeGrid,
}

struct BlockRun {
    final_block: DMatrix<Complex64>,
    tail_max: f64,
    trace_drift: f64,
}

impl<'a> BlockIntegrator<'a> {
    fn new(
        f_row: &ForceProfile,
        f_col: &ForceProfile,
        params: &ModeParams,
        nbar: f64,
        dim: usize,
        grid: &'a TimeGrid,
    ) -> Result<Self> {
        if grid.duration() != params.duration {
            return Err(Error::GridMismatch(format!(
                "grid spans [0, {}] but the mode protocol time is {}",
                grid.duration(),
                params.duration
            )));
        }
        let h = 2.0 * grid.dt();
        if params.omega * h >= ROTATION_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "step ω·h = {:.3} does not resolve the mode rotation",
                params.omega * h
            )));
        }
        f_row.ensure_finite_on(grid)?;
        f_col.ensure_finite_on(grid)?;
        Ok(BlockIntegrator {
            dim,
            sqrt: (0..=dim).map(|j| (j as f64).sqrt()).collect(),
            gamma_down: params.gamma * (nbar + 1.0),
            gamma_up: params.gamma * nbar,
            heating_weight: (0..dim)
                .map(|j| if j + 1 < dim { (j + 1) as f64 } else { 0.0 })
                .collect(),
            f_row: (0..grid.len()).map(|k| params.ftilde(f_row, grid.t(k))).collect(),
            f_col: (0..grid.len()).map(|k| params.ftilde(f_col, grid.t(k))).collect(),
            grid,
        })
    }

    fn rhs(&self, sigma: &DMatrix<Complex64>, node: usize, out: &mut DMatrix<Complex64>) {
        let d = self.dim;
        let fi = self.f_row[node];
        let fj = self.f_col[node];
        let fi_conj = fi.conj();
        let fj_conj = fj.conj();
        for c in 0..d {
            for r in 0..d {
                let mut acc = Complex64::ZERO;
                if r + 1 < d {
                    acc -= I * fi_conj * self.sqrt[r + 1] * sigma[(r + 1, c)];
                }
                if r > 0 {
                    acc -= I * fi * self.sqrt[r] * sigma[(r - 1, c)];
                }
                if c > 0 {
                    acc += I * fj_conj * self.sqrt[c] * sigma[(r, c - 1)];
                }
                if c + 1 < d {
                    acc += I * fj * self.sqrt[c + 1] * sigma[(r, c + 1)];
                }
                if r + 1 < d && c + 1 < d {
                    acc += self.gamma_down
                        * 2.0
                        * self.sqrt[r + 1]
                        * self.sqrt[c + 1]
                        * sigma[(r + 1, c + 1)];
                }
                acc -= self.gamma_down * (r + c) as f64 * sigma[(r, c)];
                if r > 0 && c > 0 {
                    acc += self.gamma_up * 2.0 * self.sqrt[r] * self.sqrt[c] * sigma[(r - 1, c - 1)];
                }
                acc -= self.gamma_up
                    * (self.heating_weight[r] + self.heating_weight[c])
                    * sigma[(r, c)];
                out[(r, c)] = acc;
            }
        }
    }

    /// Integrates from `initial` with macro steps of two grid nodes,
    /// invoking `observe` at every macro node (including t = 0).
    fn evolve(
        &self,
        initial: DMatrix<Complex64>,
        mut observe: impl FnMut(usize, &DMatrix<Complex64>),
    ) -> BlockRun {
        let d = self.dim;
        let h = 2.0 * self.grid.dt();
        let mut sigma = initial;
        let mut k1 = DMatrix::zeros(d, d);
        let mut k2 = DMatrix::zeros(d, d);
        let mut k3 = DMatrix::zeros(d, d);
        let mut k4 = DMatrix::zeros(d, d);
        let trace0 = sigma.trace();
        let mut tail_max = 0.0f64;
        let mut trace_drift = 0.0f64;
        let track = |sigma: &DMatrix<Complex64>, tail_max: &mut f64, drift: &mut f64| {
            let tail = sigma[(d - 1, d - 1)].norm() + sigma[(d - 2, d - 2)].norm();
            let step_drift = (sigma.trace() - trace0).norm();
            // A stiffness blow-up shows up as NaN/inf; classify it as an
            // unbounded tail so escalation and error reporting see it.
            *tail_max = if tail.is_finite() {
                tail_max.max(tail)
            } else {
                f64::INFINITY
            };
            *drift = if step_drift.is_finite() {
                drift.max(step_drift)
            } else {
                f64::INFINITY
            };
        };
        track(&sigma, &mut tail_max, &mut trace_drift);
        observe(0, &sigma);
        for step in 0..self.grid.n_steps() / 2 {
            let node = 2 * step;
            self.rhs(&sigma, node, &mut k1);
            let stage = &sigma + k1.scale(h / 2.0);
            self.rhs(&stage, node + 1, &mut k2);
            let stage = &sigma + k2.scale(h / 2.0);
            self.rhs(&stage, node + 1, &mut k3);
            let stage = &sigma + k3.scale(h);
            self.rhs(&stage, node + 2, &mut k4);
            sigma += (&k1 + k2.scale(2.0) + k3.scale(2.0) + &k4).scale(h / 6.0);
            track(&sigma, &mut tail_max, &mut trace_drift);
            observe(node + 2, &sigma);
        }
        BlockRun {
            final_block: sigma,
            tail_max,
            trace_drift,
        }
    }
}

fn escalation_dims(policy: &TruncationPolicy, floor: usize) -> Vec<usize> {
    let mut dims = Vec::new();
    let mut n_max = policy.n_max;
    loop {
        dims.push((n_max + 1).max(floor));
        if n_max >= TRUNCATION_CAP {
            break;
        }
        n_max = (2 * n_max).min(TRUNCATION_CAP);
    }
    dims
}

fn embed(block: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(dim, dim);
    out.view_mut((0, 0), (block.nrows(), block.ncols()))
        .copy_from(block);
    out
}

/// A single-mode master-equation solution.
///
/// Expectation series are sampled at every macro node (two grid steps); the
/// full state is kept only at the final time, which is all the verification
/// workflows consume.
#[derive(Clone, Debug)]
pub struct SingleModeRun {
    pub times: Vec<f64>,
    pub mean_alpha: Vec<Complex64>,
    pub mean_occupation: Vec<f64>,
    pub final_state: DensityMatrix,
    pub dim_used: usize,
    /// Largest |tr ρ − 1| seen during the run; reported, never corrected.
    pub trace_drift: f64,
    pub tail_max: f64,
}

/// Integrates one damped, driven mode from `initial` under the full master
/// equation, escalating the truncation until the tail stays below threshold.
pub fn solve_single_mode(
    force: &ForceProfile,
    params: &ModeParams,
    nbar: f64,
    grid: &TimeGrid,
    policy: &TruncationPolicy,
    initial: &DensityMatrix,
) -> Result<SingleModeRun> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "thermal occupation must be nonnegative, got {nbar}"
        )));
    }
    let mut last_tail = 0.0;
    for dim in escalation_dims(policy, initial.dim()) {
        // A proper state is the diagonal block: the same drive acts on both
        // sides.
        let integrator = BlockIntegrator::new(force, force, params, nbar, dim, grid)?;
        let mut times = Vec::new();
        let mut mean_alpha = Vec::new();
        let mut mean_occupation = Vec::new();
        let run = integrator.evolve(embed(initial.data(), dim), |node, sigma| {
            times.push(grid.t(node));
            mean_alpha.push(
                (0..dim - 1)
                    .map(|j| ((j + 1) as f64).sqrt() * sigma[(j + 1, j)])
                    .sum(),
            );
            mean_occupation.push((0..dim).map(|j| j as f64 * sigma[(j, j)].re).sum());
        });
        last_tail = run.tail_max;
        if run.tail_max > policy.tail_threshold {
            continue;
        }
        if !(run.trace_drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::StepSize(format!(
                "trace drifted by {:.2e} over the run",
                run.trace_drift
            )));
        }
        let final_state = DensityMatrix::new(run.final_block).map_err(|err| match err {
            Error::InvalidInput(msg) => {
                Error::StepSize(format!("integration left an invalid state: {msg}"))
            }
            other => other,
        })?;
        return Ok(SingleModeRun {
            times,
            mean_alpha,
            mean_occupation,
            final_state,
            dim_used: dim,
            trace_drift: run.trace_drift,
            tail_max: run.tail_max,
        });
    }
    Err(Error::Truncation(format!(
        "tail population {last_tail:.2e} still above threshold at {TRUNCATION_CAP} levels"
    )))
}

/// The solved motional block ⟨i|ρ(T)|j⟩ of one spin pair.
///
/// Its trace carries the pair's dephasing and phase: |tr| = e^{−η} and
/// arg(tr) = the accumulated phase difference between the branches. The
/// ground amplitude ⟨0|σ|0⟩ additionally weighs the endpoint displacement.
#[derive(Clone, Debug)]
pub struct CoherenceRun {
    pub trace: Complex64,
    /// −ln|tr σ(T)|.
    pub decay: f64,
    /// arg tr σ(T).
    pub phase: f64,
    pub ground_amplitude: Complex64,
    pub final_block: DMatrix<Complex64>,
    pub dim_used: usize,
    pub tail_max: f64,
}

/// Evolves the motional block of a spin pair whose branches see the real
/// forces `f_row` (left) and `f_col` (right), starting from the vacuum.
pub fn solve_coherence_block(
    f_row: &ForceProfile,
    f_col: &ForceProfile,
    params: &ModeParams,
    nbar: f64,
    grid: &TimeGrid,
    policy: &TruncationPolicy,
) -> Result<CoherenceRun> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "thermal occupation must be nonnegative, got {nbar}"
        )));
    }
    let mut last_tail = 0.0;
    for dim in escalation_dims(policy, 2) {
        let integrator = BlockIntegrator::new(f_row, f_col, params, nbar, dim, grid)?;
        let run = integrator.evolve(embed(DensityMatrix::vacuum(2).data(), dim), |_, _| {});
        last_tail = run.tail_max;
        if run.tail_max > policy.tail_threshold {
            continue;
        }
        let trace = run.final_block.trace();
        return Ok(CoherenceRun {
            trace,
            decay: -trace.norm().ln(),
            phase: trace.arg(),
            ground_amplitude: run.final_block[(0, 0)],
            final_block: run.final_block,
            dim_used: dim,
            tail_max: run.tail_max,
        });
    }
    Err(Error::Truncation(format!(
        "tail population {last_tail:.2e} still above threshold at {TRUNCATION_CAP} levels"
    )))
}

/// The master-equation view of a full gate run.
#[derive(Clone, Debug)]
pub struct GateOracleRun {
    /// The reduced 4×4 spin state, combo-ordered as [`SpinCombo::ALL`],
    /// after tracing out both modes.
    pub spin_state: DensityMatrix,
    /// Fidelity of the reduced spin state against the ideal equal
    /// superposition of one parallel and one anti-parallel combination with
    /// relative phase `target_phase`; absent without a target.
    pub spin_fidelity: Option<f64>,
    /// Fidelity against the ideal spin state tensored with both modes in
    /// their ground state, i.e. including endpoint-displacement loss; this is
    /// the quantity the Monte Carlo average estimates.
    pub ground_fidelity: Option<f64>,
    /// −ln|coherence| of the representative (↑↑, ↑↓) pair over both modes.
    pub coherence_decay: f64,
    /// Phase of that coherence.
    pub coherence_phase: f64,
    pub dim_used: usize,
}

/// Integrates the full two-mode gate in the truncated Fock basis and
/// assembles the reduced spin state ρᵢⱼ = ¼·(tr σ₊ⁱʲ)(tr σ₋ⁱʲ) from the
/// per-pair, per-mode blocks. Both modes start in the ground state.
pub fn solve_two_mode_gate(
    config: &GateConfig,
    policy: &TruncationPolicy,
) -> Result<GateOracleRun> {
    config.validate()?;
    let params_plus = config.params_plus()?;
    let params_minus = config.params_minus()?;
    let grid = &config.grid;

    let mut dim_used = 0;
    let mut pair_block = |i: SpinCombo, j: SpinCombo| -> Result<(CoherenceRun, CoherenceRun)> {
        let (plus_i, minus_i) = mode_forces(i, config);
        let (plus_j, minus_j) = mode_forces(j, config);
        let plus = solve_coherence_block(
            &plus_i.as_real_profile(),
            &plus_j.as_real_profile(),
            &params_plus,
            config.nbar,
            grid,
            policy,
        )?;
        let minus = solve_coherence_block(
            &minus_i.as_real_profile(),
            &minus_j.as_real_profile(),
            &params_minus,
            config.nbar,
            grid,
            policy,
        )?;
        dim_used = dim_used.max(plus.dim_used).max(minus.dim_used);
        Ok((plus, minus))
    };

    let mut spin = DMatrix::zeros(4, 4);
    for i in SpinCombo::ALL {
        spin[(i.index(), i.index())] = Complex64::new(0.25, 0.0);
    }
    for (a, i) in SpinCombo::ALL.iter().enumerate() {
        for j in SpinCombo::ALL.iter().skip(a + 1) {
            let (plus, minus) = pair_block(*i, *j)?;
            let entry = 0.25 * plus.trace * minus.trace;
            spin[(i.index(), j.index())] = entry;
            spin[(j.index(), i.index())] = entry.conj();
        }
    }

    // Representative two-class pair: ↑↑ drives the center-of-mass mode, ↑↓
    // the stretch mode; their coherence carries the gate phase and Γ.
    let (cross_plus, cross_minus) = pair_block(SpinCombo::UpUp, SpinCombo::UpDown)?;
    let cross = cross_plus.trace * cross_minus.trace;
    let coherence_decay = -cross.norm().ln();
    let coherence_phase = cross.arg();

    let (spin_fidelity, ground_fidelity) = match config.target_phase {
        None => (None, None),
        Some(target) => {
            let reference = Complex64::from_polar(1.0, -target);
            let spin_f = 0.5 + 0.5 * (reference * cross).re;

            let (par_plus, par_minus) = pair_block(SpinCombo::UpUp, SpinCombo::UpUp)?;
            let (anti_plus, anti_minus) = pair_block(SpinCombo::UpDown, SpinCombo::UpDown)?;
            let ground_f = 0.25
                * ((par_plus.ground_amplitude * par_minus.ground_amplitude).re
                    + (anti_plus.ground_amplitude * anti_minus.ground_amplitude).re
                    + 2.0
                        * (reference
                            * cross_plus.ground_amplitude
                            * cross_minus.ground_amplitude)
                            .re);
            (Some(spin_f), Some(ground_f))
        }
    };

    Ok(GateOracleRun {
        spin_state: DensityMatrix::new(spin)?,
        spin_fidelity,
        ground_fidelity,
        coherence_decay,
        coherence_phase,
        dim_used,
    })
}
