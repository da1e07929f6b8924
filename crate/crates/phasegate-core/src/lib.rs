//! Simulation core for dissipative geometric phase gates on trapped ions.
//!
//! The model: each motional normal mode of a two-ion crystal is a damped,
//! driven harmonic oscillator whose coherent-state label z(t) obeys
//! ż = −γz − i·f̃(t) in the interaction picture, with f̃ = f·e^{iωt} and a
//! spin-dependent sign on the real drive f. A cyclic z path imprints a
//! geometric phase on the spin state; damping opens the path, shrinks the
//! enclosed area, and dephases the spin, all of which this crate quantifies
//! and (where possible) compensates.
//!
//! Module map:
//!
//! * [`grid`]: uniform time grids and Simpson quadrature.
//! * [`force`]: real drive profiles, analytic or sampled.
//! * [`dynamics`]: closed-form and RK4 propagation of z(t), closure checks.
//! * [`phase`]: dynamical/geometric/dissipative phase decomposition.
//! * [`design`]: damping compensation, phase-target scaling, Gram-Schmidt
//!   construction of closed and offset-robust forces.
//! * [`gate`]: the full two-mode, four-combination gate ledger and fidelity.
//! * [`thermal`]: stochastic thermal trajectories, Monte Carlo fidelity
//!   estimates, and their cumulant-expansion counterparts.
//! * [`oracle`]: dense truncated-Fock master-equation integration backing
//!   the coherent-label fast path.
//!
//! Units: time in μs, angular frequencies and damping rates in rad/μs, ħ = 1,
//! forces in scaled units with mass absorbed.

pub mod design;
pub mod dynamics;
pub mod error;
pub mod force;
pub mod gate;
pub mod grid;
pub mod oracle;
pub mod phase;
pub mod thermal;

pub use dynamics::{check_cyclic, propagate_closed_form, propagate_ode, ModeParams, Path};
pub use error::{Error, Result};
pub use force::{ForceProfile, HarmonicTerm, InteractionDrive};
pub use gate::{mode_forces, run_gate, GateConfig, GateOutcome, SpinCombo};
pub use grid::TimeGrid;
pub use oracle::{
    solve_coherence_block, solve_single_mode, solve_two_mode_gate, DensityMatrix,
    TruncationPolicy,
};
pub use phase::PhaseLedger;
pub use thermal::{
    cumulant_fidelity, cumulant_fidelity_variants, monte_carlo_fidelity, McEstimate, McSampler,
    NoiseRealization,
};
