//! Error type shared by all modules of the crate.

/// Errors produced by construction, propagation, design, and oracle routines.
///
/// The two broad classes matter to callers: rejected inputs (bad parameters,
/// mismatched grids, malformed profiles) versus numerical failures discovered
/// mid-computation (ill-conditioning, truncation overflow, step-size limits).
/// [`Error::is_numerical`] distinguishes them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or input value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two objects that must share a time grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A Gram-Schmidt seed lies (numerically) in the span of the constraints.
    #[error("degenerate seed: {0}")]
    DegenerateSeed(String),

    /// The constraint Gram matrix is too ill-conditioned to solve reliably.
    #[error("ill-conditioned constraint set: {0}")]
    IllConditioned(String),

    /// A requested solve has no solution (e.g. phase rescaling with a sign
    /// mismatch between target and achieved phase).
    #[error("no solution: {0}")]
    NoSolution(String),

    /// The Fock-space truncation cap was reached before tails converged.
    #[error("truncation limit exceeded: {0}")]
    Truncation(String),

    /// An integrator step violated its accuracy contract (e.g. trace drift).
    #[error("step size too large: {0}")]
    StepSize(String),
}

impl Error {
    /// True for failures of the numerics rather than of the supplied inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned(_)
                | Error::NoSolution(_)
                | Error::Truncation(_)
                | Error::StepSize(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
