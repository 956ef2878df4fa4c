use thiserror::Error;

/// Errors produced by the workbench.
///
/// The CLI maps these onto exit codes: every variant except
/// [`Error::Inconsistent`] is an input-side failure (exit 2), while
/// `Inconsistent` flags a numerical or logic bug detected by an internal
/// cross-check (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (shape mismatch, non-finite
    /// entries, bad document, precondition violation).
    #[error("input error: {0}")]
    Input(String),

    /// A candidate z does not map the space into itself: `not closed`.
    #[error("not closed: {0}")]
    NotQuasiMultiplier(String),

    /// A candidate z has operator norm above 1; the induced product need
    /// not be an operator-algebra product.
    #[error("not contractive: {0}")]
    NotContractive(String),

    /// Randomized spectral splitting kept colliding after all retries.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// Two sides of a theorem that must agree did not; this indicates a
    /// bug or a tolerance breakdown, never a property of the input.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for every variant that reflects bad input rather than an
    /// internal defect.
    pub fn is_input_side(&self) -> bool {
        !matches!(self, Error::Inconsistent(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
