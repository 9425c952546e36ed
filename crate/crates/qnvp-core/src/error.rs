//! Error taxonomy shared across the workspace.
//!
//! Every fallible operation returns [`Error`]; the CLI maps variants onto
//! process exit codes (config/usage -> 1, divergence -> 2, verification -> 3).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field passed into an operation contains NaN or infinity.
    #[error("non-finite input in {context}")]
    NonFiniteInput { context: &'static str },

    /// Grid construction or cross-grid shape mismatch.
    #[error("grid error: {0}")]
    Grid(String),

    /// delta = 0 requested where the electrostatic solve needs delta > 0.
    #[error("delta = 0: quasineutral singularity; use model qnvp")]
    QuasineutralSingularity,

    /// A density dropped below the positivity floor.
    #[error("density fell below floor: min n = {min:.3e} < {floor:.3e}")]
    DensityFloor { min: f64, floor: f64 },

    /// Caller error: bad argument combination, wrong state flavor, etc.
    #[error("usage error: {0}")]
    Usage(String),

    /// Time integration produced a non-finite state.
    #[error("integration diverged at step {step} (t = {time:.6})")]
    Diverged { step: usize, time: f64 },

    /// Configuration file rejected, with the offending key named.
    #[error("config error: {0}")]
    Config(String),

    /// Dense linear-algebra helper failed to converge or hit a singular pivot.
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl Error {
    /// Shorthand used by validation helpers.
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn grid(msg: impl Into<String>) -> Self {
        Error::Grid(msg.into())
    }
}
