//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors raised while building or solving a design problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar configuration value is outside its admissible range.
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    /// Input matrices disagree with the configured dimensions.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        /// Which input was malformed.
        what: &'static str,
        /// Expected element count.
        expected: usize,
        /// Supplied element count.
        got: usize,
    },
    /// The desired beampattern is identically zero, so the pattern weights are undefined.
    #[error("desired beampattern is identically zero")]
    DegeneratePattern,
    /// Exhaustive enumeration would exceed the configured candidate budget.
    #[error("enumeration of {candidates} candidates exceeds the budget of {budget}")]
    BudgetExceeded {
        /// Number of candidates the instance would require (saturating).
        candidates: u128,
        /// Configured cap.
        budget: u128,
    },
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
