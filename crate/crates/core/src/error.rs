//! Error type shared by every mechanism in the crate.

use thiserror::Error;

/// Errors produced by parameter derivation, encoding and decoding.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// The requested field modulus is not prime.
    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u64),
    /// The requested field modulus exceeds the supported range.
    #[error("modulus {0} exceeds 2^16")]
    ModulusTooLarge(u64),
    /// Zero has no multiplicative inverse.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    /// A point or message index is outside the universe.
    #[error("index {index} out of range for universe of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    /// The vector is not canonical (first nonzero coordinate must be 1).
    #[error("vector is not canonical")]
    NotCanonical,
    /// The zero vector does not name a projective point.
    #[error("zero vector has no projective representative")]
    ZeroVector,
    /// Derived parameters would overflow the supported integer range.
    #[error("parameters overflow: {0}")]
    ParameterOverflow(String),
    /// An input value lies outside `[0, k)`.
    #[error("input value {value} out of range for {k} values")]
    InputOutOfRange { value: u64, k: u64 },
    /// The universe is too large for exact distribution enumeration.
    #[error("universe of size {0} too large for exact mode")]
    TooLargeForExactMode(u64),
    /// Two count vectors cover different universes.
    #[error("universe mismatch: {left} vs {right}")]
    UniverseMismatch { left: u64, right: u64 },
    /// No (t, h) pair satisfies the block constraints.
    #[error("no feasible parameters for epsilon={epsilon}, k={k}, q={q}")]
    NoFeasibleParams { epsilon: f64, k: u64, q: u64 },
    /// Per-block counts do not match the configured block count.
    #[error("block count mismatch: expected {expected}, got {got}")]
    BlockMismatch { expected: u64, got: u64 },
    /// The subspace ratio is undefined because the intersection size is zero.
    #[error("intersection size is zero; ratio form undefined")]
    DegenerateIntersection,
    /// A public-coin input must have a nonzero last coordinate.
    #[error("input vector has zero last coordinate")]
    InputNotStarCanonical,
    /// A harness configuration field is invalid.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// A serialized message is malformed.
    #[error("malformed message bytes: {0}")]
    MalformedMessage(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
