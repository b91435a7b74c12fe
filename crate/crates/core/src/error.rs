//! Error type shared by every stage of the segmentation pipeline.

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// No channels, or fewer than two samples.
    #[error("empty input: {channels} channel(s) with {samples} sample(s); need at least 1 channel and 2 samples")]
    EmptyInput { channels: usize, samples: usize },

    /// A NaN or infinite sample.
    #[error("non-finite value in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },

    /// Channels of different lengths.
    #[error("ragged channels: channel {channel} has {found} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        expected: usize,
        found: usize,
    },

    /// Channel name list does not match the channel count.
    #[error("expected {expected} channel names, got {found}")]
    ChannelNames { expected: usize, found: usize },

    /// An index outside the valid range.
    #[error("{what} index {index} out of range (valid: 0..={max})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    /// Vectors of different lengths passed to a pairwise operation.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Subsequence length outside `2..=N/2`.
    #[error("subsequence length {length} invalid for series of length {series_len} (need 2 <= L <= N/2)")]
    SubseqTooLong { length: usize, series_len: usize },

    /// A malformed subsequence specification or profile.
    #[error("invalid subsequence spec: {0}")]
    InvalidSpec(String),

    /// Shape curve or search produced no usable change-point candidate.
    #[error("no change-point candidates")]
    NoCandidates,

    /// Boundaries not strictly increasing inside `(0, N)`.
    #[error("invalid boundaries: {0}")]
    InvalidBoundaries(String),

    /// Knee-point detection needs at least three trace entries.
    #[error("information-gain trace too short for knee detection: {len} entries, need 3")]
    TraceTooShort { len: usize },

    /// Error metrics need at least one estimated boundary.
    #[error("no estimated boundaries")]
    EmptyEstimate,

    /// Error metrics need at least one ground-truth boundary.
    #[error("no ground-truth boundaries")]
    EmptyTruth,

    /// Inconsistent pipeline configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
