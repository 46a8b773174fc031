use thiserror::Error;

use crate::dof::Scheme;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DofError {
    #[error("{what} = {value} is out of range ({expected})")]
    Domain {
        what: &'static str,
        value: usize,
        expected: String,
    },
    #[error("comparator {scheme} is only defined for K = 3, got K = {k}")]
    Unsupported { scheme: Scheme, k: usize },
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
}

impl DofError {
    pub(crate) fn domain(what: &'static str, value: usize, expected: impl Into<String>) -> Self {
        DofError::Domain {
            what,
            value,
            expected: expected.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("slot {slot} already generated (next expected slot is {next})")]
    SlotRegenerated { slot: usize, next: usize },
    #[error("slot {slot} has not been generated yet")]
    SlotMissing { slot: usize },
    #[error("delayed-CSIT violation: Tx{tx} asked for slot {slot} at slot {current}")]
    DelayedCsit {
        tx: usize,
        slot: usize,
        current: usize,
    },
    #[error("local-CSIT violation: Tx{tx} asked for the channel of Tx{queried}")]
    LocalCsit { tx: usize, queried: usize },
    #[error("precoder with {streams} streams needs at least {streams} antennas, have {antennas}")]
    TooManyStreams { streams: usize, antennas: usize },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("could not draw a full-rank {rows}x{cols} matrix")]
    RankDeficient { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("private symbol count must be at least 1")]
    EmptyRegistration,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("symbol {0} is not registered")]
    Unregistered(String),
    #[error("symbol {0} is already registered")]
    Duplicate(String),
    #[error("expected {expected} constituents, got {got}")]
    ConstituentCount { expected: usize, got: usize },
    #[error("constituent {0} does not belong to the requested group")]
    ForeignConstituent(String),
    #[error("combination matrix stayed rank deficient after {0} draws")]
    RankDeficient(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing payload for Tx{origin} towards {set}: need {need}, have {have}")]
    MissingPayload {
        origin: usize,
        set: String,
        need: usize,
        have: usize,
    },
    #[error("phase {0} executed out of order")]
    OutOfOrder(String),
    #[error(transparent)]
    Dof(#[from] DofError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Why a receiver stopped decoding.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    /// A system was numerically singular; the channel draw is degenerate.
    #[error("degenerate system in {stage} (smallest normalized singular value {smallest:e})")]
    Degenerate { stage: String, smallest: f64 },
    #[error("{symbol} recovered with relative residual {residual:e} above tolerance")]
    Tolerance { symbol: String, residual: f64 },
    #[error("{0} was needed before it was recovered")]
    Missing(String),
    #[error("transcript is inconsistent: {0}")]
    Transcript(String),
}
