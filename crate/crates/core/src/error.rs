use thiserror::Error;

/// Errors raised by the statistical core.
///
/// The `Display` output always starts with the variant name so that callers
/// (and the CLI) can match on it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("EmptyInput: no measurements supplied")]
    EmptyInput,

    #[error("NonFiniteValue: row {0} contains a NaN or infinite value")]
    NonFiniteValue(usize),

    #[error("BlockModeNeedsTwoGroups: block mode needs at least two groups, found {0}")]
    BlockModeNeedsTwoGroups(usize),

    #[error("NoSlopesRemaining: every candidate pair was discarded")]
    NoSlopesRemaining,

    #[error("OffsetOutOfRange: shifted median index {index} exceeds slope count {n_slopes} (offset {offset})")]
    OffsetOutOfRange {
        index: usize,
        n_slopes: usize,
        offset: usize,
    },

    #[error("NonFiniteEstimate: slope estimate {0} is not finite")]
    NonFiniteEstimate(f64),

    #[error("NegativeVariance: formula produced {0}")]
    NegativeVariance(f64),

    #[error("OutOfDomain: {0} is outside the open interval (0, 1)")]
    OutOfDomain(f64),

    #[error("IndexOutOfRange: interval ranks [{lower}, {upper}] fall outside 1..={n_slopes}")]
    IndexOutOfRange {
        lower: i64,
        upper: i64,
        n_slopes: usize,
    },

    #[error("AllReplicatesFailed: none of the {0} replicates produced a fit")]
    AllReplicatesFailed(usize),

    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
}

impl Error {
    /// The variant name, e.g. `"NoSlopesRemaining"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::BlockModeNeedsTwoGroups(_) => "BlockModeNeedsTwoGroups",
            Error::NoSlopesRemaining => "NoSlopesRemaining",
            Error::OffsetOutOfRange { .. } => "OffsetOutOfRange",
            Error::NonFiniteEstimate(_) => "NonFiniteEstimate",
            Error::NegativeVariance(_) => "NegativeVariance",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::AllReplicatesFailed(_) => "AllReplicatesFailed",
            Error::InvalidScenario(_) => "InvalidScenario",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
