//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Reason a CDF table fails validation. Returned by [`crate::rans::validate_cdf`];
/// the first violated invariant wins.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CdfViolation {
    #[error("precision_bits {0} outside [8, 16]")]
    PrecisionOutOfRange(u32),
    #[error("cum_freq needs at least 2 entries, got {0}")]
    TooFewEntries(usize),
    #[error("cum_freq[0] must be 0, got {0}")]
    FirstNotZero(u32),
    #[error("cum_freq not monotonically non-decreasing at index {0}")]
    NotMonotonic(usize),
    #[error("cum_freq[last] = {actual}, expected 2^precision_bits = {expected}")]
    TotalMismatch { expected: u32, actual: u32 },
    #[error("alphabet size {0} exceeds the supported maximum of 65536")]
    AlphabetTooLarge(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cdf table: {0}")]
    InvalidCdf(#[from] CdfViolation),

    #[error("symbol at position {position} is uncodable (symbol {index}, zero frequency)")]
    UncodableSymbol { position: usize, index: i64 },

    #[error("coded stream truncated: renormalization ran out of bytes")]
    TruncatedStream,

    #[error("coded stream corrupt: {0}")]
    CorruptStream(&'static str),

    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },

    #[error("bad magic: not a coded tile file")]
    BadMagic,

    #[error("unsupported file version {0}")]
    UnsupportedVersion(u8),

    #[error("{field} in file is {found:#010x}, models provide {expected:#010x}")]
    ModelIdMismatch {
        field: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("tile side information disagrees with the map derived from the hyper-latent at element {position}")]
    SideInfoMismatch { position: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tile dimension {tile_dim} not divisible by stride {stride}")]
    StrideMismatch { tile_dim: u32, stride: u32 },

    #[error("channel {0} has no samples to fit")]
    EmptyChannel(usize),

    #[error("config bpp {bpp} is not below raw bpp {raw_bpp}; no transfer reduction")]
    NonBeneficialConfig { bpp: f64, raw_bpp: f64 },

    #[error("no candidate fits the memory budget of {budget} bytes")]
    NoFeasibleCandidate { budget: u64 },

    #[error("compression ratio {0} must exceed 1")]
    RatioNotAboveOne(f64),

    #[error("op index {index} out of range for graph with {op_count} ops")]
    OpIndexOutOfRange { index: u32, op_count: usize },

    #[error("edge {from}->{to} violates topological index order")]
    NotTopological { from: u32, to: u32 },

    #[error("fallback processor {0} must support every op")]
    FallbackNotUniversal(usize),

    #[error("subgraph merge exceeded the cap of {cap}")]
    SubgraphOverflow { cap: usize },

    #[error("current time {now} precedes enqueue time {enqueue}")]
    TimeBeforeEnqueue { now: f64, enqueue: f64 },

    #[error("pipeline worker failed on tile {tile_id}: {source}")]
    PipelineWorker {
        tile_id: u64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse {path}: {message}")]
    ConfigParse { path: String, message: String },
}
