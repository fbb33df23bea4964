use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incomplete table: expected {expected} k-mers, found {found}")]
    IncompleteTable { expected: usize, found: usize },

    #[error("duplicate k-mer {0}")]
    DuplicateKmer(String),

    #[error("invalid base {base:?} at offset {offset}")]
    InvalidBase { base: char, offset: usize },

    #[error("sequence of length {len} is shorter than k = {k}")]
    SequenceTooShort { len: usize, k: usize },

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("zero dispersion: signal is constant")]
    ZeroDispersion,

    #[error("fixed-point overflow: {value} not representable with {fractional_bits} fractional bits")]
    FixedOverflow { value: f64, fractional_bits: u8 },

    #[error("too few events: {len}, need at least {min}")]
    TooFewEvents { len: usize, min: usize },

    #[error("block too large: {0} items, sorter accepts at most 128")]
    BlockTooLarge(usize),

    #[error("input not sorted at index {0}")]
    Unsorted(usize),

    #[error("index format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("index data truncated")]
    Truncated,

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unknown system {0:?} (expected MARS, MARS-External, MARS-BitSerial or MS-SmartSSD)")]
    UnknownSystem(String),

    #[error("not in accelerator mode")]
    NotInAcceleratorMode,

    #[error("already in accelerator mode")]
    AlreadyInAcceleratorMode,

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
