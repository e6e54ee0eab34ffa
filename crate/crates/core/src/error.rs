use thiserror::Error;

/// Errors raised by the transmit/receive chain and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty message")]
    EmptyMessage,
    #[error("misaligned codeword: {0} coded bits")]
    MisalignedCodeword(usize),
    #[error("codeword too short: {len} coded bits, need at least {min}")]
    ShortCodeword { len: usize, min: usize },
    #[error("invalid convolutional code: {0}")]
    InvalidCode(String),
    #[error("degenerate LFSR seed")]
    DegenerateSeed,
    #[error("invalid PN code: {0}")]
    InvalidPnCode(String),
    #[error("chip stream of length {len} is not a multiple of {chips_per_bit} chips per bit")]
    MisalignedChips { len: usize, chips_per_bit: usize },
    #[error("bit stream of length {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    MisalignedSymbols { len: usize, bits_per_symbol: usize },
    #[error("unknown modulation {0:?}")]
    UnknownModulation(String),
    #[error("transform length must be at least 1")]
    EmptyTransform,
    #[error("transform length mismatch: plan has {expected}, input has {actual}")]
    TransformLength { expected: usize, actual: usize },
    #[error("invalid OFDM parameters: {0}")]
    InvalidOfdm(String),
    #[error("OFDM block length mismatch: expected {expected}, got {actual}")]
    OfdmBlockLength { expected: usize, actual: usize },
    #[error("singular channel draw (squared Frobenius norm {0:e})")]
    SingularChannel(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
