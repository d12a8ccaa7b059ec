use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of s/(s-1) at s = 1")]
    Pole,

    #[error("overflow evaluating sum at s = {re}{im:+}i")]
    Overflow { re: f64, im: f64 },

    #[error("singular Möbius integral: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series length {len} is too short (need at least {min})")]
    SeriesTooShort { len: usize, min: usize },

    #[error("fit band [{f_lo}, {f_hi}] holds {bins} usable bins (need at least {min})")]
    EmptyBand {
        f_lo: f64,
        f_hi: f64,
        bins: usize,
        min: usize,
    },
}
