use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate seed: an all-zero LFSR state never leaves zero")]
    DegenerateSeed,

    #[error("invalid LFSR spec: {0}")]
    InvalidLfsr(String),

    #[error("seed length {got} does not match LFSR degree {degree}")]
    SeedLength { degree: u32, got: usize },

    #[error("unsupported constellation: M = {0} (M/2 must be a power of two, M >= 4)")]
    UnsupportedConstellation(usize),

    #[error("keystream length {len} is not a multiple of {per_symbol} bits per symbol")]
    LengthMismatch { len: usize, per_symbol: usize },

    #[error("keystream exhausted: needed {needed} bits, have {available}")]
    KeystreamExhausted { needed: usize, available: usize },

    #[error("matrix violates density-operator invariants: {0}")]
    InvariantViolation(String),

    #[error("{name} = {value} out of range")]
    Range { name: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("tractability cap exceeded: {what} = {value} > {cap}")]
    Tractability {
        what: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("Fock truncation too small: tail mass {tail:e} with cutoff {cutoff}")]
    Truncation { cutoff: usize, tail: f64 },

    #[error("error profile invalid: {0}")]
    Profile(String),
}
