use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not a prime in (2, 2^62)")]
    InvalidModulus(u64),

    #[error("zero has no inverse modulo {0}")]
    ZeroInverse(u64),

    #[error("ring mismatch: (p={lhs_p}, q={lhs_q}) vs (p={rhs_p}, q={rhs_q})")]
    RingMismatch {
        lhs_p: usize,
        lhs_q: u64,
        rhs_p: usize,
        rhs_q: u64,
    },

    #[error("dimension mismatch: expected {expected} variables, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent {exponent} out of range for degree bound {degree}")]
    ExponentOutOfRange { exponent: String, degree: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cannot draw {terms} distinct terms: only {capacity} exponent vectors exist")]
    Infeasible { terms: usize, capacity: String },

    #[error("no prime in [{lo}, {hi}]")]
    NoPrime { lo: u64, hi: u64 },

    #[error("requested {requested} distinct primes in [{lo}, {hi}] but only {available} exist")]
    InsufficientPrimes {
        lo: u64,
        hi: u64,
        requested: usize,
        available: usize,
    },

    #[error("moduli {0} and {1} are not coprime")]
    NonCoprime(u64, u64),

    #[error("instruction {index} references {reference}, which does not precede it")]
    CircuitReference { index: usize, reference: usize },

    #[error("instruction {index} reads variable {var} but the circuit has {nvars} variables")]
    CircuitVariable { index: usize, var: usize, nvars: usize },

    #[error("empty circuit")]
    EmptyCircuit,

    #[error("expansion exceeds {limit} terms")]
    Oversize { limit: usize },

    #[error("coefficient prime bound {0} requires 2Q >= 2^62; unsupported height")]
    UnsupportedHeight(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
