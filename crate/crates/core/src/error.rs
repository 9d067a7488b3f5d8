use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("even characteristic is not supported; q must be odd")]
    EvenCharacteristic,
    #[error("modulus {0:?} is reducible over the prime field")]
    ReducibleModulus(Vec<u32>),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("field order {0} exceeds the supported range")]
    FieldTooLarge(u64),
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("requested {requested} points but the ambient space has only {available}")]
    TooLarge { requested: u64, available: u64 },
    #[error("ambient space of {0} points exceeds the enumeration guard")]
    TooLargeAmbient(u64),
    #[error("point set would be empty")]
    EmptySet,
    #[error("k must be at least {min}, got {k}")]
    InvalidK { k: usize, min: usize },
    #[error("brute-force oracle would enumerate {0} tuples")]
    TooLargeForOracle(u128),
    #[error("graph with {0} vertices exceeds the dense limit")]
    TooLargeGraph(u64),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },
    #[error("multiset belongs to a different graph")]
    GraphMismatch,
    #[error("check requires dimension {expected}, got {got}")]
    WrongDimension { expected: &'static str, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
