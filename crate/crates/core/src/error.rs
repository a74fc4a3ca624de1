use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot parse space spec `{0}`")]
    SpaceSpec(String),

    #[error("factor {factor}: |Re t| = {re_t} is outside the admissible domain (< {limit})")]
    Domain { factor: usize, re_t: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("weight {0:?} is not in the spherical semilattice")]
    NotAWeight(Vec<i64>),

    #[error("hypergeometric series did not converge after {terms} terms")]
    SeriesDiverged { terms: usize },

    #[error("hypergeometric series lost {digits:.1} digits to cancellation")]
    AccuracyLoss { digits: f64 },

    #[error("quadrature with {nodes} nodes cannot resolve |mu| = {norm} (need at least {needed})")]
    Resolution { nodes: usize, norm: f64, needed: usize },

    #[error("radius {radius} violates the validity bound {bound}")]
    Geometry { radius: f64, bound: f64 },

    #[error("derivative of order {order} requested at an atom but the test function is not smooth")]
    NotSmooth { order: u32 },

    #[error("partial sums fail the Cauchy test: last increment {increment:.3e} exceeds {tolerance:.3e}")]
    Divergence { increment: f64, tolerance: f64 },

    #[error("reconstruction needs a PW* certificate with type radius below {bound}")]
    MissingCertificate { bound: f64 },

    #[error("series tail estimate {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    TailBound { tail: f64, tolerance: f64 },

    #[error("derivative order {0} exceeds the supported maximum of 8")]
    DerivativeOrder(u32),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
