use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate {0}")]
    DegenerateVariable(&'static str),

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("bad sample size {n} for population of size {population}: need 2 <= n <= N")]
    BadSampleSize { n: usize, population: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("attribute value {value:?} at line {line} is not 0 or 1")]
    AttributeDomain { line: usize, value: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("singular coefficient: {0}")]
    SingularCoefficient(&'static str),

    #[error("gamma must be -1 or +1, got {0}")]
    InvalidGamma(i32),

    #[error("degenerate kurtosis: lambda04 = {0} must exceed 1")]
    DegenerateKurtosis(f64),

    #[error("could not generate a population with both attribute classes after {attempts} attempts")]
    DegenerateGeneration { attempts: usize },

    #[error("invalid parameter set: {0}")]
    InvalidParameters(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
