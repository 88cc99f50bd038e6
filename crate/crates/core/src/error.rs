use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Mismatched registries, unknown generators, incomplete rule tables.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("unsupported Hamiltonian: {0}")]
    UnsupportedHamiltonian(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// An identity that must hold exactly did not.
    #[error("verification failed for {identity}: residual {residual}")]
    Verification { identity: String, residual: String },
}

pub type Result<T> = std::result::Result<T, Error>;
