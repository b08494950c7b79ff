use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] pqmiss_core::Error),
    #[error(transparent)]
    Chain(#[from] pqmiss_chain::Error),
    #[error("unknown fog `{0}`")]
    UnknownFog(String),
}

pub type Result<T> = std::result::Result<T, Error>;
