use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector has no primitive representative")]
    ZeroVector,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid fan: {0}")]
    InvalidFan(String),

    #[error("not pseudo-effective")]
    NotPseudoEffective,

    #[error("divisor not R-Cartier on non-simplicial cone {0:?}")]
    NotCartier(Vec<usize>),

    #[error("engine error: {0}")]
    Engine(String),

    #[error("iteration cap of {0} steps reached")]
    IterationCap(usize),

    #[error("genericity retries exhausted: {0}")]
    Genericity(String),

    #[error("run ended in a minimal model; no Mori fiber space to connect")]
    NoMoriFiberSpace,
}

impl Error {
    pub fn engine(msg: impl Into<String>) -> Self {
        Error::Engine(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
