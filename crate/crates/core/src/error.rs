use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-integrable singularity at the origin: exponent {0} <= -1")]
    NonIntegrableSingularity(f64),

    #[error("divergent tail: decay exponent {0} <= 1")]
    DivergentTail(f64),

    #[error("missing exponent metadata: {0}")]
    MissingMetadata(&'static str),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("cannot invert non-monotone map: {0}")]
    Inversion(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit window not covered: {0}")]
    Window(String),
}
