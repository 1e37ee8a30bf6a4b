use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown mode {beam}{pol}: beam does not carry that polarization")]
    UnknownMode { beam: String, pol: String },

    #[error("cannot parse mode {0:?}")]
    ModeSyntax(String),

    #[error("polynomial mixes process orders {0:?}; separate it by order first")]
    MixedOrder(Vec<u32>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("modeling error: {0}")]
    Modeling(String),

    #[error("transform is not an isometry: {0}")]
    NotIsometric(String),

    #[error("state has no modes on beams a or b")]
    NoEmissionModes,

    #[error("pairing violated by term {term} (class {class})")]
    PairingViolation { term: String, class: String },

    #[error("state is empty")]
    EmptyState,

    #[error("probability is not rational: {0}")]
    NonRational(String),

    #[error("no right-event mass: correlation undefined")]
    UndefinedCorrelation,

    #[error("visibility {0} outside [0, 1]")]
    VisibilityRange(String),

    #[error("strategy modulus depends on the local setting at station {0}")]
    Inadmissible(char),

    #[error("invalid targets: {0}")]
    InvalidTargets(String),

    #[error("cannot parse {0:?}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
