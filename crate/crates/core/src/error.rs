use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported root system type {0}")]
    InvalidType(String),

    #[error("reflection requested about the zero vector")]
    ZeroVector,

    #[error("group closure exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("matrix is {distance:.3e} away from every enumerated group element")]
    NotInGroup { distance: f64 },

    #[error(
        "two hyperplanes are struck simultaneously at crossing {crossing} (t = {time}); \
         jitter the direction to break the tie"
    )]
    DegenerateDirection { crossing: usize, time: f64 },

    #[error("requested rescaling horizon {requested} exceeds trajectory horizon {available}")]
    HorizonExceeded { requested: f64, available: f64 },

    #[error("window of length {len} exceeds the supported maximum {max}")]
    WindowTooLong { len: usize, max: usize },

    #[error("quotient has {size} cells, above the budget of {budget}")]
    QuotientTooLarge { size: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("estimator failure: {0}")]
    Estimator(String),

    #[error("run {run} failed: {source}")]
    Run {
        run: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateDirection { .. } => 2,
            Error::Run { source, .. } => source.exit_code(),
            Error::Config(_) | Error::InvalidType(_) | Error::ZeroVector => 4,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidType(_) => "InvalidType",
            Error::ZeroVector => "ZeroVector",
            Error::GroupTooLarge { .. } => "GroupTooLarge",
            Error::NotInGroup { .. } => "NotInGroup",
            Error::DegenerateDirection { .. } => "DegenerateDirection",
            Error::HorizonExceeded { .. } => "HorizonExceeded",
            Error::WindowTooLong { .. } => "WindowTooLong",
            Error::QuotientTooLarge { .. } => "QuotientTooLarge",
            Error::Config(_) => "Config",
            Error::Estimator(_) => "Estimator",
            Error::Run { source, .. } => source.kind(),
        }
    }
}
