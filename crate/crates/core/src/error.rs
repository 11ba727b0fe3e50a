use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("unassigned symbol `{0}` during evaluation")]
    Unassigned(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("kappa must be antisymmetric (entry {0},{1})")]
    NotAntisymmetric(usize, usize),
    #[error("defining equations violated: {0}")]
    DefiningViolated(String),
    #[error("no normalization rule applies: {0}")]
    NotNormalizable(String),
    #[error("pair is not reducible to a canonical shape: {0}")]
    NotReducible(String),
    #[error("rank unstable across resampling: {0}")]
    Unstable(String),
    #[error("ill-conditioned sample system: {0}")]
    IllConditioned(String),
    #[error("casebook integrity alarm: case {case} generator {generator} failed verification")]
    UnverifiedMatch { case: String, generator: String },
    #[error("casebook data error: {0}")]
    Casebook(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
