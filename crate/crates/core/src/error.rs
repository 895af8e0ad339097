use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate offset {0} in measure entries")]
    DuplicateOffset(i64),

    #[error("support of width {0} exceeds the dense-storage limit")]
    SupportTooWide(u64),

    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("symbol is singular at t = {t}: {reason}")]
    Singular { t: f64, reason: &'static str },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown symbol key `{0}`")]
    UnknownSymbol(String),

    #[error("block starts must be strictly increasing and lie in 1..={len}")]
    BadBlocks { len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}
