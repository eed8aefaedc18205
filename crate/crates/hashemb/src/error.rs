use std::path::PathBuf;

/// Errors produced by table construction, lookup, training and (de)serialization.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("id {id} out of range for table of size {size}")]
    IdOutOfRange { id: u64, size: u64 },

    #[error("duplicate hash seed {seed:#018x} at positions {first} and {second}")]
    DuplicateSeed { seed: u64, first: usize, second: usize },

    #[error("dictionary id mode needs an explicit token table; use `with_dictionary`")]
    MissingDictionary,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("cannot allocate parameter tables: {bytes} bytes required")]
    Allocation { bytes: u64 },

    #[error("importance table is frozen; update touches importance row {id}")]
    FrozenImportance { id: u64 },

    #[error("operation requires dictionary id mode: {0}")]
    DictionaryRequired(String),

    #[error("label {label} outside 1..={num_classes} at {path}:{line}")]
    LabelOutOfRange {
        label: i64,
        num_classes: usize,
        path: PathBuf,
        line: u64,
    },

    #[error("malformed record at {path}:{line}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("bad magic: expected {expected:?}, got {got:?}")]
    BadMagic { expected: [u8; 4], got: [u8; 4] },

    #[error("unsupported format version: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    // The cause stays out of the message; error chains print it themselves.
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    RawIo(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
