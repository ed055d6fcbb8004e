use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument to {op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },

    #[error("missing weight tensor `{0}`")]
    MissingWeight(String),

    #[error("weight `{name}` has shape {found:?}, block expects {expected:?}")]
    WeightShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("unknown model variant `{0}`")]
    UnknownVariant(String),

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("bad magic: {0}")]
    BadMagic(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated stream: {0}")]
    Truncated(String),

    #[error("duplicate tensor name `{0}`")]
    DuplicateName(String),

    #[error("corrupt weight file: {0}")]
    Corrupt(String),

    #[error("unsupported image: {0}")]
    Image(String),

    #[error("flow value {value} out of encodable range (|v| <= 512)")]
    OutOfRange { value: f32 },

    #[error("no valid pixels")]
    NoValidPixels,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("resolution {h}x{w} rejected: planned peak memory {planned_bytes} bytes exceeds limit {limit_bytes} bytes")]
    TooLarge {
        h: usize,
        w: usize,
        planned_bytes: u64,
        limit_bytes: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(op: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the offending file to an error raised while decoding it.
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
