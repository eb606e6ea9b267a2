//! Error type shared across the crate.

use std::fmt;
use std::io;
use std::path::PathBuf;

/// Everything that can go wrong across ingestion, encoding, training,
/// indexing, and evaluation. Messages name the offending line, field, or
/// entry so failures in large corpora are actionable.
#[derive(Debug)]
pub enum Error {
    /// Filesystem failure; wraps the underlying I/O error with its path.
    Io { path: PathBuf, source: io::Error },
    /// A corpus or query line that is not valid JSON.
    MalformedLine { line: usize, message: String },
    /// A JSON line that parsed but violates the schema.
    SchemaViolation {
        line: usize,
        field: String,
        message: String,
    },
    /// Two corpus lines share one fc_id.
    DuplicateFcId { line: usize, fc_id: String },
    /// A corpus file with no entries.
    EmptyCorpus,
    /// Text that tokenizes to nothing and therefore has no feature direction.
    EmptyInput,
    /// A vector whose norm is too small for cosine scoring.
    ZeroNorm { context: String },
    /// A non-finite value where a finite one is required.
    NonFinite { context: String },
    /// An fc_id that does not resolve in the corpus or store at hand.
    UnresolvedTarget { fc_id: String },
    /// A store row whose fc_id is missing from the corpus it is joined with.
    StoreMismatch { fc_id: String },
    /// Invalid caller-supplied argument or configuration.
    InvalidArgument { message: String },
    /// A model or index file that does not match the documented format.
    FileFormat { path: PathBuf, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::MalformedLine { line, message } => {
                write!(f, "line {line}: malformed JSON: {message}")
            }
            Self::SchemaViolation {
                line,
                field,
                message,
            } => write!(f, "line {line}: field {field}: {message}"),
            Self::DuplicateFcId { line, fc_id } => {
                write!(f, "line {line}: duplicate fc_id {fc_id:?}")
            }
            Self::EmptyCorpus => f.write_str("empty corpus"),
            Self::EmptyInput => f.write_str("empty input text"),
            Self::ZeroNorm { context } => write!(f, "zero-norm vector: {context}"),
            Self::NonFinite { context } => write!(f, "non-finite value: {context}"),
            Self::UnresolvedTarget { fc_id } => {
                write!(f, "ground truth {fc_id:?} does not resolve")
            }
            Self::StoreMismatch { fc_id } => {
                write!(f, "store entry {fc_id:?} is missing from the corpus")
            }
            Self::InvalidArgument { message } => write!(f, "invalid argument: {message}"),
            Self::FileFormat { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self::InvalidArgument {
            message: message.into(),
        }
    }
}
