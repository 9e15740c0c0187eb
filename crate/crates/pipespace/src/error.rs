use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pipespace_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported volume format: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("{path}: file truncated")]
    TruncatedFile { path: PathBuf },
    #[error("{path}: {count} non-finite voxels")]
    NonFiniteData { path: PathBuf, count: usize },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("dataset is not rectangular; missing {}", format_missing(.missing))]
    NonRectangularDataset { missing: Vec<(String, String, String)> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

fn format_missing(missing: &[(String, String, String)]) -> String {
    let shown: Vec<String> = missing
        .iter()
        .take(10)
        .map(|(c, g, p)| format!("({c}, {g}, {p})"))
        .collect();
    let more = missing.len().saturating_sub(shown.len());
    if more > 0 {
        format!("{} and {more} more", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::TruncatedFile { .. } => EXIT_IO,
            Error::Context { source, .. } => source.exit_code(),
            Error::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_VALIDATION,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<Error>> ResultExt<T> for std::result::Result<T, E> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.into().context(context()))
    }
}
