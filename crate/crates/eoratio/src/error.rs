use std::fmt;
use std::io;
use std::path::PathBuf;

/// A problem with one data row of an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based index among data rows (the header is not counted).
    pub row: usize,
    /// 1-based line in the file.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {} (line {}): {}", self.row, self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Validation(String),
    #[error("{} invalid row(s):\n{}", .0.len(), join_rows(.0))]
    Rows(Vec<RowError>),
    #[error(transparent)]
    Calibration(#[from] eoratio_core::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(|r| format!("  {r}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for I/O failures, 1 for everything the user can fix in the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 2,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
