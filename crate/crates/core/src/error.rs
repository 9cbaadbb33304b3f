use std::fmt;

/// Where in an input document a parse failure happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Path(String),
    Byte(usize),
    File(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Path(p) => write!(f, "{p}"),
            Location::Byte(b) => write!(f, "byte {b}"),
            Location::File(p) => write!(f, "{p}"),
        }
    }
}

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("no valid seed pixels to build a dense prior from")]
    EmptyPrior,
    #[error("prediction and reference share no valid pixels")]
    EmptyOverlap,
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(location: Location, message: impl Into<String>) -> Self {
        Error::Parse {
            location,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 2 = input/parse, 3 = geometry/domain, 4 = empty overlap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io { .. } => 2,
            Error::InvalidInput(_)
            | Error::BehindCamera(_)
            | Error::InvalidDepth(_)
            | Error::EmptyPrior => 3,
            Error::EmptyOverlap => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
