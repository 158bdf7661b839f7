//! Exit codes and the one-line stderr format.

use std::fmt;
use std::process::ExitCode;

use tsplines::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Parse,
    Numerical,
    Domain,
}

impl Category {
    pub fn code(self) -> u8 {
        match self {
            Category::Config => 2,
            Category::Parse => 3,
            Category::Numerical => 4,
            Category::Domain => 5,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Parse => "parse",
            Category::Numerical => "numerical",
            Category::Domain => "domain",
        }
    }
}

/// A failed command: category plus a human-readable reason.
#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            category: Category::Config,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.category.code())
    }
}

impl fmt::Display for Failure {
    /// `error code=<n> kind=<label> message="<text>"` on a single line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = self.message.replace(['\n', '\r'], " ").replace('"', "'");
        write!(
            f,
            "error code={} kind={} message=\"{}\"",
            self.category.code(),
            self.category.label(),
            flat
        )
    }
}

pub fn category_of(e: &Error) -> Category {
    match e {
        Error::InvalidInput(_) | Error::InvalidOrder { .. } => Category::Config,
        Error::Parse { .. } | Error::Io(_) | Error::Serialization(_) => Category::Parse,
        Error::OutOfDomain { .. } | Error::Coverage { .. } => Category::Domain,
        Error::DegenerateKnots { .. }
        | Error::RankDeficient { .. }
        | Error::SingularDesign(_)
        | Error::NotPositiveDefinite
        | Error::DegenerateGcv { .. }
        | Error::NoValidLambda
        | Error::DegenerateVariance(_)
        | Error::InsufficientData { .. }
        | Error::FitFailure(_)
        | Error::InsufficientAfterRejection { .. } => Category::Numerical,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            category: category_of(&e),
            message: e.to_string(),
        }
    }
}

/// Attaches a path to I/O and parse errors.
pub fn with_path(path: &std::path::Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}
