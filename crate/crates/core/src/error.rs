use thiserror::Error;

/// Errors produced by the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid penalty order {order} for {n_coeffs} coefficients")]
    InvalidOrder { order: usize, n_coeffs: usize },

    #[error("degenerate knots: value {value} repeated {multiplicity} times (max {max})")]
    DegenerateKnots {
        value: f64,
        multiplicity: usize,
        max: usize,
    },

    #[error("epoch {epoch} outside domain [{lo}, {hi}]")]
    OutOfDomain { epoch: f64, lo: f64, hi: f64 },

    #[error("normal matrix is rank deficient: basis functions {first}..={last} have no support")]
    RankDeficient { first: usize, last: usize },

    #[error("design matrix is singular: {0}")]
    SingularDesign(String),

    #[error("normal matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("GCV is degenerate (trace of smoother {trace} vs n = {n})")]
    DegenerateGcv { trace: f64, n: usize },

    #[error("no smoothing parameter on the search grid gave a finite GCV")]
    NoValidLambda,

    #[error("residual degrees of freedom {0} must be positive")]
    DegenerateVariance(f64),

    #[error("insufficient data: {have} observations, need at least {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("fit failed for every section count: {}", format_diagnostics(.0))]
    FitFailure(Vec<(usize, String)>),

    #[error("too few points after outlier rejection: {remaining} left, need {need} (level 1 flags {level1:?}, level 2 flags {level2:?})")]
    InsufficientAfterRejection {
        remaining: usize,
        need: usize,
        level1: Vec<usize>,
        level2: Vec<usize>,
    },

    #[error("epochs not covered by the dense model span [{lo}, {hi}]: {epochs:?}")]
    Coverage { lo: f64, hi: f64, epochs: Vec<f64> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model document: {0}")]
    Serialization(#[from] serde_json::Error),
}

fn format_diagnostics(diag: &[(usize, String)]) -> String {
    diag.iter()
        .map(|(m, why)| format!("m={m}: {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
