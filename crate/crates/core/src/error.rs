use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction is not a unit vector (|w| = {0})")]
    NonUnitDirection(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("history window too short: need {need} levels, have {have}")]
    WindowTooShort { need: usize, have: usize },
    #[error("multi-index order {0} exceeds the supported maximum of 2")]
    OrderTooHigh(usize),
    #[error("null form indices must differ (got {0} and {0})")]
    EqualIndices(usize),
    #[error("field support touches the zero-pad boundary layer")]
    SupportTouchesBoundary,
    #[error("boundary contamination at t = {t}: pad-zone max {value:e}")]
    BoundaryContamination { t: f64, value: f64 },
    #[error("non-finite value in {field} at t = {t}; diagnostic snapshot: {snapshot}")]
    NonFinite { field: &'static str, t: f64, snapshot: String },
    #[error("scalar source has imaginary part {0:e}")]
    NonRealSource(f64),
    #[error("field mass outside the cone region is a fraction {0:e} of the total")]
    SupportOutsideCone(f64),
    #[error("CFL violated: dt = {dt} > 0.5 h = {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("light-cone containment violated: L = {l} < required {required}")]
    Containment { l: f64, required: f64 },
    #[error("non-positive value {0} in a decay series")]
    NonPositive(f64),
    #[error("decay fit needs at least 5 samples in the window, got {0}")]
    FitWindow(usize),
    #[error("invalid initial time {0}; data are prescribed at t = 2")]
    InitialTime(f64),
    #[error("config: {0}")]
    Config(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
