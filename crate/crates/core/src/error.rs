use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} values vs {right} weights")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid outcome-cell subset {0:#06b}: must be nonempty and proper")]
    InvalidSubset(u8),

    #[error("no information: effective sample size is zero")]
    NoInformation,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("scenario {scenario}: toxicity not strictly increasing at dose {dose}")]
    Monotonicity { scenario: String, dose: usize },

    #[error("scenario {scenario}: dose {dose} utility {given} differs from computed {computed:.3}")]
    UtilityMismatch {
        scenario: String,
        dose: usize,
        given: f64,
        computed: f64,
    },

    #[error("scenario {scenario}: label {label} = {given:?} but the probabilities imply {computed:?}")]
    LabelMismatch {
        scenario: String,
        label: &'static str,
        given: Option<usize>,
        computed: Option<usize>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),

    #[error("no feasible calibration candidate; best infeasible: {0}")]
    Infeasible(String),

    #[error("inconsistent trial state: {0}")]
    InconsistentState(String),

    #[error("look {requested} invoked out of order (next expected look is {expected})")]
    LookOrder { requested: usize, expected: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
