use alloc::boxed::Box;

use crate::calibration::Method;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cohort has no subjects")]
    EmptyCohort,
    #[error("follow-up time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("horizon {t} exceeds the last observed follow-up time {max_z}")]
    HorizonOutOfRange { t: f64, max_z: f64 },
    #[error("no subject has a known status at the horizon")]
    NoKnownStatus,
    #[error("no events observed before the horizon; the E/O ratio is undefined")]
    NoEvents,
    #[error("subject {index}: {source}")]
    Subject {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("missing covariate: {0}")]
    MissingCovariate(&'static str),
    #[error("inconsistent covariates: {0}")]
    InvalidCovariate(&'static str),
    #[error("risk model returned {0}, outside [0, 1]")]
    RiskOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("target unknown-status rate {target} must lie in (0, {max}) for the uniform censoring design")]
    TargetRateOutOfRange { target: f64, max: f64 },
    #[error("method {0} cannot be used for grouped (adjusted) calibration")]
    GroupedMethodUnsupported(Method),
    #[error("group labels length {labels} does not match cohort size {subjects}")]
    GroupLabelMismatch { labels: usize, subjects: usize },
}

impl Error {
    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::Subject {
            index,
            source: Box::new(source),
        }
    }
}
