//! Censoring-aware primitives: subjects, the known/unknown status partition at
//! a horizon, the Kaplan-Meier cumulative incidence and its Greenwood variance.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One observed follow-up record.
///
/// `z` is the observed time `min(Y, C)` in years and `event` is the indicator
/// `Y <= C`. The covariates are whatever the risk model needs to produce
/// `e_i(t)`; use `()` when the model does not depend on the subject.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Subject<C = ()> {
    z: f64,
    event: bool,
    covariates: C,
}

impl<C> Subject<C> {
    pub fn new(z: f64, event: bool, covariates: C) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidTime(z));
        }
        Ok(Self {
            z,
            event,
            covariates,
        })
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn event(&self) -> bool {
        self.event
    }

    #[inline]
    pub fn covariates(&self) -> &C {
        &self.covariates
    }

    /// Case observed at or before `t0`.
    #[inline]
    pub fn is_case_by(&self, t0: f64) -> bool {
        self.event && self.z <= t0
    }

    /// Status at `t0` is determined: a case at or before `t0`, or followed at
    /// least `t0` years. Both boundaries are closed.
    #[inline]
    pub fn status_known_at(&self, t0: f64) -> bool {
        self.is_case_by(t0) || self.z >= t0
    }
}

/// A nonempty sample evaluated at horizon `t0 <= max z`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Cohort<C = ()> {
    subjects: Vec<Subject<C>>,
    t0: f64,
    max_z: f64,
}

impl<C> Cohort<C> {
    pub fn new(subjects: Vec<Subject<C>>, t0: f64) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::EmptyCohort);
        }
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::InvalidHorizon(t0));
        }
        let max_z = subjects.iter().map(Subject::z).fold(f64::MIN, f64::max);
        if t0 > max_z {
            return Err(Error::HorizonOutOfRange { t: t0, max_z });
        }
        Ok(Self {
            subjects,
            t0,
            max_z,
        })
    }

    #[inline]
    pub fn subjects(&self) -> &[Subject<C>] {
        &self.subjects
    }

    #[inline]
    pub fn t0(&self) -> f64 {
        self.t0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn max_z(&self) -> f64 {
        self.max_z
    }

    /// Same subjects, different horizon.
    pub fn with_horizon(self, t0: f64) -> Result<Self> {
        Self::new(self.subjects, t0)
    }

    pub fn into_subjects(self) -> Vec<Subject<C>> {
        self.subjects
    }
}

/// Split of the cohort into known and unknown status at `t0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusPartition {
    pub known: Vec<usize>,
    pub unknown: Vec<usize>,
}

impl StatusPartition {
    #[inline]
    pub fn n_ks(&self) -> usize {
        self.known.len()
    }

    #[inline]
    pub fn n_uks(&self) -> usize {
        self.unknown.len()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.known.len() + self.unknown.len()
    }
}

pub fn classify_subjects<C>(cohort: &Cohort<C>) -> StatusPartition {
    let t0 = cohort.t0();
    let (known, unknown) = (0..cohort.len()).partition(|&i| cohort.subjects[i].status_known_at(t0));
    StatusPartition { known, unknown }
}

/// One distinct event time of the product-limit estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KmStep {
    pub time: f64,
    /// Subjects with `z >= time`.
    pub at_risk: usize,
    pub events: usize,
}

/// Greenwood variance of the Kaplan-Meier estimate.
///
/// `degenerate` is set when some event time empties the risk set
/// (`events == at_risk`), where the Greenwood sum has a zero denominator. The
/// survival is then exactly zero and `variance` holds the continuity limit 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreenwoodVariance {
    pub variance: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KmEstimate {
    pub horizon: f64,
    /// `K_n(t) = 1 - S(t)`, the estimated `P(Y <= t)`.
    pub incidence: f64,
    pub survival: f64,
    pub greenwood: GreenwoodVariance,
    /// Event times `<= horizon` that enter the product, in increasing order.
    pub path: Vec<KmStep>,
}

impl KmEstimate {
    #[inline]
    pub fn std_err(&self) -> f64 {
        crate::math::sqrt(self.greenwood.variance)
    }
}

/// Product-limit estimate of `P(Y <= t)`.
///
/// At tied times events are processed before censorings, so a subject censored
/// at an event time is still in that time's risk set.
pub fn kaplan_meier<C>(cohort: &Cohort<C>, t: f64) -> Result<KmEstimate> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidHorizon(t));
    }
    if t > cohort.max_z() {
        return Err(Error::HorizonOutOfRange {
            t,
            max_z: cohort.max_z(),
        });
    }

    Ok(product_limit(
        cohort.subjects().iter().map(|s| (s.z(), s.event())),
        t,
    ))
}

/// Product-limit estimate at `t` over `(z, event)` records, without range checks.
pub(crate) fn product_limit(records: impl Iterator<Item = (f64, bool)>, t: f64) -> KmEstimate {
    // Subjects with z > t are in every risk set up to t; only the rest need ordering.
    let mut n = 0;
    let mut early: Vec<(f64, bool)> = records.inspect(|_| n += 1).filter(|r| r.0 <= t).collect();
    early.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut path = Vec::new();
    let mut remaining = n;
    let mut i = 0;
    while i < early.len() {
        let time = early[i].0;
        let mut events = 0;
        let mut j = i;
        while j < early.len() && early[j].0 == time {
            events += usize::from(early[j].1);
            j += 1;
        }
        if events > 0 {
            path.push(KmStep {
                time,
                at_risk: remaining,
                events,
            });
        }
        remaining -= j - i;
        i = j;
    }

    let survival = survival_from_path(&path);
    let greenwood = greenwood_variance(&path, t);
    KmEstimate {
        horizon: t,
        incidence: 1.0 - survival,
        survival,
        greenwood,
        path,
    }
}

fn survival_from_path(path: &[KmStep]) -> f64 {
    path.iter()
        .map(|s| 1.0 - s.events as f64 / s.at_risk as f64)
        .product()
}

/// `S(t)^2 * sum_{u <= t} d_u / (n_u (n_u - d_u))` over the steps of `path`.
pub fn greenwood_variance(path: &[KmStep], t: f64) -> GreenwoodVariance {
    let mut survival = 1.0;
    let mut sum = 0.0;
    for step in path.iter().take_while(|s| s.time <= t) {
        if step.events >= step.at_risk {
            return GreenwoodVariance {
                variance: 0.0,
                degenerate: true,
            };
        }
        let n = step.at_risk as f64;
        let d = step.events as f64;
        survival *= 1.0 - d / n;
        sum += d / (n * (n - d));
    }
    GreenwoodVariance {
        variance: survival * survival * sum,
        degenerate: false,
    }
}

/// Naive proportion of cases by `t0` among the known-status subjects,
/// `F_{n_ks}(t0)`.
pub fn empirical_cdf_known<C>(partition: &StatusPartition, cohort: &Cohort<C>) -> Result<f64> {
    if partition.n_ks() == 0 {
        return Err(Error::NoKnownStatus);
    }
    let t0 = cohort.t0();
    let cases = partition
        .known
        .iter()
        .filter(|&&i| cohort.subjects()[i].is_case_by(t0))
        .count();
    Ok(cases as f64 / partition.n_ks() as f64)
}
