//! Expected/observed ratio estimators M0-M3, their 95% confidence intervals
//! and the correction terms relating them.
//!
//! Every estimator divides an expected count `E` (a sum of predicted risks) by
//! an observed count `O`. They differ in which subjects enter `E` and how the
//! unobservable `O` is replaced:
//!
//! | method | expected                                   | observed        |
//! |--------|--------------------------------------------|-----------------|
//! | M0     | `sum_ks e_i(t0)`                           | `O_ks`          |
//! | M1     | `sum_all e_i(min(t0, z_i))`                | `O_ks`          |
//! | M2     | `sum_ks e_i(t0) + sum_uks e_i(z_i)`        | `O_ks`          |
//! | M3     | `sum_all e_i(t0)`                          | `n K_n(t0)`     |
//!
//! where `ks`/`uks` are the subjects with known/unknown status at `t0` and
//! `K_n` is the Kaplan-Meier cumulative incidence. M0 and M1 are biased
//! downwards under censoring; M3 is asymptotically unbiased.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{exp, sqrt};
use crate::risk::RiskModel;
use crate::survival::{
    classify_subjects, empirical_cdf_known, kaplan_meier, product_limit, Cohort, GreenwoodVariance,
    KmEstimate, StatusPartition,
};

/// Two-sided 95% normal quantile used by every interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    M0,
    M1,
    M2,
    M3,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::M0, Method::M1, Method::M2, Method::M3];

    pub fn name(self) -> &'static str {
        match self {
            Method::M0 => "M0",
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
        }
    }

    /// Case-insensitive `m0` .. `m3`.
    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Whether the method's expected counts are comparable across subjects,
    /// which adjusted (grouped) calibration needs.
    pub fn supports_grouping(self) -> bool {
        matches!(self, Method::M0 | Method::M3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sums of predicted risks entering the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpectedSums {
    /// `sum_all e_i(t0)`.
    pub e_full: f64,
    pub e_ks: f64,
    pub e_uks: f64,
    /// `sum_all e_i(min(t0, z_i))`.
    pub e_m1: f64,
    /// `sum_ks e_i(t0) + sum_uks e_i(z_i)`.
    pub e_m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservedCounts {
    /// Cases at or before `t0`; all of them have known status.
    pub o_ks: usize,
    /// Cases counted by M1 and M2. Unknown-status subjects contribute nothing,
    /// so this always equals `o_ks`.
    pub o_m1: usize,
    /// `n K_n(t0)`.
    pub o_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    /// The variance behind the interval was degenerate (see
    /// [`GreenwoodVariance`]); the interval collapses to the point.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    #[inline]
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    /// `[point exp(-z s), point exp(z s)]`.
    fn log_symmetric(point: f64, log_se: f64, degenerate: bool) -> Self {
        let spread = exp(Z_95 * log_se);
        Self {
            low: point / spread,
            high: point * spread,
            degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EoRatioEstimate {
    pub method: Method,
    pub point: f64,
    pub ci: ConfidenceInterval,
    pub expected: f64,
    pub observed: f64,
}

pub fn expected_sums<C, M>(
    cohort: &Cohort<C>,
    partition: &StatusPartition,
    model: &M,
) -> Result<ExpectedSums>
where
    M: RiskModel<C> + ?Sized,
{
    let t0 = cohort.t0();
    let subjects = cohort.subjects();
    let risk_at = |i: usize, t: f64| -> Result<f64> {
        let r = model
            .risk(subjects[i].covariates(), t)
            .map_err(|e| Error::at(i, e))?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::at(i, Error::RiskOutOfRange(r)));
        }
        Ok(r)
    };

    let mut sums = ExpectedSums::default();
    for &i in &partition.known {
        let at_t0 = risk_at(i, t0)?;
        sums.e_full += at_t0;
        sums.e_ks += at_t0;
        sums.e_m2 += at_t0;
        sums.e_m1 += if subjects[i].is_case_by(t0) {
            risk_at(i, subjects[i].z())?
        } else {
            at_t0
        };
    }
    for &i in &partition.unknown {
        let at_t0 = risk_at(i, t0)?;
        let at_z = risk_at(i, subjects[i].z())?;
        sums.e_full += at_t0;
        sums.e_uks += at_t0;
        sums.e_m1 += at_z;
        sums.e_m2 += at_z;
    }
    Ok(sums)
}

pub fn observed_counts<C>(
    cohort: &Cohort<C>,
    partition: &StatusPartition,
    km: &KmEstimate,
) -> ObservedCounts {
    let t0 = cohort.t0();
    let o_ks = partition
        .known
        .iter()
        .filter(|&&i| cohort.subjects()[i].is_case_by(t0))
        .count();
    ObservedCounts {
        o_ks,
        o_m1: o_ks,
        o_hat: cohort.len() as f64 * km.incidence,
    }
}

/// Interval from the Poisson variance of `log O_ks`:
/// `[point exp(-1.96 / sqrt(O)), point exp(1.96 / sqrt(O))]`.
///
/// Used for M0, M1 and M2 alike. It only has its nominal coverage when the
/// point estimate is unbiased, which M0 and M1 are not under censoring.
pub fn ci_poisson(point: f64, o_ks: usize) -> Result<ConfidenceInterval> {
    if o_ks == 0 {
        return Err(Error::NoEvents);
    }
    Ok(ConfidenceInterval::log_symmetric(
        point,
        1.0 / sqrt(o_ks as f64),
        false,
    ))
}

/// Delta-method interval on the log scale,
/// `[point exp(-1.96 sigma / K), point exp(1.96 sigma / K)]` with `sigma^2`
/// the Greenwood variance of `K = K_n(t0)`.
pub fn ci_delta_km(point: f64, km: &KmEstimate) -> Result<ConfidenceInterval> {
    if km.incidence <= 0.0 {
        return Err(Error::NoEvents);
    }
    let GreenwoodVariance {
        variance,
        degenerate,
    } = km.greenwood;
    Ok(ConfidenceInterval::log_symmetric(
        point,
        sqrt(variance) / km.incidence,
        degenerate,
    ))
}

fn poisson_estimate(method: Method, expected: f64, o_ks: usize) -> Result<EoRatioEstimate> {
    if o_ks == 0 {
        return Err(Error::NoEvents);
    }
    let point = expected / o_ks as f64;
    Ok(EoRatioEstimate {
        method,
        point,
        ci: ci_poisson(point, o_ks)?,
        expected,
        observed: o_ks as f64,
    })
}

/// `E_ks / O_ks`, restricted to subjects with known status at `t0`.
pub fn estimate_m0(e_ks: f64, o_ks: usize) -> Result<EoRatioEstimate> {
    poisson_estimate(Method::M0, e_ks, o_ks)
}

/// `sum_all e_i(min(t0, z_i)) / O_ks`.
pub fn estimate_m1(e_m1: f64, o_ks: usize) -> Result<EoRatioEstimate> {
    poisson_estimate(Method::M1, e_m1, o_ks)
}

/// `(sum_ks e_i(t0) + sum_uks e_i(z_i)) / O_ks`.
pub fn estimate_m2(e_m2: f64, o_ks: usize) -> Result<EoRatioEstimate> {
    poisson_estimate(Method::M2, e_m2, o_ks)
}

/// `E / (n K_n(t0))` over the whole cohort.
pub fn estimate_m3(e_full: f64, km: &KmEstimate, n: usize) -> Result<EoRatioEstimate> {
    if km.incidence <= 0.0 {
        return Err(Error::NoEvents);
    }
    let observed = n as f64 * km.incidence;
    let point = e_full / observed;
    Ok(EoRatioEstimate {
        method: Method::M3,
        point,
        ci: ci_delta_km(point, km)?,
        expected: e_full,
        observed,
    })
}

/// `F_ks(t0) / K_n(t0)`, approximating `R3 / R0` when censoring is independent
/// of the covariates. At least 1 for large samples, since the known-status
/// group over-represents cases.
pub fn correction_c0_tilde(f_ks: f64, km_incidence: f64) -> Result<f64> {
    if km_incidence <= 0.0 {
        return Err(Error::NoEvents);
    }
    Ok(f_ks / km_incidence)
}

/// `R2 / R1 = 1 + sum_ks delta_i (e_i(t0) - e_i(z_i)) / O_ks >= 1`.
pub fn correction_c1(r2: &EoRatioEstimate, r1: &EoRatioEstimate) -> Result<f64> {
    if r1.point.is_nan() || r1.point <= 0.0 {
        return Err(Error::InvalidParameter("R1 must be positive"));
    }
    Ok(r2.point / r1.point)
}

/// Everything [`evaluate`] computes for one cohort.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationReport {
    pub t0: f64,
    pub n: usize,
    pub n_ks: usize,
    pub n_uks: usize,
    pub expected: ExpectedSums,
    pub observed: ObservedCounts,
    pub km_incidence: f64,
    pub km_greenwood: GreenwoodVariance,
    /// Naive case proportion among known-status subjects.
    pub f_ks: f64,
    pub c0_tilde: f64,
    pub c1: f64,
    pub m0: EoRatioEstimate,
    pub m1: EoRatioEstimate,
    pub m2: EoRatioEstimate,
    pub m3: EoRatioEstimate,
}

impl CalibrationReport {
    pub fn estimate(&self, method: Method) -> &EoRatioEstimate {
        match method {
            Method::M0 => &self.m0,
            Method::M1 => &self.m1,
            Method::M2 => &self.m2,
            Method::M3 => &self.m3,
        }
    }

    pub fn estimates(&self) -> [&EoRatioEstimate; 4] {
        [&self.m0, &self.m1, &self.m2, &self.m3]
    }
}

/// Runs all four estimators and both correction terms on `cohort` at its
/// horizon.
pub fn evaluate<C, M>(cohort: &Cohort<C>, model: &M) -> Result<CalibrationReport>
where
    M: RiskModel<C> + ?Sized,
{
    let t0 = cohort.t0();
    let partition = classify_subjects(cohort);
    let km = kaplan_meier(cohort, t0)?;
    let observed = observed_counts(cohort, &partition, &km);
    if observed.o_ks == 0 {
        return Err(Error::NoEvents);
    }
    let expected = expected_sums(cohort, &partition, model)?;

    let m0 = estimate_m0(expected.e_ks, observed.o_ks)?;
    let m1 = estimate_m1(expected.e_m1, observed.o_m1)?;
    let m2 = estimate_m2(expected.e_m2, observed.o_m1)?;
    let m3 = estimate_m3(expected.e_full, &km, cohort.len())?;
    let f_ks = empirical_cdf_known(&partition, cohort)?;
    let c0_tilde = correction_c0_tilde(f_ks, km.incidence)?;
    let c1 = if m1.point > 0.0 {
        correction_c1(&m2, &m1)?
    } else {
        f64::NAN
    };

    Ok(CalibrationReport {
        t0,
        n: cohort.len(),
        n_ks: partition.n_ks(),
        n_uks: partition.n_uks(),
        expected,
        observed,
        km_incidence: km.incidence,
        km_greenwood: km.greenwood,
        f_ks,
        c0_tilde,
        c1,
        m0,
        m1,
        m2,
        m3,
    })
}

/// Calibration within one risk group. Estimates are `None` when the group has
/// no case by `t0` (or, for M3, when its follow-up ends before `t0`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupReport {
    pub group: usize,
    pub n: usize,
    pub n_ks: usize,
    pub risk_min: f64,
    pub risk_max: f64,
    pub o_ks: usize,
    pub m0: Option<EoRatioEstimate>,
    pub m3: Option<EoRatioEstimate>,
}

/// Splits subjects into `groups` equal-count groups by increasing `risks`
/// (ties broken by position). Returns each subject's group label.
pub fn risk_groups(risks: &[f64], groups: usize) -> Vec<usize> {
    let n = risks.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| risks[a].total_cmp(&risks[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * groups / n;
    }
    labels
}

/// Decile labels of the predicted `t0`-year risks.
pub fn risk_deciles(risks: &[f64]) -> Vec<usize> {
    risk_groups(risks, 10)
}

/// Adjusted calibration: M0 and/or M3 within each group of `labels`.
///
/// M1 and M2 mix risks over different horizons (`t0` for some subjects, `z_i`
/// for others), so their expected counts cannot be compared across groups
/// and they are rejected here.
pub fn evaluate_grouped<C, M>(
    cohort: &Cohort<C>,
    model: &M,
    labels: &[usize],
    methods: &[Method],
) -> Result<Vec<GroupReport>>
where
    M: RiskModel<C> + ?Sized,
{
    if let Some(&m) = methods.iter().find(|m| !m.supports_grouping()) {
        return Err(Error::GroupedMethodUnsupported(m));
    }
    if labels.len() != cohort.len() {
        return Err(Error::GroupLabelMismatch {
            labels: labels.len(),
            subjects: cohort.len(),
        });
    }
    let t0 = cohort.t0();
    let subjects = cohort.subjects();
    let n_groups = labels.iter().max().map_or(0, |&g| g + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (i, &g) in labels.iter().enumerate() {
        members[g].push(i);
    }

    let mut reports = Vec::new();
    for (group, idx) in members.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let mut e_full = 0.0;
        let mut e_ks = 0.0;
        let mut risk_min = f64::INFINITY;
        let mut risk_max = f64::NEG_INFINITY;
        let mut n_ks = 0;
        let mut o_ks = 0;
        let mut max_z = f64::MIN;
        for &i in &idx {
            let s = &subjects[i];
            let r = model
                .risk(s.covariates(), t0)
                .map_err(|e| Error::at(i, e))?;
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::at(i, Error::RiskOutOfRange(r)));
            }
            e_full += r;
            risk_min = risk_min.min(r);
            risk_max = risk_max.max(r);
            max_z = max_z.max(s.z());
            if s.status_known_at(t0) {
                n_ks += 1;
                e_ks += r;
                o_ks += usize::from(s.is_case_by(t0));
            }
        }

        let m0 = if methods.contains(&Method::M0) && o_ks > 0 {
            Some(estimate_m0(e_ks, o_ks)?)
        } else {
            None
        };
        let m3 = if methods.contains(&Method::M3) && o_ks > 0 && t0 <= max_z {
            let km = product_limit(
                idx.iter().map(|&i| (subjects[i].z(), subjects[i].event())),
                t0,
            );
            Some(estimate_m3(e_full, &km, idx.len())?)
        } else {
            None
        };
        reports.push(GroupReport {
            group,
            n: idx.len(),
            n_ks,
            risk_min,
            risk_max,
            o_ks,
            m0,
            m3,
        });
    }
    Ok(reports)
}
