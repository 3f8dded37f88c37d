//! Monte-Carlo study of the estimators under uniform event and censoring
//! times.
//!
//! Each design draws `Y ~ U(0, lambda)` and, when censored, `C ~ U(0, omega)`
//! for `n` subjects, scores them with the well-calibrated uniform model
//! `e_i(t) = t / lambda` and evaluates all four estimators. Replicate `r` of a
//! design always reads ChaCha stream `r` keyed by the design seed, so results
//! do not depend on how replicates are scheduled.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::calibration::{evaluate, CalibrationReport, Method};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::risk::UniformModel;
use crate::survival::{Cohort, Subject};

pub const PAPER_LAMBDAS: [f64; 3] = [100.0, 200.0, 400.0];
pub const PAPER_RATES: [f64; 4] = [0.0, 0.05, 0.10, 0.20];
pub const PAPER_N: usize = 20_000;
pub const PAPER_T0: f64 = 10.0;
pub const PAPER_REPLICATES: usize = 1_000;

/// Largest share of degenerate replicates for which a summary stays valid.
pub const MAX_EXCLUDED_SHARE: f64 = 0.01;

/// Censoring bound `omega` giving a target rate of unknown status at `t0`.
///
/// With `Y ~ U(0, lambda)` and `C ~ U(0, omega)`, `omega > t0`, a subject has
/// unknown status when `C < min(Y, t0)`, which happens with probability
/// `(t0 - t0^2 / (2 lambda)) / omega`. Rates at or above
/// `1 - t0 / (2 lambda)` would need `omega <= t0` and are rejected.
pub fn solve_omega(lambda: f64, t0: f64, target_rate: f64) -> Result<f64> {
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::InvalidHorizon(t0));
    }
    if !(lambda.is_finite() && lambda > t0) {
        return Err(Error::InvalidParameter("lambda must exceed t0"));
    }
    let max = 1.0 - t0 / (2.0 * lambda);
    if !(target_rate > 0.0 && target_rate < max) {
        return Err(Error::TargetRateOutOfRange {
            target: target_rate,
            max,
        });
    }
    Ok((t0 - t0 * t0 / (2.0 * lambda)) / target_rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationDesign {
    /// Event times are `U(0, lambda)`.
    pub lambda: f64,
    /// Censoring times are `U(0, omega)`; `None` means no censoring.
    pub omega: Option<f64>,
    /// Unknown-status rate the design was solved for, when it was.
    pub target_rate: Option<f64>,
    pub n: usize,
    pub t0: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SimulationDesign {
    /// Design whose censoring bound hits `target_rate` unknown-status subjects;
    /// a rate of 0 means no censoring.
    pub fn from_target_rate(
        lambda: f64,
        target_rate: f64,
        n: usize,
        t0: f64,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let omega = if target_rate == 0.0 {
            None
        } else {
            Some(solve_omega(lambda, t0, target_rate)?)
        };
        let design = Self {
            lambda,
            omega,
            target_rate: Some(target_rate),
            n,
            t0,
            replicates,
            seed,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::InvalidHorizon(self.t0));
        }
        if !(self.lambda.is_finite() && self.lambda > self.t0) {
            return Err(Error::InvalidParameter("lambda must exceed t0"));
        }
        if let Some(omega) = self.omega {
            if !(omega.is_finite() && omega > 0.0) {
                return Err(Error::InvalidParameter("omega must be positive and finite"));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1"));
        }
        Ok(())
    }

    /// `P(C < min(Y, t0))`.
    pub fn expected_unknown_rate(&self) -> f64 {
        let Some(omega) = self.omega else {
            return 0.0;
        };
        let (l, t) = (self.lambda, self.t0);
        let u = omega.min(t);
        // integral over c in [0, u] of (1 - c / lambda) / omega
        (u - u * u / (2.0 * l)) / omega
    }

    /// `P(Y <= t0, Y <= C)`, the share of subjects seen as cases by `t0`.
    pub fn expected_case_rate(&self) -> f64 {
        let (l, t) = (self.lambda, self.t0);
        let Some(omega) = self.omega else {
            return t / l;
        };
        if omega >= t {
            t / l - t * t / (2.0 * omega * l)
        } else {
            (omega - omega / 2.0) / l
        }
    }
}

/// The 3 x 4 grid of `lambda` x unknown-status rate, each design with its own
/// seed derived from `seed`.
pub fn paper_grid(seed: u64) -> Vec<SimulationDesign> {
    let mut designs = Vec::with_capacity(PAPER_LAMBDAS.len() * PAPER_RATES.len());
    for &lambda in &PAPER_LAMBDAS {
        for &rate in &PAPER_RATES {
            let index = designs.len() as u64;
            designs.push(
                SimulationDesign::from_target_rate(
                    lambda,
                    rate,
                    PAPER_N,
                    PAPER_T0,
                    PAPER_REPLICATES,
                    derive_seed(seed, index),
                )
                .expect("built-in grid designs are valid"),
            );
        }
    }
    designs
}

/// SplitMix64 finalizer over `seed + index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one replicate of a design.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Uniform on `(0, 1]`, so draws scaled by a bound are never 0.
#[inline]
fn open_unit(rng: &mut impl RngCore) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    1.0 - (rng.next_u64() >> 11) as f64 * SCALE
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicateOutcome {
    pub replicate: usize,
    /// `#{Y_i <= t0}`, only knowable in simulation.
    pub true_cases: usize,
    pub n_uks: usize,
    /// `None` for a degenerate replicate (no case by `t0`, or follow-up ending
    /// before `t0`).
    pub report: Option<CalibrationReport>,
}

/// Draws and evaluates one replicate.
pub fn run_replicate(design: &SimulationDesign, replicate: usize) -> Result<ReplicateOutcome> {
    design.validate()?;
    let mut rng = replicate_rng(design.seed, replicate as u64);
    let t0 = design.t0;
    let mut subjects = Vec::with_capacity(design.n);
    let mut true_cases = 0;
    let mut n_uks = 0;
    for _ in 0..design.n {
        let y = design.lambda * open_unit(&mut rng);
        let c = design.omega.map(|omega| omega * open_unit(&mut rng));
        let (z, event) = match c {
            Some(c) if c < y => (c, false),
            _ => (y, true),
        };
        true_cases += usize::from(y <= t0);
        n_uks += usize::from(!event && z < t0);
        subjects.push(Subject::new(z, event, ())?);
    }

    let model = UniformModel::new(design.lambda)?;
    let report = match Cohort::new(subjects, t0) {
        Ok(cohort) => match evaluate(&cohort, &model) {
            Ok(report) => Some(report),
            Err(Error::NoEvents) => None,
            Err(e) => return Err(e),
        },
        Err(Error::HorizonOutOfRange { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ReplicateOutcome {
        replicate,
        true_cases,
        n_uks,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodSummary {
    pub mean: f64,
    pub mean_width: f64,
    /// Share of intervals containing 1.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationSummary {
    pub design: SimulationDesign,
    pub used: usize,
    pub excluded: usize,
    /// False when more than 1% of replicates were degenerate.
    pub valid: bool,
    /// Indexed like [`Method::ALL`].
    pub methods: [MethodSummary; 4],
    pub mean_observed_cases: f64,
    pub mean_c0_tilde: f64,
    pub mean_c1: f64,
    /// Mean share of unknown-status subjects, over all replicates.
    pub unknown_rate: f64,
    /// Mean `#{Y <= t0} / n`, over all replicates.
    pub true_case_rate: f64,
    /// Monte-Carlo standard error of `true_case_rate`.
    pub true_case_rate_se: f64,
}

impl SimulationSummary {
    pub fn method(&self, method: Method) -> &MethodSummary {
        &self.methods[method as usize]
    }
}

/// Order-sensitive accumulator; feed outcomes by increasing replicate index
/// for results independent of scheduling.
#[derive(Debug, Clone, Default)]
pub struct SummaryBuilder {
    used: usize,
    excluded: usize,
    point: [f64; 4],
    width: [f64; 4],
    covered: [usize; 4],
    observed: f64,
    c0: f64,
    c1: f64,
    uks_rate: f64,
    true_rate: f64,
    true_rate_sq: f64,
    seen: usize,
}

impl SummaryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, n: usize, outcome: &ReplicateOutcome) {
        let n = n as f64;
        self.seen += 1;
        self.uks_rate += outcome.n_uks as f64 / n;
        let tr = outcome.true_cases as f64 / n;
        self.true_rate += tr;
        self.true_rate_sq += tr * tr;
        let Some(report) = &outcome.report else {
            self.excluded += 1;
            return;
        };
        self.used += 1;
        for (k, est) in report.estimates().into_iter().enumerate() {
            self.point[k] += est.point;
            self.width[k] += est.ci.width();
            self.covered[k] += usize::from(est.ci.contains(1.0));
        }
        self.observed += report.observed.o_ks as f64;
        self.c0 += report.c0_tilde;
        self.c1 += report.c1;
    }

    pub fn finish(&self, design: SimulationDesign) -> SimulationSummary {
        let used = self.used.max(1) as f64;
        let seen = self.seen.max(1) as f64;
        let mut methods = [MethodSummary::default(); 4];
        for (k, m) in methods.iter_mut().enumerate() {
            *m = MethodSummary {
                mean: self.point[k] / used,
                mean_width: self.width[k] / used,
                coverage: self.covered[k] as f64 / used,
            };
        }
        let mean_true = self.true_rate / seen;
        let var_true = if self.seen > 1 {
            ((self.true_rate_sq - seen * mean_true * mean_true) / (seen - 1.0)).max(0.0)
        } else {
            0.0
        };
        SimulationSummary {
            design,
            used: self.used,
            excluded: self.excluded,
            valid: self.used > 0 && (self.excluded as f64) <= MAX_EXCLUDED_SHARE * self.seen as f64,
            methods,
            mean_observed_cases: self.observed / used,
            mean_c0_tilde: self.c0 / used,
            mean_c1: self.c1 / used,
            unknown_rate: self.uks_rate / seen,
            true_case_rate: mean_true,
            true_case_rate_se: sqrt(var_true / seen),
        }
    }
}

/// Runs every replicate of `design` in order on the current thread.
pub fn run_design(design: &SimulationDesign) -> Result<SimulationSummary> {
    design.validate()?;
    let mut builder = SummaryBuilder::new();
    for r in 0..design.replicates {
        builder.push(design.n, &run_replicate(design, r)?);
    }
    Ok(builder.finish(*design))
}
