//! Calibration of t0-year risk prediction tools on right-censored cohorts.
//!
//! The crate estimates the expected-to-observed (E/O) event ratio of a
//! prediction tool with four estimators:
//!
//! - [`Method::M0`]: restrict to subjects whose status at `t0` is known.
//! - [`Method::M1`]: whole cohort, expected risk truncated at `min(t0, z)`.
//! - [`Method::M2`]: as M1, but cases before `t0` contribute their full `t0` risk.
//! - [`Method::M3`]: whole cohort, observed count imputed as `n * K_n(t0)` from
//!   the Kaplan-Meier cumulative incidence.
//!
//! It also provides the survival primitives these rely on, two risk models
//! (a uniform toy model and the Rosner-Colditz reproductive-factor model) and
//! a deterministic Monte-Carlo engine for simulation studies.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use eoratio_core::{evaluate, Cohort, Subject, UniformModel};
//!
//! let subjects = vec![
//!     Subject::new(2.0, true, ()).unwrap(),
//!     Subject::new(5.0, true, ()).unwrap(),
//!     Subject::new(12.0, false, ()).unwrap(),
//!     Subject::new(12.0, false, ()).unwrap(),
//! ];
//! let cohort = Cohort::new(subjects, 10.0).unwrap();
//! let report = evaluate(&cohort, &UniformModel::new(100.0).unwrap()).unwrap();
//! assert!((report.m3.point - 0.4 / 2.0).abs() < 1e-12);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calibration;
mod error;
mod math;
pub mod risk;
pub mod simulation;
pub mod survival;

pub use calibration::{
    ci_delta_km, ci_poisson, correction_c0_tilde, correction_c1, estimate_m0, estimate_m1,
    estimate_m2, estimate_m3, evaluate, evaluate_grouped, expected_sums, observed_counts,
    risk_deciles, CalibrationReport, ConfidenceInterval, EoRatioEstimate, ExpectedSums,
    GroupReport, Method, ObservedCounts, Z_95,
};
pub use error::{Error, Result};
pub use risk::{
    rcm_log_incidence, t_year_risk, t_year_risk_from_rates, uniform_risk, RcmCoefficients,
    RcmCovariates, RcmModel, RiskModel, UniformModel,
};
pub use simulation::{
    paper_grid, run_design, run_replicate, solve_omega, MethodSummary, ReplicateOutcome,
    SimulationDesign, SimulationSummary, SummaryBuilder,
};
pub use survival::{
    classify_subjects, empirical_cdf_known, greenwood_variance, kaplan_meier, Cohort,
    GreenwoodVariance, KmEstimate, KmStep, StatusPartition, Subject,
};
