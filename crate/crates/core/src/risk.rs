//! Risk models producing a subject's predicted probability `e_i(t)` of
//! developing the disease within `t` years.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, floor};

/// A t-year risk prediction tool.
///
/// Implementations must return 0 at `t = 0`, be nondecreasing in `t` and stay
/// within `[0, 1]`.
pub trait RiskModel<C> {
    fn risk(&self, covariates: &C, t: f64) -> Result<f64>;
}

impl<C, M: RiskModel<C> + ?Sized> RiskModel<C> for &M {
    fn risk(&self, covariates: &C, t: f64) -> Result<f64> {
        (**self).risk(covariates, t)
    }
}

/// `min(t / lambda, 1)`, the CDF of a uniform event time on `[0, lambda]`.
#[inline]
pub fn uniform_risk(lambda: f64, t: f64) -> f64 {
    (t / lambda).clamp(0.0, 1.0)
}

/// Same risk for every subject: `P(Y <= t) = t / lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformModel {
    lambda: f64,
}

impl UniformModel {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(
                "lambda must be positive and finite",
            ));
        }
        Ok(Self { lambda })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl<C> RiskModel<C> for UniformModel {
    #[inline]
    fn risk(&self, _: &C, t: f64) -> Result<f64> {
        Ok(uniform_risk(self.lambda, t))
    }
}

/// Regression coefficients of the log-incidence model
///
/// ```text
/// log I_a = alpha + beta0 a0 + beta1 (a* - a0) + beta2 (a - am) m
///         + beta3 (a1 - a0) b1 + beta4 b + beta5 b (a - am) m
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcmCoefficients {
    pub alpha: f64,
    /// Age at menarche.
    pub beta0: f64,
    /// `min(age, age at menopause) - age at menarche`.
    pub beta1: f64,
    /// `age - age at menopause`, menopausal women only.
    pub beta2: f64,
    /// `age at first birth - age at menarche`, parous women only.
    pub beta3: f64,
    /// Birth index.
    pub beta4: f64,
    /// Birth index times `age - age at menopause`, menopausal women only.
    pub beta5: f64,
}

impl RcmCoefficients {
    /// Published estimates of the first Rosner-Colditz model.
    pub const ROSNER_COLDITZ: Self = Self {
        alpha: -9.687,
        beta0: 0.048,
        beta1: 0.081,
        beta2: 0.050,
        beta3: 0.013,
        beta4: -0.0036,
        beta5: -0.00020,
    };

    /// Standard errors of [`Self::ROSNER_COLDITZ`], in field order.
    pub const ROSNER_COLDITZ_STD_ERRORS: [(&'static str, f64); 7] = [
        ("alpha", 0.265),
        ("beta0", 0.016),
        ("beta1", 0.004),
        ("beta2", 0.005),
        ("beta3", 0.004),
        ("beta4", 0.0009),
        ("beta5", 0.00012),
    ];

    pub const KEYS: [&'static str; 7] = [
        "alpha", "beta0", "beta1", "beta2", "beta3", "beta4", "beta5",
    ];

    /// Looks a coefficient up by its key (`alpha`, `beta0` .. `beta5`).
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "alpha" => self.alpha,
            "beta0" => self.beta0,
            "beta1" => self.beta1,
            "beta2" => self.beta2,
            "beta3" => self.beta3,
            "beta4" => self.beta4,
            "beta5" => self.beta5,
            _ => return None,
        })
    }

    /// Overrides one coefficient; `false` when the key is unknown.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "alpha" => &mut self.alpha,
            "beta0" => &mut self.beta0,
            "beta1" => &mut self.beta1,
            "beta2" => &mut self.beta2,
            "beta3" => &mut self.beta3,
            "beta4" => &mut self.beta4,
            "beta5" => &mut self.beta5,
            _ => return false,
        };
        *slot = value;
        true
    }
}

impl Default for RcmCoefficients {
    fn default() -> Self {
        Self::ROSNER_COLDITZ
    }
}

/// Reproductive history of one woman at her baseline age.
///
/// Parity is `birth_ages.len()` and the age at first birth is
/// `birth_ages[0]`. `age_menopause` may be set for a premenopausal woman when
/// the age at which she will reach menopause is known; projections then switch
/// her to menopausal from that age on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcmCovariates {
    pub age: f64,
    pub age_menarche: f64,
    pub menopausal: bool,
    pub age_menopause: Option<f64>,
    pub birth_ages: Vec<f64>,
}

impl RcmCovariates {
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite() && x >= 0.0;
        if !finite(self.age) || !finite(self.age_menarche) {
            return Err(Error::InvalidCovariate(
                "ages must be finite and nonnegative",
            ));
        }
        if self.age < self.age_menarche {
            return Err(Error::InvalidCovariate("age precedes age at menarche"));
        }
        match (self.menopausal, self.age_menopause) {
            (true, None) => return Err(Error::MissingCovariate("age_menopause")),
            (_, Some(am)) if !finite(am) || am <= self.age_menarche => {
                return Err(Error::InvalidCovariate(
                    "age at menopause must follow age at menarche",
                ))
            }
            (true, Some(am)) if self.age < am => {
                return Err(Error::InvalidCovariate(
                    "menopausal woman younger than her age at menopause",
                ))
            }
            _ => {}
        }
        let mut previous = self.age_menarche;
        for (i, &birth) in self.birth_ages.iter().enumerate() {
            if !birth.is_finite() {
                return Err(Error::InvalidCovariate("birth ages must be finite"));
            }
            if i == 0 && birth <= self.age_menarche {
                return Err(Error::InvalidCovariate(
                    "age at first birth must follow age at menarche",
                ));
            }
            if birth < previous {
                return Err(Error::InvalidCovariate("birth ages must be nondecreasing"));
            }
            if birth > self.age {
                return Err(Error::InvalidCovariate(
                    "birth recorded after the current age",
                ));
            }
            previous = birth;
        }
        Ok(())
    }

    #[inline]
    pub fn parity(&self) -> usize {
        self.birth_ages.len()
    }

    #[inline]
    pub fn age_first_birth(&self) -> Option<f64> {
        self.birth_ages.first().copied()
    }

    fn menopausal_at(&self, age: f64) -> bool {
        self.menopausal || self.age_menopause.is_some_and(|am| age >= am)
    }

    /// `a* = min(age, age at menopause)` once menopausal, `age` before.
    pub fn a_star(&self, age: f64) -> f64 {
        match self.age_menopause {
            Some(am) if self.menopausal_at(age) => age.min(am),
            _ => age,
        }
    }

    /// Birth index `sum_i (a* - a_i) 1{a_i <= a*}` at `age`.
    pub fn birth_index(&self, age: f64) -> f64 {
        let a_star = self.a_star(age);
        self.birth_ages
            .iter()
            .filter(|&&ai| ai <= a_star)
            .map(|&ai| a_star - ai)
            .sum()
    }

    /// The same history seen at a later age.
    pub fn at_age(&self, age: f64) -> Self {
        Self {
            age,
            menopausal: self.menopausal_at(age),
            ..self.clone()
        }
    }
}

fn log_incidence_at(cov: &RcmCovariates, coef: &RcmCoefficients, age: f64) -> f64 {
    let a0 = cov.age_menarche;
    let a_star = cov.a_star(age);
    let b = cov.birth_index(age);
    let since_menopause = match cov.age_menopause {
        Some(am) if cov.menopausal_at(age) => age - am,
        _ => 0.0,
    };
    let parous_term = cov
        .age_first_birth()
        .map_or(0.0, |a1| coef.beta3 * (a1 - a0));
    coef.alpha
        + coef.beta0 * a0
        + coef.beta1 * (a_star - a0)
        + coef.beta2 * since_menopause
        + parous_term
        + coef.beta4 * b
        + coef.beta5 * b * since_menopause
}

/// Log breast-cancer incidence at the covariates' current age.
pub fn rcm_log_incidence(cov: &RcmCovariates, coef: &RcmCoefficients) -> Result<f64> {
    cov.validate()?;
    Ok(log_incidence_at(cov, coef, cov.age))
}

/// `1 - exp(-(r_1 + .. + r_k + f r_{k+1}))` with `k = floor(t)` and
/// `f = t - k`; `rates[j]` is the incidence rate of year `j + 1`.
///
/// Panics if `rates` does not cover `ceil(t)` years.
pub fn t_year_risk_from_rates(rates: &[f64], t: f64) -> f64 {
    let whole = floor(t);
    let k = whole as usize;
    let frac = t - whole;
    let mut cumulative: f64 = rates[..k].iter().sum();
    if frac > 0.0 {
        cumulative += frac * rates[k];
    }
    -libm::expm1(-cumulative)
}

/// t-year risk from yearly incidence rates, starting at the baseline age of
/// `cov`.
///
/// Year `j` uses the rate at age `baseline + j - 1`, with age-dependent terms
/// (`a*`, birth index, menopause) advanced to that age. A fractional final
/// year contributes its rate pro rata.
pub fn t_year_risk(cov: &RcmCovariates, coef: &RcmCoefficients, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidHorizon(t));
    }
    cov.validate()?;
    let years = libm::ceil(t) as usize;
    let rates: Vec<f64> = (0..years)
        .map(|j| exp(log_incidence_at(cov, coef, cov.age + j as f64)))
        .collect();
    Ok(t_year_risk_from_rates(&rates, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcmModel {
    pub coefficients: RcmCoefficients,
}

impl RcmModel {
    pub fn new(coefficients: RcmCoefficients) -> Self {
        Self { coefficients }
    }
}

impl RiskModel<RcmCovariates> for RcmModel {
    fn risk(&self, covariates: &RcmCovariates, t: f64) -> Result<f64> {
        t_year_risk(covariates, &self.coefficients, t)
    }
}
