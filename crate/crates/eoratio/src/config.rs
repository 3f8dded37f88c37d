//! Command configuration: model selection, method subsets, coefficient
//! override files and simulation grid files.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eoratio_core::{Method, RcmCoefficients, SimulationDesign};

use crate::error::{Error, Result, RowError};

/// `uniform:<lambda>`, `rcm` or `rcm:<coefficient file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Uniform(f64),
    Rcm(Option<PathBuf>),
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (kind, arg) {
            ("uniform", Some(lambda)) => lambda
                .parse::<f64>()
                .ok()
                .filter(|l| l.is_finite() && *l > 0.0)
                .map(ModelSpec::Uniform)
                .ok_or_else(|| Error::Validation(format!("invalid uniform lambda {lambda:?}"))),
            ("uniform", None) => Err(Error::Validation(
                "uniform model needs a lambda, e.g. uniform:100".into(),
            )),
            ("rcm", None) => Ok(ModelSpec::Rcm(None)),
            ("rcm", Some(path)) if !path.is_empty() => Ok(ModelSpec::Rcm(Some(path.into()))),
            _ => Err(Error::Validation(format!(
                "unknown model {s:?}; expected uniform:<lambda> or rcm[:<coefficient file>]"
            ))),
        }
    }
}

/// Comma-separated subset of `m0,m1,m2,m3`, returned in canonical order.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m = Method::parse(token)
            .ok_or_else(|| Error::Validation(format!("unknown method {token:?}")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::Validation("no methods selected".into()));
    }
    methods.sort();
    Ok(methods)
}

/// Coefficient overrides as `key = value` lines (`#` starts a comment).
/// Keys not listed keep their published defaults.
pub fn parse_coefficients(text: &str) -> Result<RcmCoefficients> {
    let mut coef = RcmCoefficients::default();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let problem = match line.split_once(['=', ':']) {
            None => Some(format!("expected `key = value`, got {line:?}")),
            Some((key, value)) => match value.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => (!coef.set(key.trim(), v))
                    .then(|| format!("unknown coefficient {:?}", key.trim())),
                _ => Some(format!("invalid value {:?}", value.trim())),
            },
        };
        if let Some(message) = problem {
            errors.push(RowError {
                row: i + 1,
                line: i as u64 + 1,
                message,
            });
        }
    }
    if errors.is_empty() {
        Ok(coef)
    } else {
        Err(Error::Rows(errors))
    }
}

pub fn read_coefficients(path: &Path) -> Result<RcmCoefficients> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coefficients(&text)
}

/// One design per line: `lambda, target_rate, n, t0, replicates, seed`.
/// Blank lines and `#` comments are skipped; a target rate of 0 means no
/// censoring.
pub fn parse_grid(text: &str) -> Result<Vec<SimulationDesign>> {
    let mut designs = Vec::new();
    let mut errors = Vec::new();
    let mut row = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        row += 1;
        match parse_grid_line(line) {
            Ok(d) => designs.push(d),
            Err(message) => errors.push(RowError {
                row,
                line: i as u64 + 1,
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    if designs.is_empty() {
        return Err(Error::Validation("grid file lists no designs".into()));
    }
    Ok(designs)
}

fn parse_grid_line(line: &str) -> Result<SimulationDesign, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(format!(
            "expected 6 fields (lambda, target_rate, n, t0, replicates, seed), got {}",
            fields.len()
        ));
    }
    fn num<T: FromStr>(s: &str, name: &str) -> Result<T, String> {
        s.parse().map_err(|_| format!("invalid {name} {s:?}"))
    }
    SimulationDesign::from_target_rate(
        num(fields[0], "lambda")?,
        num(fields[1], "target_rate")?,
        num(fields[2], "n")?,
        num(fields[3], "t0")?,
        num(fields[4], "replicates")?,
        num(fields[5], "seed")?,
    )
    .map_err(|e| e.to_string())
}

pub fn read_grid(path: &Path) -> Result<Vec<SimulationDesign>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text)
}
