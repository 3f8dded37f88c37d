//! Cohort CSV ingestion.
//!
//! Required columns are `z` (follow-up in decimal years) and `delta` (0/1).
//! Risk-factor columns for the Rosner-Colditz model are optional as a block:
//! `age`, `age_menarche`, `menopausal` (0/1), `age_menopause` (empty when
//! unknown), `parity` and `birth_ages` (`;`-separated, one per birth).
//! Every invalid row is reported, not only the first.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::StringRecord;
use eoratio_core::{Cohort, RcmCovariates, Subject};

use crate::error::{Error, Result, RowError};

const RCM_COLUMNS: [&str; 6] = [
    "age",
    "age_menarche",
    "menopausal",
    "age_menopause",
    "parity",
    "birth_ages",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CohortRow {
    pub z: f64,
    pub event: bool,
    pub rcm: Option<RcmCovariates>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortFile {
    pub rows: Vec<CohortRow>,
    pub has_rcm: bool,
}

struct Columns {
    z: usize,
    delta: usize,
    rcm: Option<[usize; 6]>,
}

impl Columns {
    fn locate(headers: &StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let z = find("z").ok_or_else(|| Error::Validation("missing required column `z`".into()))?;
        let delta = find("delta")
            .ok_or_else(|| Error::Validation("missing required column `delta`".into()))?;
        let found = RCM_COLUMNS.map(find);
        let rcm = if found.iter().all(Option::is_none) {
            None
        } else if let Some(missing) = RCM_COLUMNS.iter().zip(&found).find(|(_, f)| f.is_none()) {
            return Err(Error::Validation(format!(
                "risk-factor column `{}` is missing; risk-factor columns must all be present or all absent",
                missing.0
            )));
        } else {
            Some(found.map(Option::unwrap))
        };
        Ok(Self { z, delta, rcm })
    }
}

fn field(record: &StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

fn parse_number(record: &StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = field(record, idx);
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{name} must be a finite decimal, got {raw:?}"))
}

fn parse_flag(record: &StringRecord, idx: usize, name: &str) -> Result<bool, String> {
    match field(record, idx) {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("{name} must be 0 or 1, got {other:?}")),
    }
}

fn parse_rcm(record: &StringRecord, cols: [usize; 6]) -> Result<RcmCovariates, String> {
    let [age, menarche, menopausal, menopause, parity, births] = cols;
    let age_menopause = match field(record, menopause) {
        "" => None,
        _ => Some(parse_number(record, menopause, "age_menopause")?),
    };
    let parity_raw = field(record, parity);
    let parity: usize = parity_raw
        .parse()
        .map_err(|_| format!("parity must be a nonnegative integer, got {parity_raw:?}"))?;
    let birth_ages = field(record, births)
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("birth_ages entry {s:?} is not a decimal"))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    if birth_ages.len() != parity {
        return Err(format!(
            "parity is {parity} but birth_ages lists {} birth(s)",
            birth_ages.len()
        ));
    }
    let cov = RcmCovariates {
        age: parse_number(record, age, "age")?,
        age_menarche: parse_number(record, menarche, "age_menarche")?,
        menopausal: parse_flag(record, menopausal, "menopausal")?,
        age_menopause,
        birth_ages,
    };
    cov.validate().map_err(|e| e.to_string())?;
    Ok(cov)
}

fn parse_row(record: &StringRecord, cols: &Columns) -> Result<CohortRow, String> {
    let z = parse_number(record, cols.z, "z")?;
    if z <= 0.0 {
        return Err(format!("z must be positive, got {z}"));
    }
    let event = parse_flag(record, cols.delta, "delta")?;
    let rcm = cols.rcm.map(|c| parse_rcm(record, c)).transpose()?;
    Ok(CohortRow { z, event, rcm })
}

pub fn read_cohort(reader: impl Read) -> Result<CohortFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = Columns::locate(&headers)?;

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut record = StringRecord::new();
    let mut row = 0;
    loop {
        let line_hint = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                row += 1;
                let line = record.position().map_or(line_hint, |p| p.line());
                match parse_row(&record, &cols) {
                    Ok(r) => rows.push(r),
                    Err(message) => errors.push(RowError { row, line, message }),
                }
            }
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                row += 1;
                errors.push(RowError {
                    row,
                    line: e.position().map_or(line_hint, |p| p.line()),
                    message: e.to_string(),
                });
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    if rows.is_empty() {
        return Err(Error::Validation("cohort file has no data rows".into()));
    }
    Ok(CohortFile {
        rows,
        has_rcm: cols.rcm.is_some(),
    })
}

pub fn read_cohort_path(path: &Path) -> Result<CohortFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cohort(file)
}

impl CohortFile {
    pub fn max_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z).fold(f64::MIN, f64::max)
    }

    /// Cohort without covariates, for models that ignore them.
    pub fn cohort(&self, t0: f64) -> Result<Cohort> {
        let subjects = self
            .rows
            .iter()
            .map(|r| Subject::new(r.z, r.event, ()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cohort::new(subjects, t0)?)
    }

    pub fn rcm_cohort(&self, t0: f64) -> Result<Cohort<RcmCovariates>> {
        if !self.has_rcm {
            return Err(Error::Validation(format!(
                "the rcm model needs the columns {}",
                RCM_COLUMNS.join(", ")
            )));
        }
        let subjects = self
            .rows
            .iter()
            .map(|r| Subject::new(r.z, r.event, r.rcm.clone().expect("checked by has_rcm")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cohort::new(subjects, t0)?)
    }
}
