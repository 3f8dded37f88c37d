//! Serialization of evaluation, Kaplan-Meier and simulation results.
//!
//! CSV output rounds to 4 decimals (the Greenwood variance uses 4-decimal
//! scientific notation, being far below 1e-4 for realistic cohorts). JSON keeps
//! full precision.

use std::collections::HashMap;
use std::fmt::Write as _;

use eoratio_core::{
    CalibrationReport, ConfidenceInterval, EoRatioEstimate, ExpectedSums, GreenwoodVariance,
    GroupReport, KmEstimate, Method, ObservedCounts, SimulationSummary,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Text tables laid out like the published simulation tables
    /// (simulation output only).
    Table,
}

/// The serialized form of a calibration evaluation: the selected estimates,
/// the diagnostics shared by all of them and optional per-group results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub t0: f64,
    pub n: usize,
    pub n_ks: usize,
    pub n_uks: usize,
    pub expected: ExpectedSums,
    pub observed: ObservedCounts,
    pub km_incidence: f64,
    pub km_greenwood: GreenwoodVariance,
    pub f_ks: f64,
    pub c0_tilde: f64,
    /// `None` when `R1` is 0 and the ratio is undefined.
    pub c1: Option<f64>,
    pub estimates: Vec<EoRatioEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupReport>,
}

impl EvaluationRecord {
    pub fn new(report: &CalibrationReport, methods: &[Method], groups: Vec<GroupReport>) -> Self {
        Self {
            t0: report.t0,
            n: report.n,
            n_ks: report.n_ks,
            n_uks: report.n_uks,
            expected: report.expected,
            observed: report.observed,
            km_incidence: report.km_incidence,
            km_greenwood: report.km_greenwood,
            f_ks: report.f_ks,
            c0_tilde: report.c0_tilde,
            c1: report.c1.is_finite().then_some(report.c1),
            estimates: methods.iter().map(|&m| *report.estimate(m)).collect(),
            groups,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| rows.push((k.to_string(), v));
        put("t0", dec(self.t0));
        put("n", self.n.to_string());
        put("n_ks", self.n_ks.to_string());
        put("n_uks", self.n_uks.to_string());
        put("o_ks", self.observed.o_ks.to_string());
        put("o_hat", dec(self.observed.o_hat));
        put("e_full", dec(self.expected.e_full));
        put("e_ks", dec(self.expected.e_ks));
        put("e_uks", dec(self.expected.e_uks));
        put("e_m1", dec(self.expected.e_m1));
        put("e_m2", dec(self.expected.e_m2));
        put("km_incidence", dec(self.km_incidence));
        put("km_greenwood_var", sci(self.km_greenwood.variance));
        put(
            "km_greenwood_degenerate",
            flag(self.km_greenwood.degenerate),
        );
        put("f_ks", dec(self.f_ks));
        put("c0_tilde", dec(self.c0_tilde));
        put("c1", self.c1.map(dec).unwrap_or_default());
        for e in &self.estimates {
            put_estimate(&mut put, &e.method.name().to_ascii_lowercase(), e);
        }
        for g in &self.groups {
            let p = format!("group{}", g.group);
            put(&format!("{p}_n"), g.n.to_string());
            put(&format!("{p}_n_ks"), g.n_ks.to_string());
            put(&format!("{p}_risk_min"), dec(g.risk_min));
            put(&format!("{p}_risk_max"), dec(g.risk_max));
            put(&format!("{p}_o_ks"), g.o_ks.to_string());
            for e in [g.m0, g.m3].iter().flatten() {
                put_estimate(
                    &mut put,
                    &format!("{p}_{}", e.method.name().to_ascii_lowercase()),
                    e,
                );
            }
        }

        let mut out = String::from("quantity,value\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut order = Vec::new();
        let mut map = HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let key = rec.get(0).unwrap_or("").to_string();
            order.push(key.clone());
            map.insert(key, rec.get(1).unwrap_or("").to_string());
        }
        let kv = Kv(&map);

        let estimates = Method::ALL
            .iter()
            .filter(|m| map.contains_key(&format!("{}_point", m.name().to_ascii_lowercase())))
            .map(|&m| kv.estimate(&m.name().to_ascii_lowercase(), m))
            .collect::<Result<Vec<_>>>()?;

        let mut groups = Vec::new();
        for key in &order {
            let Some(g) = key
                .strip_prefix("group")
                .and_then(|rest| rest.strip_suffix("_n"))
                .and_then(|g| g.parse::<usize>().ok())
            else {
                continue;
            };
            let p = format!("group{g}");
            let optional = |m: Method| -> Result<Option<EoRatioEstimate>> {
                let prefix = format!("{p}_{}", m.name().to_ascii_lowercase());
                if map.contains_key(&format!("{prefix}_point")) {
                    kv.estimate(&prefix, m).map(Some)
                } else {
                    Ok(None)
                }
            };
            groups.push(GroupReport {
                group: g,
                n: kv.get(&format!("{p}_n"))?,
                n_ks: kv.get(&format!("{p}_n_ks"))?,
                risk_min: kv.get(&format!("{p}_risk_min"))?,
                risk_max: kv.get(&format!("{p}_risk_max"))?,
                o_ks: kv.get(&format!("{p}_o_ks"))?,
                m0: optional(Method::M0)?,
                m3: optional(Method::M3)?,
            });
        }

        let o_ks = kv.get("o_ks")?;
        Ok(Self {
            t0: kv.get("t0")?,
            n: kv.get("n")?,
            n_ks: kv.get("n_ks")?,
            n_uks: kv.get("n_uks")?,
            expected: ExpectedSums {
                e_full: kv.get("e_full")?,
                e_ks: kv.get("e_ks")?,
                e_uks: kv.get("e_uks")?,
                e_m1: kv.get("e_m1")?,
                e_m2: kv.get("e_m2")?,
            },
            observed: ObservedCounts {
                o_ks,
                o_m1: o_ks,
                o_hat: kv.get("o_hat")?,
            },
            km_incidence: kv.get("km_incidence")?,
            km_greenwood: GreenwoodVariance {
                variance: kv.get("km_greenwood_var")?,
                degenerate: kv.flag("km_greenwood_degenerate")?,
            },
            f_ks: kv.get("f_ks")?,
            c0_tilde: kv.get("c0_tilde")?,
            c1: match kv.raw("c1")? {
                "" => None,
                _ => Some(kv.get("c1")?),
            },
            estimates,
            groups,
        })
    }
}

fn put_estimate(put: &mut impl FnMut(&str, String), prefix: &str, e: &EoRatioEstimate) {
    put(&format!("{prefix}_point"), dec(e.point));
    put(&format!("{prefix}_ci_low"), dec(e.ci.low));
    put(&format!("{prefix}_ci_high"), dec(e.ci.high));
    put(&format!("{prefix}_ci_degenerate"), flag(e.ci.degenerate));
    put(&format!("{prefix}_expected"), dec(e.expected));
    put(&format!("{prefix}_observed"), dec(e.observed));
}

struct Kv<'a>(&'a HashMap<String, String>);

impl Kv<'_> {
    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Validation(format!("report is missing `{key}`")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| {
            Error::Validation(format!("report field `{key}` has invalid value {raw:?}"))
        })
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Validation(format!(
                "report field `{key}` must be 0 or 1, got {other:?}"
            ))),
        }
    }

    fn estimate(&self, prefix: &str, method: Method) -> Result<EoRatioEstimate> {
        Ok(EoRatioEstimate {
            method,
            point: self.get(&format!("{prefix}_point"))?,
            ci: ConfidenceInterval {
                low: self.get(&format!("{prefix}_ci_low"))?,
                high: self.get(&format!("{prefix}_ci_high"))?,
                degenerate: self.flag(&format!("{prefix}_ci_degenerate"))?,
            },
            expected: self.get(&format!("{prefix}_expected"))?,
            observed: self.get(&format!("{prefix}_observed"))?,
        })
    }
}

fn dec(x: f64) -> String {
    format!("{x:.4}")
}

fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Kaplan-Meier summary printed by the `km` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmRecord {
    pub t0: f64,
    pub n: usize,
    pub incidence: f64,
    pub survival: f64,
    pub std_err: f64,
    pub greenwood_var: f64,
    pub degenerate: bool,
}

impl KmRecord {
    pub fn new(km: &KmEstimate, n: usize) -> Self {
        Self {
            t0: km.horizon,
            n,
            incidence: km.incidence,
            survival: km.survival,
            std_err: km.std_err(),
            greenwood_var: km.greenwood.variance,
            degenerate: km.greenwood.degenerate,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "t0,n,incidence,survival,std_err,greenwood_var,degenerate\n{},{},{},{},{},{},{}\n",
            dec(self.t0),
            self.n,
            dec(self.incidence),
            dec(self.survival),
            dec(self.std_err),
            sci(self.greenwood_var),
            flag(self.degenerate)
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub const SIMULATION_COLUMNS: [&str; 27] = [
    "lambda",
    "target_rate",
    "omega",
    "n",
    "t0",
    "replicates",
    "seed",
    "used",
    "excluded",
    "valid",
    "unknown_rate",
    "observed_cases",
    "m0_mean",
    "m0_width",
    "m0_coverage",
    "m1_mean",
    "m1_width",
    "m1_coverage",
    "m2_mean",
    "m2_width",
    "m2_coverage",
    "m3_mean",
    "m3_width",
    "m3_coverage",
    "c0_tilde",
    "c1",
    "true_case_rate",
];

/// One row per design with the estimator (mean, CI width, coverage) triples
/// and the mean correction terms.
pub fn simulation_csv(summaries: &[SimulationSummary]) -> String {
    let mut out = SIMULATION_COLUMNS.join(",");
    out.push('\n');
    for s in summaries {
        let d = &s.design;
        let mut cells = vec![
            dec(d.lambda),
            d.target_rate.map(dec).unwrap_or_default(),
            d.omega.map(dec).unwrap_or_default(),
            d.n.to_string(),
            dec(d.t0),
            d.replicates.to_string(),
            d.seed.to_string(),
            s.used.to_string(),
            s.excluded.to_string(),
            flag(s.valid),
            dec(s.unknown_rate),
            dec(s.mean_observed_cases),
        ];
        for m in &s.methods {
            cells.extend([dec(m.mean), dec(m.mean_width), dec(m.coverage)]);
        }
        cells.extend([dec(s.mean_c0_tilde), dec(s.mean_c1), dec(s.true_case_rate)]);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn simulation_json(summaries: &[SimulationSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(summaries)? + "\n")
}

/// Text rendering of the estimator table and the correction-term table,
/// grouped by `lambda`.
pub fn simulation_tables(summaries: &[SimulationSummary]) -> String {
    let rate = |s: &SimulationSummary| match s.design.target_rate {
        Some(r) => format!("{:.0}%", 100.0 * r),
        None => format!("{:.1}%", 100.0 * s.unknown_rate),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Mean E/O estimate, mean CI width and coverage of 1 per method\n\n{:<8}{:>9}  {:<21}{:<21}{:<21}{:<21}",
        "UKSI", "Observed", "M0", "M1", "M2", "M3"
    );
    let mut last_lambda = None;
    for s in summaries {
        if last_lambda != Some(s.design.lambda) {
            let _ = writeln!(out, "lambda = {}", s.design.lambda);
            last_lambda = Some(s.design.lambda);
        }
        let _ = write!(out, "{:<8}{:>9.0}  ", rate(s), s.mean_observed_cases);
        for m in &s.methods {
            let _ = write!(out, "{:.3} {:.3} {:.3}  ", m.mean, m.mean_width, m.coverage);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }

    let _ = writeln!(
        out,
        "\nMean correction terms\n\n{:<8}{:>10}{:>10}",
        "UKSI", "C0~", "C1"
    );
    last_lambda = None;
    for s in summaries {
        if last_lambda != Some(s.design.lambda) {
            let _ = writeln!(out, "lambda = {}", s.design.lambda);
            last_lambda = Some(s.design.lambda);
        }
        let _ = writeln!(
            out,
            "{:<8}{:>10.3}{:>10.3}",
            rate(s),
            s.mean_c0_tilde,
            s.mean_c1
        );
    }
    out
}
