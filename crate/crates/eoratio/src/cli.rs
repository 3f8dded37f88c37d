use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eoratio_core::{
    evaluate, evaluate_grouped, kaplan_meier, paper_grid, risk_deciles, Cohort, Method, RcmModel,
    RiskModel, UniformModel,
};

use crate::cohort_file::{read_cohort_path, CohortFile};
use crate::config::{parse_methods, read_coefficients, read_grid, ModelSpec};
use crate::error::{Error, Result};
use crate::report::{
    simulation_csv, simulation_json, simulation_tables, EvaluationRecord, Format, KmRecord,
};
use crate::runner;

#[derive(Debug, Parser)]
#[command(
    name = "eoratio",
    version,
    about = "Expected/observed calibration of t0-year risk prediction tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a risk model's calibration on a cohort CSV.
    Evaluate(EvaluateArgs),
    /// Run the Monte-Carlo study on a design grid.
    Simulate(SimulateArgs),
    /// Kaplan-Meier cumulative incidence of a cohort CSV at t0.
    Km(KmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grouping {
    Deciles,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub cohort: PathBuf,
    /// Horizon in years.
    #[arg(long)]
    pub t0: f64,
    /// `uniform:<lambda>`, `rcm` or `rcm:<coefficient file>`.
    #[arg(long)]
    pub model: String,
    /// Comma-separated subset of m0,m1,m2,m3 [default: all, or m0,m3 with --groups].
    #[arg(long)]
    pub methods: Option<String>,
    /// Also report calibration within groups of predicted t0-year risk.
    #[arg(long, value_enum)]
    pub groups: Option<Grouping>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Grid file, one `lambda, target_rate, n, t0, replicates, seed` per line.
    #[arg(
        long,
        conflicts_with = "paper_grid",
        required_unless_present = "paper_grid"
    )]
    pub grid: Option<PathBuf>,
    /// Run the built-in 12-design grid (lambda 100/200/400 x 0/5/10/20% unknown status).
    #[arg(long)]
    pub paper_grid: bool,
    /// Base seed of the built-in grid.
    #[arg(long, default_value_t = 1, conflicts_with = "grid")]
    pub seed: u64,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    pub cohort: PathBuf,
    #[arg(long)]
    pub t0: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `std::env::args`, runs the command and maps errors to exit codes
/// (1 validation, 2 I/O).
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let (text, output) = match &cli.command {
        Command::Evaluate(args) => (cmd_evaluate(args)?, &args.output),
        Command::Simulate(args) => (cmd_simulate(args)?, &args.output),
        Command::Km(args) => (cmd_km(args)?, &args.output),
    };
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn check_horizon(t0: f64, file: &CohortFile) -> Result<()> {
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::Validation(format!(
            "--t0 must be positive, got {t0}"
        )));
    }
    let max_z = file.max_z();
    if t0 > max_z {
        return Err(Error::Validation(format!(
            "--t0 {t0} exceeds the largest follow-up time in the cohort ({max_z})"
        )));
    }
    Ok(())
}

fn evaluate_with<C, M: RiskModel<C>>(
    cohort: &Cohort<C>,
    model: &M,
    methods: &[Method],
    groups: Option<Grouping>,
) -> Result<EvaluationRecord> {
    let report = evaluate(cohort, model)?;
    let groups = match groups {
        None => Vec::new(),
        Some(Grouping::Deciles) => {
            let risks = cohort
                .subjects()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    model.risk(s.covariates(), cohort.t0()).map_err(|e| {
                        eoratio_core::Error::Subject {
                            index: i,
                            source: Box::new(e),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            evaluate_grouped(cohort, model, &risk_deciles(&risks), methods)?
        }
    };
    Ok(EvaluationRecord::new(&report, methods, groups))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String> {
    if args.output.format == Format::Table {
        return Err(Error::Validation(
            "table format is only available for simulate".into(),
        ));
    }
    let model: ModelSpec = args.model.parse()?;
    let methods = match (&args.methods, args.groups) {
        (Some(list), _) => parse_methods(list)?,
        (None, Some(_)) => vec![Method::M0, Method::M3],
        (None, None) => Method::ALL.to_vec(),
    };
    if args.groups.is_some() {
        if let Some(m) = methods.iter().find(|m| !m.supports_grouping()) {
            return Err(Error::Validation(format!(
                "method {m} cannot be combined with --groups; use m0 and/or m3"
            )));
        }
    }
    let file = read_cohort_path(&args.cohort)?;
    check_horizon(args.t0, &file)?;

    let record = match model {
        ModelSpec::Uniform(lambda) => evaluate_with(
            &file.cohort(args.t0)?,
            &UniformModel::new(lambda)?,
            &methods,
            args.groups,
        )?,
        ModelSpec::Rcm(coef_path) => {
            let coefficients = match coef_path {
                Some(p) => read_coefficients(&p)?,
                None => Default::default(),
            };
            evaluate_with(
                &file.rcm_cohort(args.t0)?,
                &RcmModel::new(coefficients),
                &methods,
                args.groups,
            )?
        }
    };
    match args.output.format {
        Format::Json => record.to_json(),
        _ => Ok(record.to_csv()),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let designs = match &args.grid {
        Some(path) => read_grid(path)?,
        None => paper_grid(args.seed),
    };
    let summaries = runner::with_threads(args.threads, || runner::run_designs(&designs))?;
    match args.output.format {
        Format::Csv => Ok(simulation_csv(&summaries)),
        Format::Json => simulation_json(&summaries),
        Format::Table => Ok(simulation_tables(&summaries)),
    }
}

pub fn cmd_km(args: &KmArgs) -> Result<String> {
    let file = read_cohort_path(&args.cohort)?;
    check_horizon(args.t0, &file)?;
    let cohort = file.cohort(args.t0)?;
    let km = kaplan_meier(&cohort, args.t0)?;
    let record = KmRecord::new(&km, cohort.len());
    match args.output.format {
        Format::Csv => Ok(record.to_csv()),
        Format::Json => record.to_json(),
        Format::Table => Err(Error::Validation(
            "table format is only available for simulate".into(),
        )),
    }
}
