//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Result;
use crate::experiments::{
    emit, momentum_drift, sci, spatial_convergence, temporal_convergence, ConvergenceReport, DriftReport,
    Emit, Format, Settings, DEFAULT_SAMPLE_EVERY,
};
use crate::problems::{by_name, error_inf, PROBLEM_NAMES};
use crate::stepper::{run, steps_for, SchemeConfig, DEFAULT_ITER_TOL, DEFAULT_MAX_ITER};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rkdv", version, about = "Momentum-preserving pseudo-spectral Rosenau-KdV solver")]
struct Cli {
    #[command(subcommand)]
    spec: RunSpec,
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum RunSpec {
    /// Integrate one problem and write the final field.
    Run(RunArgs),
    /// Temporal convergence study on a fixed grid.
    ConvergeTime(ConvergeTimeArgs),
    /// Spatial convergence study with a fixed step.
    ConvergeSpace(ConvergeSpaceArgs),
    /// Momentum history of an unforced problem.
    Drift(DriftArgs),
    /// Run a stored reference configuration and compare against its values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Solver {
    /// Fixed-point stopping tolerance.
    #[arg(long, default_value_t = DEFAULT_ITER_TOL, value_parser = parse_positive)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER, value_parser = parse_count)]
    pub max_iter: usize,
}

impl Solver {
    fn settings(&self) -> Settings {
        Settings {
            iter_tol: self.tol,
            max_iter: self.max_iter,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = PROBLEM_NAMES)]
    pub problem: String,
    #[arg(long = "N", value_parser = parse_even)]
    pub n: usize,
    #[arg(long, value_parser = parse_positive)]
    pub tau: f64,
    #[arg(long = "T", value_parser = parse_positive)]
    pub t_final: f64,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ConvergeTimeArgs {
    #[arg(long, value_parser = PROBLEM_NAMES)]
    pub problem: String,
    #[arg(long = "N", value_parser = parse_even)]
    pub n: usize,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_parser = parse_positive)]
    pub taus: Vec<f64>,
    #[arg(long = "T", value_parser = parse_positive)]
    pub t_final: f64,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ConvergeSpaceArgs {
    #[arg(long, value_parser = PROBLEM_NAMES)]
    pub problem: String,
    #[arg(long, value_parser = parse_positive)]
    pub tau: f64,
    /// Comma-separated, strictly increasing.
    #[arg(long = "Ns", value_delimiter = ',', num_args = 1.., required = true, value_parser = parse_even)]
    pub ns: Vec<usize>,
    #[arg(long = "T", value_parser = parse_positive)]
    pub t_final: f64,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DriftArgs {
    #[arg(long, value_parser = PROBLEM_NAMES)]
    pub problem: String,
    #[arg(long = "N", value_parser = parse_even)]
    pub n: usize,
    #[arg(long, value_parser = parse_positive)]
    pub tau: f64,
    #[arg(long = "T", value_parser = parse_positive)]
    pub t_final: f64,
    #[arg(long = "sample-every", default_value_t = DEFAULT_SAMPLE_EVERY, value_parser = parse_count)]
    pub sample_every: usize,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableId {
    Table1,
    Table2,
    Table4,
    Table5,
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub table: TableId,
    /// Shorter runs with thresholds adjusted to the coarser step.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub output: Output,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse()
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive (got {s})"))
    }
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

fn parse_even(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s.trim().parse().map_err(|_| format!("{s:?} is not a non-negative integer"))?;
    if !n.is_multiple_of(2) {
        Err(format!("N must be even (got {n})"))
    } else if n < 4 {
        Err(format!("N must be at least 4 (got {n})"))
    } else {
        Ok(n)
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, format!("{flag}: {msg}"))
}

fn check_multiple(t_final: f64, tau: f64, tau_flag: &str) -> std::result::Result<(), clap::Error> {
    steps_for(t_final, tau)
        .map(|_| ())
        .map_err(|_| usage("--T", format!("{t_final} is not an integer multiple of {tau_flag} {tau}")))
}

impl RunSpec {
    fn validate(&self) -> std::result::Result<(), clap::Error> {
        match self {
            RunSpec::Run(a) => check_multiple(a.t_final, a.tau, "--tau"),
            RunSpec::Drift(a) => {
                check_multiple(a.t_final, a.tau, "--tau")?;
                if by_name(&a.problem).map(|p| p.has_source()).unwrap_or(false) {
                    return Err(usage("--problem", format!("{} is forced, momentum is not conserved", a.problem)));
                }
                Ok(())
            }
            RunSpec::ConvergeTime(a) => {
                if a.taus.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(usage("--taus", "values must be strictly decreasing"));
                }
                for &tau in &a.taus {
                    check_multiple(a.t_final, tau, "--taus entry")?;
                }
                exact_required(&a.problem)
            }
            RunSpec::ConvergeSpace(a) => {
                if a.ns.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(usage("--Ns", "values must be strictly increasing"));
                }
                check_multiple(a.t_final, a.tau, "--tau")?;
                exact_required(&a.problem)
            }
            RunSpec::Reproduce(_) => Ok(()),
        }
    }
}

fn exact_required(problem: &str) -> std::result::Result<(), clap::Error> {
    match by_name(problem) {
        Ok(p) if p.exact.is_some() => Ok(()),
        _ => Err(usage("--problem", format!("{problem} has no exact solution to measure errors against"))),
    }
}

/// Parses and validates a full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    cli.spec.validate()?;
    Ok(cli.spec)
}

/// Final field of a single run.
#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub problem: String,
    pub n: usize,
    pub tau: f64,
    pub t: f64,
    pub p0: f64,
    pub max_relative_drift: f64,
    pub error_inf: Option<f64>,
    pub max_iterations: usize,
    pub points: Vec<FieldPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub exact: Option<f64>,
}

impl Emit for FieldReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "u", "exact"])?;
        for p in &self.points {
            w.write_record([
                p.x.to_string(),
                p.y.to_string(),
                format!("{:.15e}", p.u),
                p.exact.map(|e| format!("{e:.15e}")).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn run_field(a: &RunArgs) -> Result<FieldReport> {
    let problem = by_name(&a.problem)?;
    let cfg = SchemeConfig::for_problem(&problem, a.tau)?
        .with_tol(a.solver.tol)
        .with_max_iter(a.solver.max_iter);
    let summary = run(&problem, a.n, cfg, a.t_final, &mut |_, _| {})?;
    let u = &summary.final_state.curr;
    let t = summary.final_state.t;
    let exact = problem.exact.clone();
    let points = u
        .grid()
        .points()
        .map(|(i, x, y)| FieldPoint {
            x,
            y,
            u: u.values()[i],
            exact: exact.as_ref().map(|f| f(x, y, t)),
        })
        .collect();
    Ok(FieldReport {
        problem: problem.name.into(),
        n: a.n,
        tau: a.tau,
        t,
        p0: summary.final_state.p0,
        max_relative_drift: summary.max_relative_drift(),
        error_inf: error_inf(u, &problem, t).ok(),
        max_iterations: summary.diagnostics.iter().map(|d| d.iterations_used).max().unwrap_or(0),
        points,
    })
}

/// How a computed value is judged against a stored reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// Within `tol` relative of the reference.
    Relative { reference: f64, tol: f64 },
    AtMost(f64),
    /// Within a factor of ten of the reference.
    Magnitude { reference: f64 },
    /// Shown but not judged.
    Info { reference: f64 },
}

impl Check {
    pub fn passes(&self, value: f64) -> Option<bool> {
        match *self {
            Check::Relative { reference, tol } => Some((value - reference).abs() <= tol * reference.abs()),
            Check::AtMost(bound) => Some(value <= bound),
            Check::Magnitude { reference } => Some(value > 0.0 && (value / reference).log10().abs() <= 1.0),
            Check::Info { .. } => None,
        }
    }

    fn describe(&self) -> String {
        match *self {
            Check::Relative { reference, tol } => format!("{} ±{}%", sci(reference), tol * 100.0),
            Check::AtMost(bound) => format!("<= {}", sci(bound)),
            Check::Magnitude { reference } => format!("~ {}", sci(reference)),
            Check::Info { reference } => format!("({})", sci(reference)),
        }
    }
}

/// Stored parameters and reference values for one `reproduce` target.
#[derive(Debug, Clone)]
pub enum Preset {
    Temporal {
        problem: &'static str,
        n: usize,
        taus: Vec<f64>,
        t_final: f64,
        errors: Vec<Check>,
        rate_band: (f64, f64),
    },
    Spatial {
        problem: &'static str,
        tau: f64,
        ns: Vec<usize>,
        t_final: f64,
        errors: Vec<Check>,
        /// Minimum rate over the leading rows, for the decay-only variant.
        min_rate: Option<(usize, f64)>,
    },
    Drift {
        problem: &'static str,
        n: usize,
        tau: f64,
        t_final: f64,
        max_drift: f64,
        p0: Option<(f64, f64)>,
    },
}

const TABLE1: [f64; 4] = [2.8001e-05, 6.9585e-06, 1.7341e-06, 4.3281e-07];
const TABLE2: [f64; 5] = [1.7538e-02, 4.2655e-04, 2.3645e-08, 6.1330e-11, 6.2242e-11];
const TABLE4: [f64; 4] = [4.6227e-03, 1.1709e-03, 2.9464e-04, 7.3903e-05];
const TABLE5: [f64; 3] = [7.9657e-05, 5.8725e-11, 5.2181e-11];
const REL_TOL: f64 = 0.05;
const FLOOR: f64 = 1e-9;
const MAX_DRIFT: f64 = 1e-10;

fn rel(reference: f64) -> Check {
    Check::Relative { reference, tol: REL_TOL }
}

impl TableId {
    pub fn preset(self, quick: bool) -> Preset {
        let taus = vec![0.1, 0.05, 0.025, 0.0125];
        match self {
            TableId::Table1 => Preset::Temporal {
                problem: "soliton1d",
                n: if quick { 256 } else { 1024 },
                taus,
                t_final: 1.0,
                errors: TABLE1.iter().map(|&r| rel(r)).collect(),
                rate_band: (1.95, 2.05),
            },
            TableId::Table2 if quick => Preset::Spatial {
                problem: "soliton1d",
                tau: 1e-3,
                ns: vec![16, 32, 64, 128],
                t_final: 1.0,
                errors: TABLE2[..4].iter().map(|&r| Check::Info { reference: r }).collect(),
                min_rate: Some((3, 4.0)),
            },
            TableId::Table2 => Preset::Spatial {
                problem: "soliton1d",
                tau: 1e-5,
                ns: vec![16, 32, 64, 128, 256],
                t_final: 1.0,
                errors: vec![rel(TABLE2[0]), rel(TABLE2[1]), rel(TABLE2[2]), Check::AtMost(FLOOR), Check::AtMost(FLOOR)],
                min_rate: None,
            },
            TableId::Table4 => Preset::Temporal {
                problem: "manufactured2d",
                n: if quick { 16 } else { 100 },
                taus,
                t_final: 1.0,
                errors: TABLE4.iter().map(|&r| rel(r)).collect(),
                rate_band: (1.93, 2.05),
            },
            TableId::Table5 => {
                let tau: f64 = if quick { 1e-3 } else { 1e-5 };
                let floor = FLOOR * (tau / 1e-5).powi(2);
                let last = if quick {
                    Check::Info { reference: TABLE5[2] }
                } else {
                    Check::Magnitude { reference: TABLE5[2] }
                };
                Preset::Spatial {
                    problem: "manufactured2d",
                    tau,
                    ns: vec![4, 8, 16],
                    t_final: 1.0,
                    errors: vec![rel(TABLE5[0]), Check::AtMost(floor), last],
                    min_rate: None,
                }
            }
            TableId::Fig2 => Preset::Drift {
                problem: "soliton1d",
                n: 1000,
                tau: 0.1,
                t_final: if quick { 20.0 } else { 200.0 },
                max_drift: MAX_DRIFT,
                p0: None,
            },
            TableId::Fig3 => Preset::Drift {
                problem: "periodic2d",
                n: 50,
                tau: 0.1,
                t_final: if quick { 20.0 } else { 200.0 },
                max_drift: MAX_DRIFT,
                p0: Some((114.59, 0.01)),
            },
        }
    }
}

/// Outcome of a `reproduce` run.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Comparison {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            passed: true,
        }
    }

    fn cell(&mut self, label: String, value: f64, check: Check) {
        let verdict = match check.passes(value) {
            Some(true) => "pass",
            Some(false) => {
                self.passed = false;
                "FAIL"
            }
            None => "info",
        };
        self.lines
            .push(format!("{label:<14} {:>13}  {:<22} {verdict}", sci(value), check.describe()));
    }
}

pub fn compare_convergence(report: &ConvergenceReport, preset: &Preset) -> Comparison {
    let mut cmp = Comparison::new();
    cmp.lines.push(format!("{:<14} {:>13}  {:<22} verdict", "resolution", "computed", "reference"));
    match preset {
        Preset::Temporal { errors, rate_band, .. } => {
            for (row, check) in report.rows.iter().zip(errors) {
                cmp.cell(format!("tau={}", row.resolution), row.error_inf, *check);
            }
            for row in &report.rows {
                if let Some(rate) = row.rate {
                    let ok = rate >= rate_band.0 && rate <= rate_band.1;
                    cmp.passed &= ok;
                    cmp.lines.push(format!(
                        "{:<14} {:>13.2}  [{}, {}]{:<12} {}",
                        format!("rate@{}", row.resolution),
                        rate,
                        rate_band.0,
                        rate_band.1,
                        "",
                        if ok { "pass" } else { "FAIL" }
                    ));
                }
            }
        }
        Preset::Spatial { errors, min_rate, .. } => {
            for (row, check) in report.rows.iter().zip(errors) {
                cmp.cell(format!("N={}", row.resolution), row.error_inf, *check);
            }
            if let Some((upto, min)) = *min_rate {
                for row in report.rows.iter().take(upto).skip(1) {
                    let rate = row.rate.unwrap_or(f64::NAN);
                    let ok = rate >= min;
                    cmp.passed &= ok;
                    cmp.lines.push(format!(
                        "{:<14} {:>13.2}  >= {:<19} {}",
                        format!("rate@N={}", row.resolution),
                        rate,
                        min,
                        if ok { "pass" } else { "FAIL" }
                    ));
                }
            }
        }
        Preset::Drift { .. } => {}
    }
    cmp
}

pub fn compare_drift(report: &DriftReport, preset: &Preset) -> Comparison {
    let mut cmp = Comparison::new();
    if let Preset::Drift { max_drift, p0, .. } = preset {
        cmp.cell("max drift".into(), report.max_relative_drift(), Check::AtMost(*max_drift));
        if let Some((reference, abs_tol)) = *p0 {
            cmp.cell(
                "P0".into(),
                report.p0,
                Check::Relative {
                    reference,
                    tol: abs_tol / reference,
                },
            );
        }
    }
    cmp
}

fn reproduce(a: &ReproduceArgs) -> Result<bool> {
    let preset = a.table.preset(a.quick);
    let settings = Settings::default();
    let out = a.output.out.as_deref();
    let cmp = match &preset {
        Preset::Temporal {
            problem, n, taus, t_final, ..
        } => {
            let report = temporal_convergence(&by_name(problem)?, *n, taus, *t_final, &settings)?;
            emit(&report, a.output.format, out)?;
            compare_convergence(&report, &preset)
        }
        Preset::Spatial {
            problem, tau, ns, t_final, ..
        } => {
            let report = spatial_convergence(&by_name(problem)?, *tau, ns, *t_final, &settings)?;
            emit(&report, a.output.format, out)?;
            compare_convergence(&report, &preset)
        }
        Preset::Drift {
            problem, n, tau, t_final, ..
        } => {
            let report = momentum_drift(&by_name(problem)?, *n, *tau, *t_final, DEFAULT_SAMPLE_EVERY, &settings)?;
            emit(&report, a.output.format, out)?;
            compare_drift(&report, &preset)
        }
    };
    let name = a.table.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    eprintln!("{name}{}", if a.quick { " (quick)" } else { "" });
    for line in &cmp.lines {
        eprintln!("  {line}");
    }
    eprintln!("{}", if cmp.passed { "all cells pass" } else { "some cells FAIL" });
    Ok(cmp.passed)
}

fn dispatch(spec: &RunSpec) -> Result<bool> {
    match spec {
        RunSpec::Run(a) => {
            let field = run_field(a)?;
            eprintln!(
                "{} N={} tau={} t={}: P0={:.12e} max drift={} max sweeps={}{}",
                field.problem,
                field.n,
                field.tau,
                field.t,
                field.p0,
                sci(field.max_relative_drift),
                field.max_iterations,
                field.error_inf.map(|e| format!(" error_inf={}", sci(e))).unwrap_or_default()
            );
            emit(&field, a.output.format, a.output.out.as_deref())?;
            Ok(true)
        }
        RunSpec::ConvergeTime(a) => {
            let report = temporal_convergence(&by_name(&a.problem)?, a.n, &a.taus, a.t_final, &a.solver.settings())?;
            emit(&report, a.output.format, a.output.out.as_deref())?;
            Ok(true)
        }
        RunSpec::ConvergeSpace(a) => {
            let report = spatial_convergence(&by_name(&a.problem)?, a.tau, &a.ns, a.t_final, &a.solver.settings())?;
            if let Some(note) = &report.meta.note {
                eprintln!("{note}");
            }
            emit(&report, a.output.format, a.output.out.as_deref())?;
            Ok(true)
        }
        RunSpec::Drift(a) => {
            let report = momentum_drift(
                &by_name(&a.problem)?,
                a.n,
                a.tau,
                a.t_final,
                a.sample_every,
                &a.solver.settings(),
            )?;
            eprintln!("P0={:.12e} max relative drift={}", report.p0, sci(report.max_relative_drift()));
            emit(&report, a.output.format, a.output.out.as_deref())?;
            Ok(true)
        }
        RunSpec::Reproduce(a) => reproduce(a),
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(spec: &RunSpec) -> u8 {
    match dispatch(spec) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_TOLERANCE,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_SOLVER
            }
        }
    }
}

/// Entry point shared by the binary: parse, run, map to an exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(spec) => execute(&spec),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            }
        }
    }
}
