//! Convergence studies, momentum-drift runs and report output.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{error_inf, Problem};
use crate::stepper::{run, steps_for, SchemeConfig, Stepper, DEFAULT_ITER_TOL, DEFAULT_MAX_ITER};

pub const DEFAULT_SAMPLE_EVERY: usize = 10;

/// Solver knobs shared by every row of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub iter_tol: f64,
    pub max_iter: usize,
    /// Run independent rows concurrently when the `parallel` feature is on.
    pub parallel: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            iter_tol: DEFAULT_ITER_TOL,
            max_iter: DEFAULT_MAX_ITER,
            parallel: true,
        }
    }
}

impl Settings {
    fn config(&self, problem: &Problem, tau: f64) -> Result<SchemeConfig> {
        let cfg = SchemeConfig::for_problem(problem, tau)?
            .with_tol(self.iter_tol)
            .with_max_iter(self.max_iter);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyAxis {
    Temporal,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `tau` for temporal studies, `N` for spatial ones.
    pub resolution: f64,
    pub error_inf: f64,
    pub rate: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub problem: String,
    pub t_final: f64,
    /// Fixed grid size of a temporal study.
    pub n: Option<usize>,
    /// Fixed step of a spatial study.
    pub tau: Option<f64>,
    pub iter_tol: f64,
    pub max_iter: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub axis: StudyAxis,
    pub meta: ReportMeta,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error_inf).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSample {
    pub t: f64,
    pub momentum: f64,
    /// `P^n - P^0`.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub meta: ReportMeta,
    pub p0: f64,
    pub samples: Vec<DriftSample>,
}

impl DriftReport {
    /// Largest `|P^n - P^0| / P^0` over the samples.
    pub fn max_relative_drift(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0f64, |m, s| m.max(s.drift.abs() / self.p0.abs()))
    }
}

/// `log(e_prev / e) / log(r / r_prev)`; undefined if either error is zero.
pub fn observed_rate(e_prev: f64, e: f64, r_prev: f64, r: f64) -> Option<f64> {
    if e_prev > 0.0 && e > 0.0 {
        Some((e_prev / e).ln() / (r / r_prev).ln())
    } else {
        None
    }
}

fn attach_rates(rows: &mut [ConvergenceRow], axis: StudyAxis) {
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        rows[i].rate = match axis {
            // Halving tau counts as one refinement, so the ratio is prev/curr.
            StudyAxis::Temporal => observed_rate(a.error_inf, b.error_inf, b.resolution, a.resolution),
            StudyAxis::Spatial => observed_rate(a.error_inf, b.error_inf, a.resolution, b.resolution),
        };
    }
}

fn map_rows<T, F>(items: &[T], parallel: bool, f: F) -> Vec<Result<ConvergenceRow>>
where
    T: Sync,
    F: Fn(&T) -> Result<ConvergenceRow> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(&f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

fn collect_rows(results: Vec<Result<ConvergenceRow>>, resolutions: &[f64]) -> Result<Vec<ConvergenceRow>> {
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Row {
                index,
                resolution: resolutions[index],
                source: Box::new(e),
            })
        })
        .collect()
}

// The wasm32 target has no clock; rows there report zero seconds.
#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

fn timed_error(problem: &Problem, n: usize, cfg: SchemeConfig, t_final: f64) -> Result<(f64, f64)> {
    let (err, secs) = timed(|| -> Result<f64> {
        let summary = run(problem, n, cfg, t_final, &mut |_, _| {})?;
        error_inf(&summary.final_state.curr, problem, t_final)
    });
    Ok((err?, secs))
}

fn meta(problem: &Problem, t_final: f64, settings: &Settings) -> ReportMeta {
    ReportMeta {
        problem: problem.name.to_string(),
        t_final,
        n: None,
        tau: None,
        iter_tol: settings.iter_tol,
        max_iter: settings.max_iter,
        note: None,
    }
}

/// Errors at `t_final` for each step size on a fixed `n`-point grid.
pub fn temporal_convergence(
    problem: &Problem,
    n: usize,
    taus: &[f64],
    t_final: f64,
    settings: &Settings,
) -> Result<ConvergenceReport> {
    if problem.exact.is_none() {
        return Err(Error::NoExactSolution(problem.name.into()));
    }
    if taus.is_empty() {
        return Err(Error::InvalidSweep("no time steps given".into()));
    }
    if taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSweep("time steps must be strictly decreasing".into()));
    }
    problem.grid(n)?;
    for &tau in taus {
        settings.config(problem, tau)?;
        steps_for(t_final, tau)?;
    }

    let results = map_rows(taus, settings.parallel, |&tau| {
        let (error_inf, wall_seconds) = timed_error(problem, n, settings.config(problem, tau)?, t_final)?;
        Ok(ConvergenceRow {
            resolution: tau,
            error_inf,
            rate: None,
            wall_seconds,
        })
    });
    let mut rows = collect_rows(results, taus)?;
    attach_rates(&mut rows, StudyAxis::Temporal);
    Ok(ConvergenceReport {
        axis: StudyAxis::Temporal,
        meta: ReportMeta {
            n: Some(n),
            ..meta(problem, t_final, settings)
        },
        rows,
    })
}

/// Errors at `t_final` for each grid size with a fixed step.
///
/// Rows whose error stops decreasing are flagged in the report note: the
/// spatial error has fallen below the time discretization error there.
pub fn spatial_convergence(
    problem: &Problem,
    tau: f64,
    ns: &[usize],
    t_final: f64,
    settings: &Settings,
) -> Result<ConvergenceReport> {
    if problem.exact.is_none() {
        return Err(Error::NoExactSolution(problem.name.into()));
    }
    if ns.is_empty() {
        return Err(Error::InvalidSweep("no grid sizes given".into()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep("grid sizes must be strictly increasing".into()));
    }
    for &n in ns {
        problem.grid(n)?;
    }
    settings.config(problem, tau)?;
    steps_for(t_final, tau)?;

    let results = map_rows(ns, settings.parallel, |&n| {
        let (error_inf, wall_seconds) = timed_error(problem, n, settings.config(problem, tau)?, t_final)?;
        Ok(ConvergenceRow {
            resolution: n as f64,
            error_inf,
            rate: None,
            wall_seconds,
        })
    });
    let resolutions: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut rows = collect_rows(results, &resolutions)?;
    attach_rates(&mut rows, StudyAxis::Spatial);
    let floor = rows
        .windows(2)
        .position(|w| w[1].error_inf > 0.5 * w[0].error_inf)
        .map(|i| rows[i + 1].resolution as usize);
    Ok(ConvergenceReport {
        axis: StudyAxis::Spatial,
        meta: ReportMeta {
            tau: Some(tau),
            note: floor.map(|n| format!("error floor from N = {n}: time discretization error dominates")),
            ..meta(problem, t_final, settings)
        },
        rows,
    })
}

/// Momentum `P^n` sampled every `sample_every` steps, including `t = 0` and
/// the final level.
pub fn momentum_drift(
    problem: &Problem,
    n: usize,
    tau: f64,
    t_final: f64,
    sample_every: usize,
    settings: &Settings,
) -> Result<DriftReport> {
    if problem.has_source() {
        return Err(Error::ForcedProblem(problem.name.into()));
    }
    if sample_every == 0 {
        return Err(Error::InvalidSweep("sample interval must be at least one step".into()));
    }
    let steps = steps_for(t_final, tau)?;
    let grid = problem.grid(n)?;
    let stepper = Stepper::new(&grid, settings.config(problem, tau)?)?;
    let mut state = stepper.start(problem.sample_initial(&grid))?;
    let p0 = state.p0;
    let mut samples = vec![DriftSample {
        t: 0.0,
        momentum: p0,
        drift: 0.0,
    }];
    for _ in 0..steps {
        let (next, diag) = stepper.advance(&state)?;
        if next.n % sample_every == 0 || next.n == steps {
            samples.push(DriftSample {
                t: next.t,
                momentum: diag.momentum,
                drift: diag.momentum - p0,
            });
        }
        state = next;
    }
    Ok(DriftReport {
        meta: ReportMeta {
            n: Some(n),
            tau: Some(tau),
            ..meta(problem, t_final, settings)
        },
        p0,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Six significant digits with a two-digit exponent, e.g. `2.80010e-05`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Anything [`emit`] can write.
pub trait Emit: Serialize {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;
}

fn format_resolution(axis: StudyAxis, r: f64) -> String {
    match axis {
        StudyAxis::Spatial => format!("{}", r as usize),
        StudyAxis::Temporal => format!("{r}"),
    }
}

impl Emit for ConvergenceReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["resolution", "error_inf", "rate", "wall_seconds"])?;
        for row in &self.rows {
            w.write_record([
                format_resolution(self.axis, row.resolution),
                sci(row.error_inf),
                row.rate.map(|r| format!("{r:.2}")).unwrap_or_default(),
                format!("{:.3}", row.wall_seconds),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl Emit for DriftReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "momentum", "drift"])?;
        for s in &self.samples {
            w.write_record([
                format!("{}", (s.t * 1e9).round() / 1e9),
                format!("{:.15e}", s.momentum),
                sci(s.drift),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Renders `report` into a string.
pub fn render<R: Emit>(report: &R, format: Format) -> Result<String> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => report.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, report)?;
            buf.push(b'\n');
        }
    }
    Ok(String::from_utf8(buf).expect("reports are valid UTF-8"))
}

/// Writes `report` to `path`, or to stdout when `path` is `None`.
pub fn emit<R: Emit>(report: &R, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(report, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
