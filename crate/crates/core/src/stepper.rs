//! Linearized Crank-Nicolson momentum-preserving time stepping.
//!
//! Each step solves for the midpoint value `U^{n+1/2}` of
//!
//! ```text
//! (I + A^2) (U^{n+1} - U^n) / tau + D(U_hat) U^{n+1/2} = g^{n+1/2}
//! ```
//!
//! where the nonlinear coefficient `U_hat` is `U^0` on the first step and the
//! extrapolation `(3 U^n - U^{n-1}) / 2` afterwards. The midpoint system is
//! solved by a fixed-point iteration that keeps the constant-coefficient part
//! `I + A^2 + tau/2 (B + L_h)` on the left, where it is diagonal in Fourier
//! space, and lags the variable-coefficient transport term.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{int_pow, norm_h, Grid, MeshFunction};
use crate::problems::Problem;
use crate::spectral::{OperatorSymbol, Spectral, SpectralTable, SymbolKind};

pub const DEFAULT_ITER_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Space-time function `g(x, y, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SchemeConfig {
    pub tau: f64,
    /// Power of the nonlinearity, `>= 1`.
    pub p: u32,
    /// Stop once successive iterates differ by less than this in max norm.
    pub iter_tol: f64,
    pub max_iter: usize,
    pub source: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for SchemeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeConfig")
            .field("tau", &self.tau)
            .field("p", &self.p)
            .field("iter_tol", &self.iter_tol)
            .field("max_iter", &self.max_iter)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl SchemeConfig {
    pub fn new(tau: f64, p: u32) -> Result<Self> {
        let cfg = Self {
            tau,
            p,
            iter_tol: DEFAULT_ITER_TOL,
            max_iter: DEFAULT_MAX_ITER,
            source: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration for `problem`: its nonlinearity power and source term.
    pub fn for_problem(problem: &Problem, tau: f64) -> Result<Self> {
        let mut cfg = Self::new(tau, problem.p)?;
        cfg.source = problem.source.clone();
        Ok(cfg)
    }

    pub fn with_tol(mut self, iter_tol: f64) -> Self {
        self.iter_tol = iter_tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_source(mut self, source: Option<SpaceTimeFn>) -> Self {
        self.source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if self.p < 1 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        if self.iter_tol.is_nan() || self.iter_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "iteration tolerance must be positive, got {}",
                self.iter_tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Two-level history of the three-level scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub n: usize,
    /// `U^{n-1}`; absent until the bootstrap step has run.
    pub prev: Option<MeshFunction>,
    pub curr: MeshFunction,
    /// Momentum of the initial data.
    pub p0: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationReport {
    pub iterations: usize,
    /// Max-norm difference of the last two iterates.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub iterations_used: usize,
    pub final_residual: f64,
    /// Momentum of the new time level.
    pub momentum: f64,
}

/// Discrete momentum `||U||_h^2 + |U|_{2,h}^2`.
pub fn momentum(spectral: &Spectral, u: &MeshFunction) -> Result<f64> {
    let a = spectral.seminorm_2h(u)?;
    let l2 = norm_h(u);
    Ok(l2 * l2 + a * a)
}

/// Symbol of `I + A^2 + tau/2 (B + L_h)`. Its real part is `1 + A^2 >= 1`
/// and the rest is imaginary, so every entry is invertible.
pub fn timestep_symbol(table: &SpectralTable, tau: f64) -> OperatorSymbol {
    OperatorSymbol::from_fn(table, SymbolKind::TimeStep, |j, k| {
        let a = table.lam_d2x[j] + table.lam_d2y[k];
        let skew = table.lam_d1x[j] * a + table.lam_d1x[j] + table.lam_d1y[k];
        Complex64::new(1.0 + a * a, 0.0) + skew * (0.5 * tau)
    })
}

/// Fixed-step integrator for one grid and configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    spectral: Spectral,
    cfg: SchemeConfig,
    /// `1 / m` with `m` the time-step symbol.
    lhs_inv: Vec<Complex64>,
    /// Symbol of `I + A^2`.
    mass: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Grid, cfg: SchemeConfig) -> Result<Self> {
        Self::with_spectral(Spectral::new(grid), cfg)
    }

    pub fn with_spectral(spectral: Spectral, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::build(spectral, cfg))
    }

    fn build(spectral: Spectral, cfg: SchemeConfig) -> Self {
        let m = timestep_symbol(spectral.table(), cfg.tau);
        let lhs_inv = m.values().iter().map(|v| v.inv()).collect();
        let mass = spectral.laplacian().values().iter().map(|a| 1.0 + a.re * a.re).collect();
        Self {
            spectral,
            cfg,
            lhs_inv,
            mass,
        }
    }

    /// The same scheme run backwards in time (`tau -> -tau`).
    pub fn reversed(&self) -> Self {
        let mut cfg = self.cfg.clone();
        cfg.tau = -cfg.tau;
        Self::build(self.spectral.clone(), cfg)
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn momentum(&self, u: &MeshFunction) -> Result<f64> {
        momentum(&self.spectral, u)
    }

    /// Solves the midpoint system for `U^{n+1/2}` given `U^n`, the
    /// extrapolated coefficient `U_hat` and the source time `t_half`.
    ///
    /// Starts from `U^n` and iterates until two successive iterates differ by
    /// less than `iter_tol` in max norm.
    pub fn solve_halfstep(
        &self,
        u_n: &MeshFunction,
        u_hat: &MeshFunction,
        t_half: f64,
    ) -> Result<(MeshFunction, IterationReport)> {
        let grid = *self.grid();
        if *u_n.grid() != grid || *u_hat.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let sp = &self.spectral;
        let lh = sp.transport().values();
        let tau = self.cfg.tau;
        let coef = tau / (2.0 * (self.cfg.p as f64 + 2.0));

        let u_n_spec = sp.forward(u_n.values());
        let source_spec = self.cfg.source.as_ref().map(|g| {
            let samples: Vec<f64> = grid.points().map(|(_, x, y)| g(x, y, t_half)).collect();
            sp.forward(&samples)
        });
        let rhs: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let mut r = u_n_spec[i] * self.mass[i];
                if let Some(gs) = &source_spec {
                    r += gs[i] * (0.5 * tau);
                }
                r * self.lhs_inv[i]
            })
            .collect();
        let weight: Vec<f64> = u_hat.values().iter().map(|&v| int_pow(v, self.cfg.p)).collect();

        let mut cur = u_n.values().to_vec();
        let mut cur_spec = u_n_spec;
        let mut residual = f64::INFINITY;
        for sweep in 1..=self.cfg.max_iter {
            let lh_cur = sp.inverse(cur_spec.iter().zip(lh).map(|(c, s)| c * s).collect())?;
            let qa: Vec<f64> = weight.iter().zip(&lh_cur).map(|(w, v)| w * v).collect();
            let qb: Vec<f64> = weight.iter().zip(&cur).map(|(w, v)| w * v).collect();
            let (fa, fb) = (sp.forward(&qa), sp.forward(&qb));
            let next_spec: Vec<Complex64> = (0..grid.len())
                .map(|i| rhs[i] - (fa[i] + lh[i] * fb[i]) * self.lhs_inv[i] * coef)
                .collect();
            let next = sp.inverse(next_spec.clone())?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(sweep));
            }
            residual = next.iter().zip(&cur).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            cur = next;
            cur_spec = next_spec;
            if residual < self.cfg.iter_tol {
                return Ok((
                    MeshFunction::from_raw(grid, cur),
                    IterationReport {
                        iterations: sweep,
                        residual,
                    },
                ));
            }
        }
        Err(Error::NonConvergence {
            iterations: self.cfg.max_iter,
            residual,
        })
    }

    /// State at `t = 0` holding only the initial data.
    pub fn start(&self, u0: MeshFunction) -> Result<StepState> {
        if *u0.grid() != *self.grid() {
            return Err(Error::GridMismatch);
        }
        let p0 = self.momentum(&u0)?;
        Ok(StepState {
            n: 0,
            prev: None,
            curr: u0,
            p0,
            t: 0.0,
        })
    }

    fn finish(
        &self,
        state: &StepState,
        u_half: MeshFunction,
        report: IterationReport,
    ) -> Result<(StepState, StepDiagnostics)> {
        let next = u_half.lin_comb(2.0, &state.curr, -1.0)?;
        let momentum = self.momentum(&next)?;
        let n = state.n + 1;
        Ok((
            StepState {
                n,
                prev: Some(state.curr.clone()),
                curr: next,
                p0: state.p0,
                t: n as f64 * self.cfg.tau,
            },
            StepDiagnostics {
                iterations_used: report.iterations,
                final_residual: report.residual,
                momentum,
            },
        ))
    }

    /// Bootstrap step: the nonlinear coefficient is frozen at `U^0`.
    pub fn first_step(&self, u0: &MeshFunction) -> Result<(StepState, StepDiagnostics)> {
        let state = self.start(u0.clone())?;
        let (half, report) = self.solve_halfstep(u0, u0, 0.5 * self.cfg.tau)?;
        self.finish(&state, half, report)
    }

    /// Three-level step with the extrapolated coefficient `(3 U^n - U^{n-1}) / 2`.
    pub fn step(&self, state: &StepState) -> Result<(StepState, StepDiagnostics)> {
        let prev = state.prev.as_ref().ok_or(Error::MissingHistory)?;
        let u_hat = state.curr.lin_comb(1.5, prev, -0.5)?;
        let t_half = (state.n as f64 + 0.5) * self.cfg.tau;
        let (half, report) = self.solve_halfstep(&state.curr, &u_hat, t_half)?;
        self.finish(state, half, report)
    }

    /// Runs [`Stepper::first_step`] or [`Stepper::step`] as appropriate.
    pub fn advance(&self, state: &StepState) -> Result<(StepState, StepDiagnostics)> {
        match state.prev {
            None => {
                let (mut next, diag) = self.first_step(&state.curr)?;
                next.p0 = state.p0;
                Ok((next, diag))
            }
            Some(_) => self.step(state),
        }
    }
}

/// Number of steps `M` with `M tau = t_final`.
pub fn steps_for(t_final: f64, tau: f64) -> Result<usize> {
    let m = (t_final / tau).round();
    if m.is_nan() || m < 1.0 || (m * tau - t_final).abs() > 1e-12 * t_final.abs().max(1.0) {
        return Err(Error::NotMultipleOfStep { t_final, tau });
    }
    Ok(m as usize)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: StepState,
    /// `(t_n, P^n)` for every level, starting at `t = 0`.
    pub momentum: Vec<(f64, f64)>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl RunSummary {
    /// `max_n |P^n - P^0| / P^0`.
    pub fn max_relative_drift(&self) -> f64 {
        let p0 = self.final_state.p0;
        self.momentum
            .iter()
            .fold(0.0f64, |m, &(_, p)| m.max((p - p0).abs() / p0.abs()))
    }
}

/// Integrates `problem` on an `n`-point (per axis) grid up to `t_final`,
/// calling `observer` after every step.
pub fn run(
    problem: &Problem,
    n: usize,
    cfg: SchemeConfig,
    t_final: f64,
    observer: &mut dyn FnMut(&StepState, &StepDiagnostics),
) -> Result<RunSummary> {
    let grid = problem.grid(n)?;
    let stepper = Stepper::new(&grid, cfg)?;
    run_with(&stepper, problem.sample_initial(&grid), t_final, observer)
}

/// Same as [`run`] with a prebuilt stepper and initial data.
pub fn run_with(
    stepper: &Stepper,
    u0: MeshFunction,
    t_final: f64,
    observer: &mut dyn FnMut(&StepState, &StepDiagnostics),
) -> Result<RunSummary> {
    let steps = steps_for(t_final, stepper.config().tau)?;
    let mut state = stepper.start(u0)?;
    let mut momentum = Vec::with_capacity(steps + 1);
    let mut diagnostics = Vec::with_capacity(steps);
    momentum.push((0.0, state.p0));
    for _ in 0..steps {
        let (next, diag) = stepper.advance(&state)?;
        observer(&next, &diag);
        momentum.push((next.t, diag.momentum));
        diagnostics.push(diag);
        state = next;
    }
    Ok(RunSummary {
        final_state: state,
        momentum,
        diagnostics,
    })
}
