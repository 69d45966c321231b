//! Browser bindings: an interactive simulation, the eigenvalue chains behind
//! the semi-norm inequalities, and a small temporal convergence study.

use wasm_bindgen::prelude::*;

use rkdv::experiments::{temporal_convergence, Settings};
use rkdv::problems::{by_name, error_inf, Problem};
use rkdv::{Dim, Grid, SchemeConfig, SpectralTable, StepState, Stepper};

fn js(e: rkdv::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Simulation {
    problem: Problem,
    stepper: Stepper,
    state: StepState,
    max_drift: f64,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, n: usize, tau: f64) -> Result<Simulation, JsError> {
        let problem = by_name(problem).map_err(js)?;
        let grid = problem.grid(n).map_err(js)?;
        let stepper = Stepper::new(&grid, SchemeConfig::for_problem(&problem, tau).map_err(js)?).map_err(js)?;
        let state = stepper.start(problem.sample_initial(&grid)).map_err(js)?;
        Ok(Simulation {
            problem,
            stepper,
            state,
            max_drift: 0.0,
        })
    }

    /// Takes `steps` time steps.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        for _ in 0..steps {
            let (next, diag) = self.stepper.advance(&self.state).map_err(js)?;
            let drift = (diag.momentum - next.p0).abs() / next.p0.abs();
            self.max_drift = self.max_drift.max(drift);
            self.state = next;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps(&self) -> usize {
        self.state.n
    }

    pub fn n1(&self) -> usize {
        self.stepper.grid().n1()
    }

    pub fn n2(&self) -> usize {
        self.stepper.grid().n2()
    }

    pub fn is_2d(&self) -> bool {
        self.stepper.grid().dim() == Dim::Two
    }

    pub fn x_range(&self) -> Vec<f64> {
        let (a, b) = self.stepper.grid().x_range();
        vec![a, b]
    }

    /// Current values in storage order (x fastest).
    pub fn values(&self) -> Vec<f64> {
        self.state.curr.values().to_vec()
    }

    /// Exact solution at the current time, empty if the problem has none.
    pub fn exact(&self) -> Vec<f64> {
        self.problem
            .sample_exact(self.stepper.grid(), self.state.t)
            .map(|u| u.into_values())
            .unwrap_or_default()
    }

    pub fn momentum(&self) -> Result<f64, JsError> {
        self.stepper.momentum(&self.state.curr).map_err(js)
    }

    pub fn initial_momentum(&self) -> f64 {
        self.state.p0
    }

    /// Largest relative momentum change seen so far.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Max-norm error, or NaN when there is no exact solution.
    pub fn error_inf(&self) -> f64 {
        error_inf(&self.state.curr, &self.problem, self.state.t).unwrap_or(f64::NAN)
    }
}

/// The four eigenvalue sequences of the chain
/// `-(4/pi^2) lam_{D1}^2 <= -(4/pi^2) lam_{D2} <= -lam_B <= -lam_{D2}`
/// on an `n`-point grid of the given length, concatenated.
#[wasm_bindgen]
pub fn eigen_chain(n: usize, length: f64) -> Result<Vec<f64>, JsError> {
    let grid = Grid::new_1d((0.0, length), n).map_err(js)?;
    let t = SpectralTable::new(&grid);
    let c = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut out = Vec::with_capacity(4 * n);
    out.extend(t.lam_d1x.iter().map(|l| c * l.im * l.im));
    out.extend(t.lam_d2x.iter().map(|l| -c * l));
    out.extend(t.lam_b1.iter().map(|l| -l));
    out.extend(t.lam_d2x.iter().map(|l| -l));
    Ok(out)
}

/// Errors at `t_final` for each step size; rates can be read off pairs.
#[wasm_bindgen]
pub fn temporal_errors(problem: &str, n: usize, taus: Vec<f64>, t_final: f64) -> Result<Vec<f64>, JsError> {
    let problem = by_name(problem).map_err(js)?;
    let settings = Settings {
        parallel: false,
        ..Settings::default()
    };
    let report = temporal_convergence(&problem, n, &taus, t_final, &settings).map_err(js)?;
    Ok(report.errors())
}
