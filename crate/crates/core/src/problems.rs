//! Benchmark problems: a 1D Rosenau-KdV soliton, a forced 2D problem with a
//! manufactured solution, and an unforced 2D periodic wave.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Dim, Grid, MeshFunction};
use crate::stepper::SpaceTimeFn;

pub const PROBLEM_NAMES: [&str; 3] = ["soliton1d", "manufactured2d", "periodic2d"];

#[derive(Clone)]
pub struct Problem {
    pub name: &'static str,
    pub dim: Dim,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub p: u32,
    pub initial: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub exact: Option<SpaceTimeFn>,
    pub source: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x_range", &self.x_range)
            .field("y_range", &self.y_range)
            .field("p", &self.p)
            .field("exact", &self.exact.is_some())
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Problem {
    /// Grid with `n` points on every active axis.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.dim, self.x_range, self.y_range, n, n)
    }

    pub fn sample_initial(&self, grid: &Grid) -> MeshFunction {
        MeshFunction::from_fn(grid, |x, y| (self.initial)(x, y))
    }

    pub fn sample_exact(&self, grid: &Grid, t: f64) -> Result<MeshFunction> {
        let exact = self.exact.as_ref().ok_or_else(|| Error::NoExactSolution(self.name.into()))?;
        Ok(MeshFunction::from_fn(grid, |x, y| exact(x, y, t)))
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }
}

/// Soliton constants `(amplitude, width factor, speed)`.
pub fn soliton_constants() -> (f64, f64, f64) {
    let r = 313f64.sqrt();
    let amplitude = -35.0 / 24.0 + 35.0 / 312.0 * r;
    let kappa = (-26.0 + 2.0 * r).sqrt() / 24.0;
    let speed = 0.5 + r / 26.0;
    (amplitude, kappa, speed)
}

/// `u_t + u_xxxxt + u_xxx + u_x + u u_x = 0` on `[-50, 50]` with its
/// travelling `sech^4` solution.
pub fn rkdv1d_soliton() -> Problem {
    let (amp, kappa, speed) = soliton_constants();
    let exact = move |x: f64, _y: f64, t: f64| {
        let s = 1.0 / (kappa * (x - speed * t)).cosh();
        amp * s * s * s * s
    };
    Problem {
        name: "soliton1d",
        dim: Dim::One,
        x_range: (-50.0, 50.0),
        y_range: (0.0, 1.0),
        p: 1,
        initial: Arc::new(move |x, y| exact(x, y, 0.0)),
        exact: Some(Arc::new(exact)),
        source: None,
    }
}

/// Forced 2D problem on `[0, 1]^2` with `p = 2` and exact solution
/// `sin(2 pi x) sin(2 pi y) exp(-t)`.
pub fn grkdv2d_manufactured() -> Problem {
    const P: i32 = 2;
    let exact = |x: f64, y: f64, t: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin() * (-t).exp();
    let source = |x: f64, y: f64, t: f64| {
        let (sx, sy) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
        let cx = (2.0 * PI * x).cos();
        let e = (-t).exp();
        let pi3 = PI * PI * PI;
        sx * sy * e * (-64.0 * pi3 * PI - 1.0) - 16.0 * pi3 * cx * sy * e
            + 2.0
                * PI
                * e
                * (2.0 * PI * (x + y)).sin()
                * (1.0 + sx.powi(P) * sy.powi(P) * (-(P as f64) * t).exp())
    };
    Problem {
        name: "manufactured2d",
        dim: Dim::Two,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        p: P as u32,
        initial: Arc::new(move |x, y| exact(x, y, 0.0)),
        exact: Some(Arc::new(exact)),
        source: Some(Arc::new(source)),
    }
}

/// Unforced 2D problem on `[0, 2 pi]^2`, `p = 2`, initial data
/// `0.1 (1 + sin(3x) sin(5y))`.
pub fn grkdv2d_periodic() -> Problem {
    Problem {
        name: "periodic2d",
        dim: Dim::Two,
        x_range: (0.0, 2.0 * PI),
        y_range: (0.0, 2.0 * PI),
        p: 2,
        initial: Arc::new(|x, y| 0.1 * (1.0 + (3.0 * x).sin() * (5.0 * y).sin())),
        exact: None,
        source: None,
    }
}

pub fn by_name(name: &str) -> Result<Problem> {
    match name {
        "soliton1d" => Ok(rkdv1d_soliton()),
        "manufactured2d" => Ok(grkdv2d_manufactured()),
        "periodic2d" => Ok(grkdv2d_periodic()),
        other => Err(Error::UnknownProblem(other.into())),
    }
}

/// Max-norm error against the exact solution at time `t`.
pub fn error_inf(u: &MeshFunction, problem: &Problem, t: f64) -> Result<f64> {
    let exact = problem.exact.as_ref().ok_or_else(|| Error::NoExactSolution(problem.name.into()))?;
    Ok(u.grid()
        .points()
        .map(|(i, x, y)| (u.values()[i] - exact(x, y, t)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::norm_h;
    use crate::spectral::Spectral;
    use crate::stepper::momentum;

    #[test]
    fn soliton_shape() {
        let pr = rkdv1d_soliton();
        let ex = pr.exact.as_ref().unwrap();
        // -35/24 + (35/312) sqrt(313), evaluated independently.
        assert!((ex(0.0, 0.0, 0.0) - 0.526_324_392_478_829).abs() < 1e-14);
        let (_, _, c) = soliton_constants();
        for (x, t) in [(1.0, 0.3), (-7.5, 2.0), (20.0, 10.0)] {
            assert!((ex(x, 0.0, t) - ex(x - c * t, 0.0, 0.0)).abs() < 1e-15);
        }
        assert!(ex(50.0, 0.0, 0.0) < 1e-6 && ex(-50.0, 0.0, 0.0) < 1e-6);
        assert_eq!((pr.p, pr.dim, pr.x_range), (1, Dim::One, (-50.0, 50.0)));
        assert!(!pr.has_source());
    }

    #[test]
    fn manufactured_shape() {
        let pr = grkdv2d_manufactured();
        let ex = pr.exact.as_ref().unwrap();
        for (x, y) in [(0.1, 0.7), (0.25, 0.25), (0.9, 0.3)] {
            let u0 = (pr.initial)(x, y);
            assert_eq!(u0, (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
            assert!((ex(x, y, 1.0) - u0 / std::f64::consts::E).abs() < 1e-15);
        }
        assert!(pr.has_source() && pr.p == 2);
    }

    #[test]
    fn periodic_initial_data() {
        let pr = grkdv2d_periodic();
        assert_eq!((pr.initial)(0.0, 0.0), 0.1);
        let g = pr.grid(50).unwrap();
        let u = pr.sample_initial(&g);
        let mean = u.values().iter().sum::<f64>() / g.len() as f64;
        assert!((mean - 0.1).abs() < 1e-15);
        let p0 = momentum(&Spectral::new(&g), &u).unwrap();
        // 0.01 pi^2 (5 + 34^2) from the Fourier coefficients of the data.
        assert!((p0 - 0.01 * PI * PI * 1161.0).abs() < 1e-9);
        assert!((p0 - 114.59).abs() < 0.01);
        assert!(pr.sample_exact(&g, 1.0).is_err());
    }

    #[test]
    fn error_inf_examples() {
        let pr = grkdv2d_manufactured();
        let g = pr.grid(16).unwrap();
        let u = pr.sample_exact(&g, 0.4).unwrap();
        assert_eq!(error_inf(&u, &pr, 0.4).unwrap(), 0.0);
        let shifted = u.map(|v| v + 1e-3);
        assert!((error_inf(&shifted, &pr, 0.4).unwrap() - 1e-3).abs() < 1e-15);
        let per = grkdv2d_periodic();
        assert!(matches!(
            error_inf(&per.sample_initial(&per.grid(8).unwrap()), &per, 0.0),
            Err(Error::NoExactSolution(_))
        ));
        assert!(norm_h(&u) > 0.0);
    }

    #[test]
    fn lookup_by_name() {
        for name in PROBLEM_NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert!(matches!(by_name("kdv"), Err(Error::UnknownProblem(_))));
    }
}
