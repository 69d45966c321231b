//! Periodic collocation grids, mesh functions and the finite-difference
//! norms built on them.
//!
//! Values are stored with the `x` index varying fastest, so a 2D mesh
//! function is the column-stacked `N1 x N2` matrix of samples. A 1D problem
//! is a 2D grid with a single `y` row (`N2 = 1`, `h2 = 1`); every `y`
//! operator then acts as the identity or as zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Uniform periodic tensor grid on `[x_l, x_r) x [y_l, y_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: Dim,
    n1: usize,
    n2: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    h1: f64,
    h2: f64,
    mu1: f64,
    mu2: f64,
}

fn check_axis(n: usize, range: (f64, f64)) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddSize(n));
    }
    if n < 4 {
        return Err(Error::SizeTooSmall(n));
    }
    if !(range.1 - range.0).is_finite() || range.1 <= range.0 {
        return Err(Error::EmptyRange(range.0, range.1));
    }
    Ok(())
}

impl Grid {
    /// Builds a grid. For `Dim::One` the `y` arguments are ignored.
    pub fn new(
        dim: Dim,
        x_range: (f64, f64),
        y_range: (f64, f64),
        n1: usize,
        n2: usize,
    ) -> Result<Self> {
        check_axis(n1, x_range)?;
        let l1 = x_range.1 - x_range.0;
        let (n2, y_range, h2, mu2) = match dim {
            Dim::One => (1, (0.0, 1.0), 1.0, 0.0),
            Dim::Two => {
                check_axis(n2, y_range)?;
                let l2 = y_range.1 - y_range.0;
                (n2, y_range, l2 / n2 as f64, 2.0 * PI / l2)
            }
        };
        Ok(Self {
            dim,
            n1,
            n2,
            x_range,
            y_range,
            h1: l1 / n1 as f64,
            h2,
            mu1: 2.0 * PI / l1,
            mu2,
        })
    }

    pub fn new_1d(x_range: (f64, f64), n: usize) -> Result<Self> {
        Self::new(Dim::One, x_range, (0.0, 1.0), n, 1)
    }

    pub fn new_2d(x_range: (f64, f64), y_range: (f64, f64), n1: usize, n2: usize) -> Result<Self> {
        Self::new(Dim::Two, x_range, y_range, n1, n2)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Total number of collocation points.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// Quadrature weight `h1 * h2` (just `h1` in 1D).
    pub fn cell_area(&self) -> f64 {
        self.h1 * self.h2
    }

    pub fn is_active(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => true,
            Axis::Y => self.dim == Dim::Two,
        }
    }

    pub fn x(&self, j1: usize) -> f64 {
        self.x_range.0 + j1 as f64 * self.h1
    }

    /// `y` coordinate of row `j2`; always 0 in 1D.
    pub fn y(&self, j2: usize) -> f64 {
        match self.dim {
            Dim::One => 0.0,
            Dim::Two => self.y_range.0 + j2 as f64 * self.h2,
        }
    }

    /// Flat index of `(j1, j2)` with periodic wraparound.
    pub fn index(&self, j1: isize, j2: isize) -> usize {
        let i = j1.rem_euclid(self.n1 as isize) as usize;
        let k = j2.rem_euclid(self.n2 as isize) as usize;
        i + self.n1 * k
    }

    /// Iterates `(flat index, x, y)` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.n2).flat_map(move |k| {
            (0..self.n1).map(move |j| (j + self.n1 * k, self.x(j), self.y(k)))
        })
    }
}

/// Real samples on a [`Grid`], immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl MeshFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_raw(*grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(*grid, vec![c; grid.len()])
    }

    /// Samples `f(x, y)` at every collocation point.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.points().map(|(_, x, y)| f(x, y)).collect();
        Self::from_raw(*grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Periodic access: indices are taken modulo `N1` and `N2`.
    pub fn at(&self, j1: isize, j2: isize) -> f64 {
        self.values[self.grid.index(j1, j2)]
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip_with(other, |u, v| a * u + b * v)
    }

    /// Elementwise integer power by repeated multiplication.
    pub fn powi(&self, p: u32) -> Self {
        self.map(|v| int_pow(v, p))
    }

    /// Grid-weighted sum `h1 h2 sum(U)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }
}

/// `v^p` by repeated multiplication (`p` is always small).
pub(crate) fn int_pow(v: f64, p: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..p {
        acc *= v;
    }
    acc
}

/// Discrete inner product `h1 h2 sum U V`.
pub fn inner(u: &MeshFunction, v: &MeshFunction) -> Result<f64> {
    u.check_same_grid(v)?;
    let s: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(u.grid.cell_area() * s)
}

pub fn norm_h(u: &MeshFunction) -> f64 {
    let s: f64 = u.values.iter().map(|a| a * a).sum();
    (u.grid.cell_area() * s).sqrt()
}

pub fn norm_inf(u: &MeshFunction) -> f64 {
    u.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn shift_diff(u: &MeshFunction, axis: Axis, forward: bool) -> Result<MeshFunction> {
    let g = &u.grid;
    if !g.is_active(axis) {
        return Err(Error::InactiveAxis(axis));
    }
    let (d1, d2, h) = match axis {
        Axis::X => (1, 0, g.h1),
        Axis::Y => (0, 1, g.h2),
    };
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.n2 as isize {
        for j in 0..g.n1 as isize {
            let here = u.at(j, k);
            let d = if forward {
                u.at(j + d1, k + d2) - here
            } else {
                here - u.at(j - d1, k - d2)
            };
            out.push(d / h);
        }
    }
    Ok(MeshFunction::from_raw(*g, out))
}

/// Periodic forward difference along `axis`.
pub fn fd_diff_forward(u: &MeshFunction, axis: Axis) -> Result<MeshFunction> {
    shift_diff(u, axis, true)
}

/// Periodic backward difference along `axis`.
pub fn fd_diff_backward(u: &MeshFunction, axis: Axis) -> Result<MeshFunction> {
    shift_diff(u, axis, false)
}

/// Periodic 3-point (1D) or 5-point (2D) Laplacian.
pub fn fd_laplacian(u: &MeshFunction) -> MeshFunction {
    let g = &u.grid;
    let (ih1, ih2) = (1.0 / (g.h1 * g.h1), 1.0 / (g.h2 * g.h2));
    let two_d = g.dim == Dim::Two;
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.n2 as isize {
        for j in 0..g.n1 as isize {
            let c = u.at(j, k);
            let mut v = (u.at(j + 1, k) - 2.0 * c + u.at(j - 1, k)) * ih1;
            if two_d {
                v += (u.at(j, k + 1) - 2.0 * c + u.at(j, k - 1)) * ih2;
            }
            out.push(v);
        }
    }
    MeshFunction::from_raw(*g, out)
}

/// `||grad_h U||_h`, built from forward differences.
pub fn fd_gradient_norm(u: &MeshFunction) -> f64 {
    let dx = norm_h(&fd_diff_forward(u, Axis::X).expect("x is always active"));
    let dy = match fd_diff_forward(u, Axis::Y) {
        Ok(d) => norm_h(&d),
        Err(_) => 0.0,
    };
    (dx * dx + dy * dy).sqrt()
}

pub fn fd_laplacian_norm(u: &MeshFunction) -> f64 {
    norm_h(&fd_laplacian(u))
}

/// Discrete `H^2` norm.
pub fn norm_h2(u: &MeshFunction) -> f64 {
    let (a, b, c) = (norm_h(u), fd_gradient_norm(u), fd_laplacian_norm(u));
    (a * a + b * b + c * c).sqrt()
}
