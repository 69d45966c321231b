//! Dense-matrix reference operators for small grids.
//!
//! Builds `F^H diag(lambda) F` explicitly per axis and assembles 2D operators
//! with Kronecker products in the column-stacked layout. Only meant for
//! checking the transform-based path; sizes are capped at 64 points.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SpectralTable;
use crate::error::{Error, Result};
use crate::mesh::{Grid, MeshFunction};

pub const MAX_ORACLE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseOperator {
    D1x,
    D2x,
    D1y,
    D2y,
    B1,
    B2,
    /// Spectral Laplacian `A`.
    A,
    A2,
    /// `I (x) D3x + D2y (x) D1x` with `D3x = D1x D2x`.
    B,
    Lh,
    /// `I (x) B1 + B2 (x) I`, the 5-point Laplacian.
    FdLaplacian,
}

/// Unitary DFT matrix `F_{jk} = exp(-2 pi i jk / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        let theta = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
        Complex64::from_polar(s, theta)
    })
}

/// Real part of `F^H diag(lams) F`.
pub fn diagonalized(lams: &[Complex64]) -> DMatrix<f64> {
    let f = dft_matrix(lams.len());
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lams));
    let m = f.adjoint() * d * f;
    m.map(|c| c.re)
}

fn real_eigs(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Explicit periodic second-difference matrix `B_r` of size `n`.
pub fn second_difference_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if n == 1 {
        return m;
    }
    let w = 1.0 / (h * h);
    for i in 0..n {
        m[(i, i)] -= 2.0 * w;
        m[(i, (i + 1) % n)] += w;
        m[(i, (i + n - 1) % n)] += w;
    }
    m
}

fn guard(grid: &Grid) -> Result<()> {
    if grid.len() > MAX_ORACLE_POINTS {
        return Err(Error::OracleTooLarge(grid.len()));
    }
    Ok(())
}

/// Dense matrix of `op` acting on column-stacked mesh functions.
pub fn dense_oracle(grid: &Grid, op: DenseOperator) -> Result<DMatrix<f64>> {
    guard(grid)?;
    let t = SpectralTable::new(grid);
    let (n1, n2) = (grid.n1(), grid.n2());
    let ix = DMatrix::<f64>::identity(n1, n1);
    let iy = DMatrix::<f64>::identity(n2, n2);
    let d1x = diagonalized(&t.lam_d1x);
    let d2x = diagonalized(&real_eigs(&t.lam_d2x));
    let d1y = diagonalized(&t.lam_d1y);
    let d2y = diagonalized(&real_eigs(&t.lam_d2y));
    let on_x = |m: &DMatrix<f64>| iy.kronecker(m);
    let on_y = |m: &DMatrix<f64>| m.kronecker(&ix);
    let a = on_x(&d2x) + on_y(&d2y);
    Ok(match op {
        DenseOperator::D1x => d1x,
        DenseOperator::D2x => d2x,
        DenseOperator::D1y => d1y,
        DenseOperator::D2y => d2y,
        DenseOperator::B1 => diagonalized(&real_eigs(&t.lam_b1)),
        DenseOperator::B2 => diagonalized(&real_eigs(&t.lam_b2)),
        DenseOperator::A2 => &a * &a,
        DenseOperator::A => a,
        DenseOperator::B => on_x(&(&d1x * &d2x)) + d2y.kronecker(&d1x),
        DenseOperator::Lh => on_x(&d1x) + on_y(&d1y),
        DenseOperator::FdLaplacian => {
            on_x(&second_difference_matrix(n1, grid.h1()))
                + on_y(&second_difference_matrix(n2, grid.h2()))
        }
    })
}

/// Dense `D(U) = B + L_h + (diag(U^p) L_h + L_h diag(U^p)) / (p + 2)`.
pub fn dense_d(u_hat: &MeshFunction, p: u32) -> Result<DMatrix<f64>> {
    let grid = u_hat.grid();
    let b = dense_oracle(grid, DenseOperator::B)?;
    let lh = dense_oracle(grid, DenseOperator::Lh)?;
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        grid.len(),
        u_hat.values().iter().map(|v| v.powi(p as i32)),
    ));
    let c = 1.0 / (p as f64 + 2.0);
    Ok(&b + &lh + (&w * &lh + &lh * &w) * c)
}

/// Matrix-vector product returning a mesh function on `u`'s grid.
pub fn apply_dense(m: &DMatrix<f64>, u: &MeshFunction) -> MeshFunction {
    let v = m * nalgebra::DVector::from_column_slice(u.values());
    MeshFunction::from_raw(*u.grid(), v.iter().copied().collect())
}
