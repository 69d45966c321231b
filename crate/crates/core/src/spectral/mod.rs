//! Fourier pseudo-spectral differentiation.
//!
//! Every spectral differentiation matrix on a periodic grid is diagonalized
//! by the discrete Fourier transform, so operators are stored as their
//! eigenvalues ("symbols") and applied as `ifft2(symbol * fft2(u))`. The
//! forward transform is unnormalized and the inverse carries `1/(N1 N2)`.
//!
//! Odd-order derivatives zero the Nyquist mode; even-order ones keep it.

pub mod dense;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mesh::{norm_h, Grid, MeshFunction};

/// Imaginary residue allowed after an inverse transform, relative to the
/// size of the transformed data.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Per-axis eigenvalues of the spectral (`D1`, `D2`) and finite-difference
/// (`B`) differentiation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub lam_d1x: Vec<Complex64>,
    pub lam_d2x: Vec<f64>,
    pub lam_d1y: Vec<Complex64>,
    pub lam_d2y: Vec<f64>,
    pub lam_b1: Vec<f64>,
    pub lam_b2: Vec<f64>,
}

/// Signed wavenumber index of DFT slot `j` on an `n`-point axis.
fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

fn first_derivative_eigs(n: usize, mu: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| {
            if n == 1 || j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                I * (wavenumber(j, n) * mu)
            }
        })
        .collect()
}

fn second_derivative_eigs(n: usize, mu: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let k = wavenumber(j, n) * mu;
            if n == 1 {
                0.0
            } else {
                -k * k
            }
        })
        .collect()
}

fn second_difference_eigs(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = (j as f64 * std::f64::consts::PI / n as f64).sin();
            -4.0 / (h * h) * s * s
        })
        .collect()
}

impl SpectralTable {
    pub fn new(grid: &Grid) -> Self {
        Self {
            lam_d1x: first_derivative_eigs(grid.n1(), grid.mu1()),
            lam_d2x: second_derivative_eigs(grid.n1(), grid.mu1()),
            lam_d1y: first_derivative_eigs(grid.n2(), grid.mu2()),
            lam_d2y: second_derivative_eigs(grid.n2(), grid.mu2()),
            lam_b1: second_difference_eigs(grid.n1(), grid.h1()),
            lam_b2: second_difference_eigs(grid.n2(), grid.h2()),
        }
    }

    pub fn n1(&self) -> usize {
        self.lam_d1x.len()
    }

    pub fn n2(&self) -> usize {
        self.lam_d1y.len()
    }

    /// Checks the per-axis eigenvalue chains
    /// `0 <= -(4/pi^2) lam_{D1^2} <= -(4/pi^2) lam_{D2} <= -lam_B <= -lam_{D2}` and
    /// `(16/pi^4) lam_{D2}^2 <= lam_B^2 <= lam_{D2}^2`, each with slack `tol`
    /// relative to the largest term. Returns the first violating axis and index.
    pub fn check_inequalities(&self, tol: f64) -> std::result::Result<(), (char, usize)> {
        let c = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let axes = [
            ('x', &self.lam_d1x, &self.lam_d2x, &self.lam_b1),
            ('y', &self.lam_d1y, &self.lam_d2y, &self.lam_b2),
        ];
        for (name, d1, d2, b) in axes {
            for j in 0..d1.len() {
                let d1sq = (d1[j] * d1[j]).re;
                let slack = tol * (1.0 + d2[j].abs() + b[j].abs());
                let chain = [0.0, -c * d1sq, -c * d2[j], -b[j], -d2[j]];
                let squares = [0.0, c * c * d2[j] * d2[j], b[j] * b[j], d2[j] * d2[j]];
                let ok = chain.windows(2).all(|w| w[0] <= w[1] + slack)
                    && squares.windows(2).all(|w| w[0] <= w[1] + slack * slack.max(1.0));
                if !ok {
                    return Err((name, j));
                }
            }
        }
        Ok(())
    }
}

pub fn build_tables(grid: &Grid) -> SpectralTable {
    SpectralTable::new(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// `A = I (x) D2x + D2y (x) I`, the spectral Laplacian.
    Laplacian,
    /// `A^2`.
    Bilaplacian,
    /// `B = I (x) D3x + D2y (x) D1x`, the spectral `Delta d/dx`.
    LaplacianDx,
    /// `L_h = I (x) D1x + D1y (x) I`.
    Transport,
    /// Left-hand operator of the half-step solve.
    TimeStep,
    Custom,
}

/// Eigenvalues of a Fourier-diagonal operator, indexed `j + N1 * k` by
/// 2D frequency `(j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    kind: SymbolKind,
    n1: usize,
    n2: usize,
    values: Vec<Complex64>,
}

impl OperatorSymbol {
    pub fn from_fn(
        table: &SpectralTable,
        kind: SymbolKind,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Self {
        let (n1, n2) = (table.n1(), table.n2());
        let values = (0..n2)
            .flat_map(|k| (0..n1).map(move |j| (j, k)))
            .map(|(j, k)| f(j, k))
            .collect();
        Self { kind, n1, n2, values }
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j + self.n1 * k]
    }

    /// Pointwise map, used to build inverses and composites.
    pub fn map(&self, kind: SymbolKind, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            kind,
            n1: self.n1,
            n2: self.n2,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when `values[-j, -k] == conj(values[j, k])` to within `tol`.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        (0..self.n2).all(|k| {
            (0..self.n1).all(|j| {
                let mj = (self.n1 - j) % self.n1;
                let mk = (self.n2 - k) % self.n2;
                (self.get(mj, mk) - self.get(j, k).conj()).norm()
                    <= tol * (1.0 + self.get(j, k).norm())
            })
        })
    }
}

pub fn symbol_a(table: &SpectralTable) -> OperatorSymbol {
    OperatorSymbol::from_fn(table, SymbolKind::Laplacian, |j, k| {
        Complex64::new(table.lam_d2x[j] + table.lam_d2y[k], 0.0)
    })
}

pub fn symbol_a2(table: &SpectralTable) -> OperatorSymbol {
    OperatorSymbol::from_fn(table, SymbolKind::Bilaplacian, |j, k| {
        let a = table.lam_d2x[j] + table.lam_d2y[k];
        Complex64::new(a * a, 0.0)
    })
}

/// Third x-derivative eigenvalues are taken as `lam_d1x * lam_d2x`, so the
/// Nyquist mode vanishes as for every odd derivative.
pub fn symbol_b(table: &SpectralTable) -> OperatorSymbol {
    OperatorSymbol::from_fn(table, SymbolKind::LaplacianDx, |j, k| {
        table.lam_d1x[j] * (table.lam_d2x[j] + table.lam_d2y[k])
    })
}

pub fn symbol_lh(table: &SpectralTable) -> OperatorSymbol {
    OperatorSymbol::from_fn(table, SymbolKind::Transport, |j, k| {
        table.lam_d1x[j] + table.lam_d1y[k]
    })
}

/// Transform plans and eigenvalue tables for one grid.
///
/// Plans are shared read-only; every call allocates its own scratch, so a
/// `Spectral` can be used from several threads at once.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    table: SpectralTable,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    a: OperatorSymbol,
    b: OperatorSymbol,
    lh: OperatorSymbol,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let table = SpectralTable::new(grid);
        Self {
            grid: *grid,
            fwd_x: planner.plan_fft_forward(grid.n1()),
            inv_x: planner.plan_fft_inverse(grid.n1()),
            fwd_y: planner.plan_fft_forward(grid.n2()),
            inv_y: planner.plan_fft_inverse(grid.n2()),
            a: symbol_a(&table),
            b: symbol_b(&table),
            lh: symbol_lh(&table),
            table,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn table(&self) -> &SpectralTable {
        &self.table
    }

    pub fn laplacian(&self) -> &OperatorSymbol {
        &self.a
    }

    pub fn laplacian_dx(&self) -> &OperatorSymbol {
        &self.b
    }

    pub fn transport(&self) -> &OperatorSymbol {
        &self.lh
    }

    fn check_grid(&self, u: &MeshFunction) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn check_symbol(&self, sym: &OperatorSymbol) -> Result<()> {
        if sym.n1 != self.grid.n1() || sym.n2 != self.grid.n2() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn transform(&self, buf: &mut [Complex64], x: &dyn Fft<f64>, y: &dyn Fft<f64>) {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let mut scratch =
            vec![Complex64::default(); x.get_inplace_scratch_len().max(y.get_inplace_scratch_len())];
        x.process_with_scratch(buf, &mut scratch);
        if n2 > 1 {
            let mut t = vec![Complex64::default(); buf.len()];
            for k in 0..n2 {
                for j in 0..n1 {
                    t[k + n2 * j] = buf[j + n1 * k];
                }
            }
            y.process_with_scratch(&mut t, &mut scratch);
            for j in 0..n1 {
                for k in 0..n2 {
                    buf[j + n1 * k] = t[k + n2 * j];
                }
            }
        }
    }

    /// Unnormalized 2D DFT of real samples.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.grid.len());
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, self.fwd_x.as_ref(), self.fwd_y.as_ref());
        buf
    }

    /// Inverse 2D DFT (with the `1/(N1 N2)` factor) returning the real part.
    ///
    /// Fails if the imaginary residue exceeds [`IMAG_RESIDUE_TOL`] times the
    /// mean coefficient magnitude, which bounds every output entry.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Result<Vec<f64>> {
        let scale = 1.0 / self.grid.len() as f64;
        let bound = scale * spec.iter().map(|c| c.norm()).sum::<f64>();
        self.transform(&mut spec, self.inv_x.as_ref(), self.inv_y.as_ref());
        let mut residue = 0.0f64;
        let out = spec
            .iter()
            .map(|c| {
                residue = residue.max(c.im.abs());
                c.re * scale
            })
            .collect();
        let residue = residue * scale;
        let limit = IMAG_RESIDUE_TOL * bound;
        if residue > limit {
            return Err(Error::SymmetryViolation { residue, limit });
        }
        Ok(out)
    }

    pub fn apply_symbol(&self, sym: &OperatorSymbol, u: &MeshFunction) -> Result<MeshFunction> {
        self.check_grid(u)?;
        self.check_symbol(sym)?;
        let mut spec = self.forward(u.values());
        for (c, s) in spec.iter_mut().zip(&sym.values) {
            *c *= s;
        }
        Ok(MeshFunction::from_raw(self.grid, self.inverse(spec)?))
    }

    /// Applies the skew-symmetric operator
    /// `D(U) = B + L_h + (diag(U^p) L_h + L_h diag(U^p)) / (p + 2)` to `v`.
    pub fn apply_d(&self, u_hat: &MeshFunction, v: &MeshFunction, p: u32) -> Result<MeshFunction> {
        self.check_grid(u_hat)?;
        self.check_grid(v)?;
        let weight = u_hat.powi(p);
        let v_spec = self.forward(v.values());
        let lh_v_spec: Vec<_> = v_spec.iter().zip(&self.lh.values).map(|(c, s)| c * s).collect();
        let lh_v = self.inverse(lh_v_spec)?;
        let prod_a: Vec<f64> = weight.values().iter().zip(&lh_v).map(|(w, x)| w * x).collect();
        let prod_b: Vec<f64> = weight.values().iter().zip(v.values()).map(|(w, x)| w * x).collect();
        let (fa, fb) = (self.forward(&prod_a), self.forward(&prod_b));
        let c = 1.0 / (p as f64 + 2.0);
        let out: Vec<_> = (0..v_spec.len())
            .map(|i| {
                let lin = (self.b.values[i] + self.lh.values[i]) * v_spec[i];
                lin + c * (fa[i] + self.lh.values[i] * fb[i])
            })
            .collect();
        Ok(MeshFunction::from_raw(self.grid, self.inverse(out)?))
    }

    /// `|U|_{1,h}`, evaluated in Parseval form from the first-derivative symbols.
    pub fn seminorm_1h(&self, u: &MeshFunction) -> Result<f64> {
        self.check_grid(u)?;
        let spec = self.forward(u.values());
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let mut s = 0.0;
        for k in 0..n2 {
            for j in 0..n1 {
                let w = self.table.lam_d1x[j].norm_sqr() + self.table.lam_d1y[k].norm_sqr();
                s += w * spec[j + n1 * k].norm_sqr();
            }
        }
        Ok((self.grid.cell_area() * s / self.grid.len() as f64).sqrt())
    }

    /// `|U|_{2,h} = ||A U||_h`.
    pub fn seminorm_2h(&self, u: &MeshFunction) -> Result<f64> {
        Ok(norm_h(&self.apply_symbol(&self.a, u)?))
    }

    /// `||L_h U||_h`.
    pub fn norm_lh(&self, u: &MeshFunction) -> Result<f64> {
        Ok(norm_h(&self.apply_symbol(&self.lh, u)?))
    }
}
