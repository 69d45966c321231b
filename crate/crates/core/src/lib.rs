//! Linearized, momentum-preserving Fourier pseudo-spectral solver for the
//! generalized Rosenau-KdV equation
//!
//! ```text
//! u_t + Delta^2 u_t + Delta u_x + (1 + u^p) (u_x + u_y) = g
//! ```
//!
//! on periodic domains in one and two dimensions.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod problems;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use mesh::{Axis, Dim, Grid, MeshFunction};
pub use problems::Problem;
pub use spectral::{OperatorSymbol, Spectral, SpectralTable};
pub use stepper::{SchemeConfig, StepDiagnostics, StepState, Stepper};
