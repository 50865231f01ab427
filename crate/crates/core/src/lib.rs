//! Exponential polynomial block methods (EPBMs) for stiff ODE systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`phi`]: φ-function kernels for scalars, diagonal tables, dense
//!   matrices and Krylov projections of φ linear combinations.
//! - [`nodes`]: node sets, finite-difference weights and Lagrange evaluation.
//! - [`expansion`]: Adams φ-expansion coefficients for block methods,
//!   including exponential Adams-Bashforth.
//! - [`stepper`]: partitioned / unpartitioned block steppers, composite
//!   methods, iterator bootstrap, EAB and ETDRK2, plus whole-run drivers.
//! - [`stability`]: amplification matrices for the two-parameter Dahlquist
//!   problem and stability-region scans.
//! - [`problems`]: method-of-lines test problems (Fourier spectral KS,
//!   Nikolaevskiy, KdV and a finite-difference ADR system).

pub mod error;
pub mod expansion;
pub mod linalg;
pub mod nodes;
pub mod phi;
pub mod problems;
pub mod stability;
pub mod stepper;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, LinearOperator};
pub use num_complex::Complex64;
