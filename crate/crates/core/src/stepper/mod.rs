//! Time stepping: partitioned and unpartitioned block steps, composite
//! methods, iterator bootstrap, exponential Adams-Bashforth and ETDRK2.

mod driver;
mod partitioned;
mod unpartitioned;

pub use driver::{integrate, integrate_unpartitioned, MethodConfig, NodeChoice, RunOutput};
pub use partitioned::Stepper;
pub use unpartitioned::{UnpartitionedStepper, DEFAULT_KRYLOV_TOLERANCE};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{is_finite, CVector};

/// Blocks whose norm exceeds this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e100;

/// `y' = Ly + N(t, y)` with diagonal `L`.
///
/// Implementations must be pure: the stepper may call `nonlinear`
/// concurrently from several threads.
pub trait SemilinearProblem: Sync {
    fn dim(&self) -> usize;
    fn linear_diag(&self) -> &CVector;
    fn nonlinear(&self, t: Complex64, y: &CVector) -> CVector;
}

/// `y' = F(y)` with a Jacobian action.
pub trait UnpartitionedProblem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &CVector) -> CVector;
    fn jacobian_action(&self, base: &CVector, v: &CVector) -> CVector;
}

/// Semilinear problem from a diagonal and a closure.
pub struct Semilinear<F> {
    diag: CVector,
    f: F,
}

impl<F> Semilinear<F>
where
    F: Fn(Complex64, &CVector) -> CVector + Sync,
{
    pub fn new(diag: CVector, f: F) -> Result<Self> {
        if !is_finite(&diag) {
            return Err(Error::param("linear diagonal must be finite"));
        }
        Ok(Self { diag, f })
    }
}

impl<F> SemilinearProblem for Semilinear<F>
where
    F: Fn(Complex64, &CVector) -> CVector + Sync,
{
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn linear_diag(&self) -> &CVector {
        &self.diag
    }

    fn nonlinear(&self, t: Complex64, y: &CVector) -> CVector {
        (self.f)(t, y)
    }
}

/// Unpartitioned problem from two closures.
pub struct Unpartitioned<F, J> {
    dim: usize,
    f: F,
    j: J,
}

impl<F, J> Unpartitioned<F, J>
where
    F: Fn(&CVector) -> CVector + Sync,
    J: Fn(&CVector, &CVector) -> CVector + Sync,
{
    pub fn new(dim: usize, f: F, j: J) -> Self {
        Self { dim, f, j }
    }
}

impl<F, J> UnpartitionedProblem for Unpartitioned<F, J>
where
    F: Fn(&CVector) -> CVector + Sync,
    J: Fn(&CVector, &CVector) -> CVector + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, y: &CVector) -> CVector {
        (self.f)(y)
    }

    fn jacobian_action(&self, base: &CVector, v: &CVector) -> CVector {
        (self.j)(base, v)
    }
}

/// The `q` solution values of a block method in the frame `t = t_n + r τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub y: Vec<CVector>,
    /// Cached `N(t_n + r z_j, y_j)` (partitioned) or `F(y_j)` (unpartitioned).
    pub nonlin: Vec<Option<CVector>>,
    pub t: f64,
    pub r: f64,
}

impl BlockState {
    pub fn new(y: Vec<CVector>, t: f64, r: f64) -> Result<Self> {
        let state = Self {
            nonlin: vec![None; y.len()],
            y,
            t,
            r,
        };
        state.validate(None)?;
        Ok(state)
    }

    /// `q` copies of `y0`.
    pub fn constant(y0: &CVector, q: usize, t: f64, r: f64) -> Result<Self> {
        Self::new(vec![y0.clone(); q], t, r)
    }

    pub fn q(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.y.first().map_or(0, |v| v.len())
    }

    pub(crate) fn validate(&self, dim: Option<usize>) -> Result<()> {
        if self.y.is_empty() {
            return Err(Error::param("block state is empty"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::param(format!("node radius must be positive, got {}", self.r)));
        }
        let d = dim.unwrap_or_else(|| self.dim());
        if self.y.iter().any(|v| v.len() != d) {
            return Err(Error::param(format!("block vectors must all have dimension {d}")));
        }
        if self.nonlin.len() != self.y.len() {
            return Err(Error::param("nonlinear cache length differs from block size"));
        }
        if self.nonlin.iter().flatten().any(|v| v.len() != d) {
            return Err(Error::param("cached nonlinear value has wrong dimension"));
        }
        Ok(())
    }

    /// FNV-1a hash of the raw bits of every entry, in index order.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.y {
            for z in v.iter() {
                for bits in [z.re.to_bits(), z.im.to_bits()] {
                    h ^= bits;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

pub(crate) fn check_output(v: &CVector, step: usize) -> Result<()> {
    if !is_finite(v) || v.norm() > DIVERGENCE_NORM {
        return Err(Error::Divergence { step, method: None });
    }
    Ok(())
}
