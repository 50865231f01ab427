//! φ-function kernels.
//!
//! `φ_0(z) = e^z` and `φ_k(z) = ∫₀¹ e^{z(1-s)} s^{k-1}/(k-1)! ds` for `k > 0`.
//! Scalar values come from the upward recurrence
//! `φ_{k+1}(z) = (φ_k(z) - 1/k!) / z` away from the origin and from a
//! trapezoidal contour mean around `z` near it, where the recurrence
//! cancels catastrophically. The contour points themselves sit far enough
//! from the origin for the recurrence to be accurate there.

mod krylov;

pub use krylov::{phi_combo, PhiComboRequest, DEFAULT_MAX_KRYLOV_DIM};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, expm, CMatrix, CVector};

/// Largest φ index accepted by the scalar kernels.
pub const MAX_PHI_INDEX: usize = 64;

/// Below this magnitude the contour mean is used instead of the recurrence.
pub const DEFAULT_DISPATCH_RADIUS: f64 = 2.0;

/// Number of equispaced trapezoid points on the contour.
pub const DEFAULT_CONTOUR_POINTS: usize = 64;

/// Desk-scale guard for dense φ evaluation.
pub const MAX_DENSE_DIM: usize = 2048;

/// Tuning of the scalar φ evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiConfig {
    /// `|z|` below which the contour mean is used.
    pub dispatch_radius: f64,
    /// Points on the contour circle. The circle is centred at `z` with
    /// radius twice the effective dispatch radius.
    pub contour_points: usize,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self {
            dispatch_radius: DEFAULT_DISPATCH_RADIUS,
            contour_points: DEFAULT_CONTOUR_POINTS,
        }
    }
}

impl PhiConfig {
    /// The recurrence loses roughly `log10(k!/|z|^k)` digits, so the
    /// threshold grows with the highest index requested.
    fn effective_radius(&self, k_max: usize) -> f64 {
        self.dispatch_radius.max(k_max as f64 / 4.0)
    }
}

fn inv_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut f = 1.0;
    out.push(1.0);
    for j in 1..=n {
        f /= j as f64;
        out.push(f);
    }
    out
}

fn recurrence(k_max: usize, z: Complex64, inv_fact: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(z.exp());
    for j in 0..k_max {
        let next = (out[j] - inv_fact[j]) / z;
        out.push(next);
    }
    out
}

fn contour(cfg: &PhiConfig, k_max: usize, z: Complex64, inv_fact: &[f64]) -> Vec<Complex64> {
    let m = cfg.contour_points;
    let radius = 2.0 * cfg.effective_radius(k_max);
    let mut acc = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for p in 0..m {
        // offset by half a step so the point set is closed under conjugation
        let theta = std::f64::consts::TAU * (p as f64 + 0.5) / m as f64;
        let w = z + Complex64::from_polar(radius, theta);
        for (a, v) in acc.iter_mut().zip(recurrence(k_max, w, inv_fact)) {
            *a += v;
        }
    }
    let scale = 1.0 / m as f64;
    let real_axis = z.im == 0.0;
    let mut out: Vec<Complex64> = acc
        .into_iter()
        .map(|a| {
            let v = a * scale;
            if real_axis {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        })
        .collect();
    out[0] = z.exp();
    out
}

fn check_args(k: usize, z: Complex64) -> Result<()> {
    if k > MAX_PHI_INDEX {
        return Err(Error::param(format!(
            "phi index {k} exceeds the supported maximum {MAX_PHI_INDEX}"
        )));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::param(format!("non-finite phi argument {z}")));
    }
    Ok(())
}

/// `[φ_0(z), …, φ_{k_max}(z)]` with a custom configuration.
pub fn phi_all_with(cfg: &PhiConfig, k_max: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_args(k_max, z)?;
    let inv_fact = inv_factorials(k_max);
    if k_max == 0 {
        return Ok(vec![z.exp()]);
    }
    if z.norm() < cfg.effective_radius(k_max) {
        Ok(contour(cfg, k_max, z, &inv_fact))
    } else {
        Ok(recurrence(k_max, z, &inv_fact))
    }
}

/// `[φ_0(z), …, φ_{k_max}(z)]`.
pub fn phi_all(k_max: usize, z: Complex64) -> Result<Vec<Complex64>> {
    phi_all_with(&PhiConfig::default(), k_max, z)
}

/// `φ_k(z)`.
pub fn phi_scalar(k: usize, z: Complex64) -> Result<Complex64> {
    Ok(phi_all(k, z)?[k])
}

/// Precomputed `φ_k(η·L_ii)` for a diagonal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    entries: Vec<CVector>,
    eta: Complex64,
}

impl PhiTable {
    /// `φ_k(η·L)` as a vector over the diagonal.
    pub fn phi(&self, k: usize) -> &CVector {
        &self.entries[k]
    }

    pub fn entries(&self) -> &[CVector] {
        &self.entries
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn k_max(&self) -> usize {
        self.entries.len() - 1
    }
}

/// Build a [`PhiTable`] for `diag` scaled by `eta`.
pub fn build_phi_table(diag: &CVector, eta: Complex64, k_max: usize) -> Result<PhiTable> {
    if !(eta.re.is_finite() && eta.im.is_finite()) {
        return Err(Error::param("non-finite phi table scale"));
    }
    let n = diag.len();
    let mut entries = vec![CVector::zeros(n); k_max + 1];
    for (i, &d) in diag.iter().enumerate() {
        if !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::param(format!("non-finite diagonal entry at index {i}")));
        }
        let vals = phi_all(k_max, eta * d)?;
        for (k, v) in vals.into_iter().enumerate() {
            entries[k][i] = v;
        }
    }
    Ok(PhiTable { entries, eta })
}

/// Dense `φ_k(η·A)` for `k = 0..=k_max`, read off the top block row of
/// the exponential of the augmented matrix `[[ηA, I, 0, …], [0, 0, I, …], …]`.
pub fn phi_dense(a: &CMatrix, eta: Complex64, k_max: usize) -> Result<Vec<CMatrix>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::param("phi_dense requires a square matrix"));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::Capacity(format!(
            "dense phi evaluation limited to dimension {MAX_DENSE_DIM}, got {n}"
        )));
    }
    if k_max > MAX_PHI_INDEX {
        return Err(Error::param(format!("phi index {k_max} too large")));
    }
    let blocks = k_max + 1;
    let mut aug = CMatrix::zeros(n * blocks, n * blocks);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * eta));
    for b in 0..k_max {
        for i in 0..n {
            aug[(b * n + i, (b + 1) * n + i)] = c(1.0);
        }
    }
    let e = expm(&aug)?;
    Ok((0..blocks)
        .map(|b| e.view((0, b * n), (n, n)).into_owned())
        .collect())
}
