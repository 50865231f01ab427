//! Periodic 1-D equations in Fourier space, `û' = L û + N(û)` with
//! `N = -½ ∂_x(u²)` computed pseudospectrally.
//!
//! Transforms are unnormalized forward and `1/N` inverse. The state is the
//! full complex spectrum in standard ordering `m = 0, 1, …, N/2, -N/2+1, …, -1`.
//! The Nyquist wavenumber is set to zero so every symbol is conjugate
//! symmetric; that mode is also removed by dealiasing.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{c, CVector};
use crate::stepper::SemilinearProblem;

pub const KS_DESK_MODES: usize = 256;
pub const KS_DESK_T_FINAL: f64 = 10.0;
pub const KS_PAPER_T_FINAL: f64 = 60.0;

pub const NIKOLAEVSKIY_DESK_MODES: usize = 512;
pub const NIKOLAEVSKIY_DESK_T_FINAL: f64 = 10.0;

/// `(r, α, β, ε)`.
pub const NIKOLAEVSKIY_PARAMS: (f64, f64, f64, f64) = (0.25, 2.1, 0.77, 0.1);

pub const KDV_DESK_MODES: usize = 256;
pub const KDV_DELTA: f64 = 0.022;

/// `3.6 / π`.
pub fn kdv_t_final() -> f64 {
    3.6 / PI
}

pub struct SpectralProblem {
    name: &'static str,
    modes: usize,
    /// Domain `[x0, x0 + length)`.
    x0: f64,
    length: f64,
    wavenumbers: Vec<f64>,
    linear_diag: CVector,
    /// `-½ i k` on kept modes, zero on dealiased ones.
    nonlinear_symbol: CVector,
    keep: Vec<bool>,
    pub t_final: f64,
    initial_state: CVector,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralProblem")
            .field("name", &self.name)
            .field("modes", &self.modes)
            .field("length", &self.length)
            .field("t_final", &self.t_final)
            .finish_non_exhaustive()
    }
}

/// Signed mode index of position `j`; the Nyquist slot reports `N/2`.
pub fn mode_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Two-thirds rule: keep `|m|` with `3|m| < N`.
pub fn dealias_mask(n: usize) -> Vec<bool> {
    (0..n).map(|j| 3 * mode_index(j, n).unsigned_abs() < n as u64).collect()
}

fn check_modes(modes: usize) -> Result<()> {
    if !(128..=4096).contains(&modes) || !modes.is_power_of_two() {
        return Err(Error::param(format!(
            "modes must be a power of two in 128..=4096, got {modes}"
        )));
    }
    Ok(())
}

impl SpectralProblem {
    fn build(
        name: &'static str,
        modes: usize,
        x0: f64,
        length: f64,
        t_final: f64,
        symbol: impl Fn(f64) -> Complex64,
        ic: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        check_modes(modes)?;
        let n = modes;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                if j == n / 2 {
                    0.0
                } else {
                    2.0 * PI / length * mode_index(j, n) as f64
                }
            })
            .collect();
        let keep = dealias_mask(n);
        let linear_diag = CVector::from_iterator(n, wavenumbers.iter().map(|&k| symbol(k)));
        let nonlinear_symbol = CVector::from_iterator(
            n,
            wavenumbers
                .iter()
                .zip(&keep)
                .map(|(&k, &kept)| if kept { Complex64::new(0.0, -0.5 * k) } else { c(0.0) }),
        );
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut p = Self {
            name,
            modes: n,
            x0,
            length,
            wavenumbers,
            linear_diag,
            nonlinear_symbol,
            keep,
            t_final,
            initial_state: CVector::zeros(n),
            forward,
            inverse,
        };
        let field: Vec<Complex64> = p.grid().iter().map(|&x| c(ic(x))).collect();
        let mut state = p.to_spectral(&field);
        state[n / 2] = c(0.0);
        p.initial_state = state;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn dealias(&self) -> &[bool] {
        &self.keep
    }

    pub fn initial_state(&self) -> &CVector {
        &self.initial_state
    }

    pub fn with_t_final(mut self, t_final: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::param(format!("t_final must be positive, got {t_final}")));
        }
        self.t_final = t_final;
        Ok(self)
    }

    /// Physical grid points.
    pub fn grid(&self) -> Vec<f64> {
        let dx = self.length / self.modes as f64;
        (0..self.modes).map(|j| self.x0 + dx * j as f64).collect()
    }

    /// Unnormalized forward transform of physical values.
    pub fn to_spectral(&self, u: &[Complex64]) -> CVector {
        let mut buf = u.to_vec();
        let mut scratch = vec![c(0.0); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        CVector::from_vec(buf)
    }

    /// Inverse transform with the `1/N` factor.
    pub fn to_physical(&self, y: &CVector) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = y.iter().copied().collect();
        let mut scratch = vec![c(0.0); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let s = 1.0 / self.modes as f64;
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    /// Zero the dealiased modes.
    pub fn apply_dealias(&self, y: &mut CVector) {
        for (v, kept) in y.iter_mut().zip(&self.keep) {
            if !kept {
                *v = c(0.0);
            }
        }
    }
}

impl SemilinearProblem for SpectralProblem {
    fn dim(&self) -> usize {
        self.modes
    }

    fn linear_diag(&self) -> &CVector {
        &self.linear_diag
    }

    fn nonlinear(&self, _t: Complex64, y: &CVector) -> CVector {
        let mut u = self.to_physical(y);
        u.iter_mut().for_each(|v| *v = *v * *v);
        let mut out = self.to_spectral(&u);
        out.component_mul_assign(&self.nonlinear_symbol);
        out
    }
}

/// Kuramoto-Sivashinsky, `u_t = -u_xx - u_xxxx - ½(u²)_x` on `[0, 64π]`,
/// `u(x, 0) = cos(x/16)(1 + sin(x/16))`.
pub fn make_ks(modes: usize) -> Result<SpectralProblem> {
    SpectralProblem::build(
        "ks",
        modes,
        0.0,
        64.0 * PI,
        KS_DESK_T_FINAL,
        |k| c(k * k - k.powi(4)),
        |x| (x / 16.0).cos() * (1.0 + (x / 16.0).sin()),
    )
}

/// Nikolaevskiy, `u_t = αu_xxx + βu_xxxxx - ∂²_x(r - (1 + ∂²_x)²)u - ½(u²)_x`
/// on `[-75π, 75π]`, `u(x, 0) = sin x + ε sin(x/25)`.
pub fn make_nikolaevskiy(modes: usize) -> Result<SpectralProblem> {
    let (r, a, b, eps) = NIKOLAEVSKIY_PARAMS;
    SpectralProblem::build(
        "nikolaevskiy",
        modes,
        -75.0 * PI,
        150.0 * PI,
        NIKOLAEVSKIY_DESK_T_FINAL,
        move |k| {
            let k2 = k * k;
            Complex64::new(k2 * (r - (1.0 - k2).powi(2)), -a * k.powi(3) + b * k.powi(5))
        },
        move |x| x.sin() + eps * (x / 25.0).sin(),
    )
}

/// Korteweg-de Vries, `u_t = -(δu_xxx + ½(u²)_x)` on `[0, 2]`,
/// `u(x, 0) = cos(πx)`.
pub fn make_kdv(modes: usize) -> Result<SpectralProblem> {
    SpectralProblem::build(
        "kdv",
        modes,
        0.0,
        2.0,
        kdv_t_final(),
        |k| Complex64::new(0.0, KDV_DELTA * k.powi(3)),
        |x| (PI * x).cos(),
    )
}
