//! Linear stability on the two-parameter Dahlquist problem
//! `y' = λ₁y + λ₂y`, with `λ₁` in the linear part and `λ₂y` as the
//! nonlinearity. With `z_i = hλ_i` and `h = rα`, one step of a block
//! method is the matrix iteration `y⁽ⁿ⁺¹⁾ = M(z₁, z₂, α) y⁽ⁿ⁾`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::{MethodCoefficients, MethodFamily, Partitioning};
use crate::linalg::{c, CMatrix, CVector};
use crate::phi::phi_all;

pub const DEFAULT_POWER_TOL: f64 = 1e-10;

/// Largest grid a slice will scan.
pub const MAX_GRID_POINTS: usize = 2000 * 2000;

const POWER_STEPS: usize = 10_000;
const POWER_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct AmpMatrix {
    pub m: CMatrix,
    pub z1: Complex64,
    pub z2: Complex64,
    pub alpha: f64,
}

impl AmpMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

fn check_finite(z1: Complex64, z2: Complex64, alpha: f64) -> Result<()> {
    if !(z1.is_finite() && z2.is_finite()) {
        return Err(Error::param("Dahlquist parameters must be finite"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!(
            "stability scaling needs alpha > 0 (z/alpha undefined), got {alpha}"
        )));
    }
    Ok(())
}

/// One step of an explicit partitioned method in node-radius units,
/// `w1 = rλ₁`, `w2 = rλ₂`. Outputs that use other outputs (serial
/// strategies) are resolved by solving the strictly triangular system.
fn step_matrix(coeffs: &MethodCoefficients, w1: Complex64, w2: Complex64) -> Result<CMatrix> {
    let cf = &coeffs.coeff_form;
    let rows = coeffs.outputs.len();
    let q = coeffs.q();
    let kmax = coeffs.max_phi_index();
    let mut m_in = CMatrix::zeros(rows, q);
    let mut m_out = CMatrix::zeros(rows, rows);
    for (j, o) in coeffs.outputs.iter().enumerate() {
        let phis = phi_all(kmax, o.eta * w1)?;
        for l in 0..q {
            let mut v = phis[0] * cf.a[(j, l)];
            for k in 1..=kmax {
                v += phis[k] * cf.b[j][(k - 1, l)] * w2;
            }
            m_in[(j, l)] = v;
        }
        for l in 0..rows.min(q) {
            let mut v = c(0.0);
            for k in 1..=kmax {
                v += phis[k] * cf.d[j][(k - 1, l)] * w2;
            }
            m_out[(j, l)] = v;
        }
    }
    if m_out.iter().all(|v| *v == c(0.0)) {
        return Ok(m_in);
    }
    let lhs = CMatrix::identity(rows, rows) - m_out;
    lhs.lu()
        .solve(&m_in)
        .ok_or_else(|| Error::Numeric("singular serial output system".into()))
}

fn require_partitioned(coeffs: &MethodCoefficients) -> Result<()> {
    if coeffs.spec.partitioning != Partitioning::Partitioned {
        return Err(Error::config("amplification_matrix needs partitioned coefficients"));
    }
    Ok(())
}

/// Amplification matrix of a block method (propagator or iterator) or of an
/// exponential Adams-Bashforth method.
///
/// `alpha` fixes the node radius through `h = rα`. For a propagator it must
/// equal the method's own `α`; an iterator (`α = 0`) takes the `α` of the
/// propagator it is paired with.
pub fn amplification_matrix(
    coeffs: &MethodCoefficients,
    z1: Complex64,
    z2: Complex64,
    alpha: f64,
) -> Result<AmpMatrix> {
    check_finite(z1, z2, alpha)?;
    require_partitioned(coeffs)?;
    let own = coeffs.alpha();
    if own > 0.0 && own != alpha {
        return Err(Error::config(format!(
            "propagator has alpha = {own}, scan requested alpha = {alpha}"
        )));
    }
    let (w1, w2) = (z1 / alpha, z2 / alpha);
    let m = match coeffs.family {
        MethodFamily::Block => step_matrix(coeffs, w1, w2)?,
        MethodFamily::AdamsBashforth => eab_companion(coeffs, w1, w2)?,
    };
    Ok(AmpMatrix { m, z1, z2, alpha })
}

/// Companion matrix on the history `(y_{n-p+1}, …, y_n)`: a shift plus the
/// Adams row in the last position.
fn eab_companion(coeffs: &MethodCoefficients, w1: Complex64, w2: Complex64) -> Result<CMatrix> {
    let p = coeffs.q();
    let row = step_matrix(coeffs, w1, w2)?;
    let mut m = CMatrix::zeros(p, p);
    for i in 0..p - 1 {
        m[(i, i + 1)] = c(1.0);
    }
    m.row_mut(p - 1).copy_from(&row.row(0));
    Ok(m)
}

/// `M_iter^κ M_prop` at the propagator's `α`.
pub fn composite_amplification_matrix(
    prop: &MethodCoefficients,
    iter: &MethodCoefficients,
    kappa: usize,
    z1: Complex64,
    z2: Complex64,
) -> Result<AmpMatrix> {
    let alpha = prop.alpha();
    let mut amp = amplification_matrix(prop, z1, z2, alpha)?;
    if kappa > 0 {
        if iter.alpha() != 0.0 || iter.q() != prop.q() || iter.family != MethodFamily::Block {
            return Err(Error::config("iterator must be an alpha = 0 block method of the same size"));
        }
        let mi = amplification_matrix(iter, z1, z2, alpha)?.m;
        for _ in 0..kappa {
            amp.m = &mi * &amp.m;
        }
    }
    Ok(amp)
}

/// Unpartitioned amplification matrix on `y' = λy` with `z = hλ`. The
/// remainder vanishes for a linear right-hand side, so every output is
/// `φ_0(η_j z/α) L_y(b_j)`.
pub fn unpartitioned_amplification_matrix(
    coeffs: &MethodCoefficients,
    z: Complex64,
    alpha: f64,
) -> Result<AmpMatrix> {
    check_finite(z, c(0.0), alpha)?;
    if coeffs.spec.partitioning != Partitioning::Unpartitioned || coeffs.family != MethodFamily::Block {
        return Err(Error::config("expected unpartitioned block coefficients"));
    }
    let w = z / alpha;
    let mut m = coeffs.coeff_form.a.clone();
    for (j, o) in coeffs.outputs.iter().enumerate() {
        let e = (o.eta * w).exp();
        m.row_mut(j).iter_mut().for_each(|v| *v *= e);
    }
    Ok(AmpMatrix {
        m,
        z1: z,
        z2: c(0.0),
        alpha,
    })
}

fn eigenvalues(m: &CMatrix) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    let schur = m.clone().try_schur(1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

/// Apply `M` repeatedly to random vectors and watch for growth.
fn powering_bounded(m: &CMatrix) -> bool {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let mut v = CVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let start = v.norm();
        for _ in 0..POWER_STEPS {
            v = m * v;
            let norm = v.norm();
            if !norm.is_finite() || norm > POWER_GROWTH * start {
                return false;
            }
        }
    }
    true
}

/// Number of singular values of `a` above the rank threshold.
fn numerical_rank(a: &CMatrix, scale: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let thresh = 1e-8 * scale.max(1.0);
    sv.iter().filter(|s| **s > thresh).count()
}

/// Eigenvalue criterion: all `|λ| ≤ 1 + tol`, and eigenvalues within `tol`
/// of the unit circle are non-defective. Repeated near-unit eigenvalues are
/// checked by the rank of `M - λI`. If the eigenvalue solver fails, the
/// matrix is powered instead.
pub fn is_power_bounded(m: &CMatrix, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(Error::param("amplification matrix must be square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("amplification matrix has non-finite entries".into()));
    }
    let Some(eigs) = eigenvalues(m) else {
        return Ok(powering_bounded(m));
    };
    if eigs.iter().any(|l| l.norm() > 1.0 + tol) {
        return Ok(false);
    }
    let scale = m.norm();
    let cluster = tol.sqrt().max(1e-6);
    let unit: Vec<Complex64> = eigs
        .iter()
        .copied()
        .filter(|l| (l.norm() - 1.0).abs() <= tol)
        .collect();
    let n = m.nrows();
    for (i, &l) in unit.iter().enumerate() {
        let mult = unit.iter().filter(|x| (**x - l).norm() <= cluster).count();
        if mult < 2 || unit[..i].iter().any(|x| (*x - l).norm() <= cluster) {
            continue;
        }
        let shifted = m - CMatrix::identity(n, n) * l;
        if n - numerical_rank(&shifted, scale) < mult {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rectangular lattice over the `z₂` plane. Points are placed
/// symmetrically about each range midpoint so that a range symmetric about
/// zero yields exactly conjugate pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| mid + half * ((2 * i) as f64 - d) / d)
        .collect()
}

impl GridSpec {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        if n_re == 0 || n_im == 0 {
            return Err(Error::param("grid needs at least one point per axis"));
        }
        if n_re.saturating_mul(n_im) > MAX_GRID_POINTS {
            return Err(Error::Capacity(format!(
                "grid {n_re}x{n_im} exceeds {MAX_GRID_POINTS} points"
            )));
        }
        if !(re.0 <= re.1 && im.0 <= im.1) || ![re.0, re.1, im.0, im.1].iter().all(|x| x.is_finite()) {
            return Err(Error::param("grid ranges must be finite and ordered"));
        }
        Ok(Self { re, im, n_re, n_im })
    }

    pub fn re_values(&self) -> Vec<f64> {
        lattice(self.re.0, self.re.1, self.n_re)
    }

    pub fn im_values(&self) -> Vec<f64> {
        lattice(self.im.0, self.im.1, self.n_im)
    }
}

/// Stable set of a fixed `(z₁, α)` over a `z₂` grid. `mask[i][j]` is the
/// point `re[j] + i·im[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySlice {
    pub z1: Complex64,
    pub alpha: f64,
    pub grid: GridSpec,
    pub mask: Vec<Vec<bool>>,
    /// Points where the analysis failed (marked unstable).
    pub failures: usize,
}

impl StabilitySlice {
    pub fn stable_count(&self) -> usize {
        self.mask.iter().flatten().filter(|s| **s).count()
    }

    /// Stable area in `z₂` units (cell count times cell area).
    pub fn stable_area(&self) -> f64 {
        let dx = if self.grid.n_re > 1 {
            (self.grid.re.1 - self.grid.re.0) / (self.grid.n_re - 1) as f64
        } else {
            1.0
        };
        let dy = if self.grid.n_im > 1 {
            (self.grid.im.1 - self.grid.im.0) / (self.grid.n_im - 1) as f64
        } else {
            1.0
        };
        self.stable_count() as f64 * dx * dy
    }

    /// Every stable point of `other` is stable here and this set is larger.
    pub fn strictly_contains(&self, other: &StabilitySlice) -> bool {
        if self.grid != other.grid {
            return false;
        }
        let subset = self
            .mask
            .iter()
            .flatten()
            .zip(other.mask.iter().flatten())
            .all(|(a, b)| *a || !*b);
        subset && self.stable_count() > other.stable_count()
    }
}

/// What a slice scans.
#[derive(Clone, Copy)]
pub enum SliceMethod<'a> {
    Single(&'a MethodCoefficients),
    Composite {
        prop: &'a MethodCoefficients,
        iter: &'a MethodCoefficients,
        kappa: usize,
    },
}

impl SliceMethod<'_> {
    fn amp(&self, z1: Complex64, z2: Complex64, alpha: f64) -> Result<AmpMatrix> {
        match *self {
            SliceMethod::Single(m) => amplification_matrix(m, z1, z2, alpha),
            SliceMethod::Composite { prop, iter, kappa } => {
                composite_amplification_matrix(prop, iter, kappa, z1, z2)
            }
        }
    }

    fn real_coefficients(&self) -> bool {
        let real = |m: &MethodCoefficients| m.spec.nodes.is_real();
        match *self {
            SliceMethod::Single(m) => real(m),
            SliceMethod::Composite { prop, iter, .. } => real(prop) && real(iter),
        }
    }
}

/// Scan `z₂` over `grid` at fixed `z₁`, `α`. Rows run in parallel and are
/// assembled by index. For real `z₁`, real nodes and an imaginary range
/// symmetric about zero, the upper half is computed and mirrored, which is
/// exact because the scalar problem is conjugate symmetric.
pub fn stability_slice(
    method: SliceMethod<'_>,
    z1: Complex64,
    alpha: f64,
    grid: GridSpec,
    tol: f64,
) -> Result<StabilitySlice> {
    check_finite(z1, c(0.0), alpha)?;
    // Configuration errors surface once instead of as per-point failures.
    method.amp(z1, c(0.0), alpha)?;
    let re = grid.re_values();
    let im = grid.im_values();
    let n_im = grid.n_im;
    let mirror = z1.im == 0.0 && method.real_coefficients() && grid.im.0 == -grid.im.1;

    let rows: Vec<usize> = if mirror {
        (0..n_im).filter(|&i| 2 * i + 1 >= n_im).collect()
    } else {
        (0..n_im).collect()
    };
    let computed: Vec<(Vec<bool>, usize)> = rows
        .par_iter()
        .map(|&i| {
            let mut fails = 0;
            let row = re
                .iter()
                .map(|&x| {
                    let z2 = Complex64::new(x, im[i]);
                    match method.amp(z1, z2, alpha).and_then(|a| is_power_bounded(&a.m, tol)) {
                        Ok(s) => s,
                        Err(_) => {
                            fails += 1;
                            false
                        }
                    }
                })
                .collect();
            (row, fails)
        })
        .collect();

    let mut mask = vec![Vec::new(); n_im];
    let mut failures = 0;
    for (&i, (row, f)) in rows.iter().zip(computed) {
        failures += f;
        let partner = n_im - 1 - i;
        if mirror && partner != i {
            mask[partner] = row.clone();
            failures += f;
        }
        mask[i] = row;
    }
    Ok(StabilitySlice {
        z1,
        alpha,
        grid,
        mask,
        failures,
    })
}
