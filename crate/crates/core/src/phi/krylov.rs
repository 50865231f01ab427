//! Krylov projection for linear combinations of φ-function actions,
//!
//! `Σ_k τ^k φ_k(τA) x_k`, evaluated for several `τ` from one Arnoldi
//! subspace built on the augmented operator `[[A, W], [0, J]]` with
//! `W = [x_p, …, x_1]` and `J` the upward shift.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, expm, CMatrix, CVector, LinearOperator};

pub const DEFAULT_MAX_KRYLOV_DIM: usize = 128;

/// A request for `Σ_k τ^k φ_k(τA) x_k` at each `τ` in `taus`.
pub struct PhiComboRequest<'a> {
    pub operator: &'a dyn LinearOperator,
    /// `x_0, …, x_p`.
    pub vectors: &'a [CVector],
    /// Evaluation scales, sorted by ascending magnitude.
    pub taus: &'a [Complex64],
    /// Relative accuracy target.
    pub tolerance: f64,
    pub max_dim: usize,
}

impl<'a> PhiComboRequest<'a> {
    pub fn new(
        operator: &'a dyn LinearOperator,
        vectors: &'a [CVector],
        taus: &'a [Complex64],
        tolerance: f64,
    ) -> Self {
        Self {
            operator,
            vectors,
            taus,
            tolerance,
            max_dim: DEFAULT_MAX_KRYLOV_DIM,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.operator.dim();
        if self.vectors.is_empty() {
            return Err(Error::param("phi_combo needs at least one vector"));
        }
        if let Some(bad) = self.vectors.iter().position(|v| v.len() != n) {
            return Err(Error::param(format!(
                "phi_combo vector {bad} has dimension {} but the operator has {n}",
                self.vectors[bad].len()
            )));
        }
        if self.taus.is_empty() {
            return Err(Error::param("phi_combo needs at least one tau"));
        }
        if self.taus.windows(2).any(|w| w[0].norm() > w[1].norm()) {
            return Err(Error::param("phi_combo taus must be sorted by magnitude"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("phi_combo tolerance must be positive"));
        }
        if self.max_dim == 0 {
            return Err(Error::param("phi_combo max_dim must be positive"));
        }
        Ok(())
    }
}

struct Augmented<'a> {
    op: &'a dyn LinearOperator,
    vectors: &'a [CVector],
    n: usize,
    p: usize,
}

impl Augmented<'_> {
    fn dim(&self) -> usize {
        self.n + self.p
    }

    fn apply(&self, v: &CVector) -> CVector {
        let (n, p) = (self.n, self.p);
        let top = v.rows(0, n).into_owned();
        let mut out = CVector::zeros(n + p);
        let mut head = self.op.apply(&top);
        for i in 0..p {
            let coef = v[n + i];
            if coef != c(0.0) {
                head.axpy(coef, &self.vectors[p - i], c(1.0));
            }
        }
        out.rows_mut(0, n).copy_from(&head);
        for i in 0..p.saturating_sub(1) {
            out[n + i] = v[n + i + 1];
        }
        out
    }

    fn start(&self) -> CVector {
        let mut b = CVector::zeros(self.n + self.p);
        b.rows_mut(0, self.n).copy_from(&self.vectors[0]);
        if self.p > 0 {
            b[self.n + self.p - 1] = c(1.0);
        }
        b
    }
}

/// `exp(τH) e_1` and the last component of `φ_1(τH) e_1`.
fn small_exponential(h: &CMatrix, tau: Complex64) -> Result<(CVector, Complex64)> {
    let m = h.nrows();
    let mut aug = CMatrix::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(&(h * tau));
    aug[(0, m)] = c(1.0);
    let e = expm(&aug)?;
    let exp_e1 = e.view((0, 0), (m, 1)).column(0).into_owned();
    Ok((exp_e1, e[(m - 1, m)]))
}

fn should_check(m: usize) -> bool {
    m <= 16 || m % 4 == 0
}

/// Evaluate `Σ_k τ^k φ_k(τA) x_k` for every requested `τ`.
pub fn phi_combo(req: &PhiComboRequest<'_>) -> Result<Vec<CVector>> {
    req.validate()?;
    let aug = Augmented {
        op: req.operator,
        vectors: req.vectors,
        n: req.operator.dim(),
        p: req.vectors.len() - 1,
    };
    let n = aug.n;
    let b = aug.start();
    let beta = b.norm();
    if beta == 0.0 {
        return Ok(vec![CVector::zeros(n); req.taus.len()]);
    }

    let max_dim = req.max_dim.min(aug.dim());
    let mut basis: Vec<CVector> = Vec::with_capacity(max_dim + 1);
    basis.push(b / c(beta));
    let mut hess = CMatrix::zeros(max_dim + 1, max_dim);
    let mut last_residual = f64::INFINITY;

    for j in 0..max_dim {
        let mut w = aug.apply(&basis[j]);
        // classical Gram-Schmidt with one reorthogonalisation pass
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let h = v.dotc(&w);
                hess[(i, j)] += h;
                w.axpy(-h, v, c(1.0));
            }
        }
        let h_next = w.norm();
        hess[(j + 1, j)] = c(h_next);
        let m = j + 1;
        let col_scale: f64 = (0..=j).map(|i| hess[(i, j)].norm()).sum::<f64>().max(1.0);
        let breakdown = h_next <= 1e-14 * col_scale || m == aug.dim();

        if breakdown || should_check(m) || m == max_dim {
            let hm = hess.view((0, 0), (m, m)).into_owned();
            let mut results = Vec::with_capacity(req.taus.len());
            let mut worst = 0.0f64;
            for &tau in req.taus {
                let (coords, phi1_last) = small_exponential(&hm, tau)?;
                let mut full = CVector::zeros(n);
                for (i, v) in basis.iter().take(m).enumerate() {
                    full.axpy(coords[i] * beta, &v.rows(0, n).into_owned(), c(1.0));
                }
                let est = if breakdown {
                    0.0
                } else {
                    beta * tau.norm() * h_next * phi1_last.norm()
                };
                let scale = full.norm().max(f64::MIN_POSITIVE);
                worst = worst.max(est / scale);
                results.push(full);
            }
            last_residual = worst;
            if breakdown || worst <= req.tolerance {
                return Ok(results);
            }
        }
        basis.push(w / c(h_next));
    }
    Err(Error::Convergence {
        dimension: max_dim,
        residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseOperator, DiagonalOperator, FnOperator};
    use crate::phi::build_phi_table;

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize, seed: f64) -> CVector {
        CVector::from_iterator(
            n,
            (0..n).map(|i| cz((seed * (i as f64 + 1.0)).sin(), (seed * 0.5 * i as f64).cos())),
        )
    }

    #[test]
    fn zero_operator() {
        let op = DiagonalOperator(CVector::zeros(3));
        let v = sample(3, 1.0);
        let w = sample(3, 2.0);
        let xs = [v.clone(), w.clone()];
        let taus = [cz(1.0, 0.0)];
        let out = phi_combo(&PhiComboRequest::new(&op, &xs, &taus, 1e-12)).unwrap();
        assert!((&out[0] - (v + w)).norm() < 1e-13);
    }

    #[test]
    fn negative_identity() {
        let op = FnOperator::new(4, |v: &CVector| -v);
        let v = sample(4, 0.3);
        let xs = [v.clone()];
        let taus = [cz(2.0, 0.0)];
        let out = phi_combo(&PhiComboRequest::new(&op, &xs, &taus, 1e-12)).unwrap();
        assert!((&out[0] - v * c((-2.0f64).exp())).norm() < 1e-13);
    }

    #[test]
    fn diagonal_matches_table_combination() {
        let n = 40;
        let diag = CVector::from_iterator(
            n,
            (0..n).map(|i| cz(-(i as f64) * 0.8, 0.3 * (i as f64).sin())),
        );
        let op = DiagonalOperator(diag.clone());
        let xs: Vec<CVector> = (0..4).map(|k| sample(n, 0.7 + k as f64)).collect();
        let taus = [cz(0.5, 0.0), cz(1.0, 0.0), cz(2.5, 0.0)];
        let tol = 1e-10;
        let out = phi_combo(&PhiComboRequest::new(&op, &xs, &taus, tol)).unwrap();
        for (t, &tau) in taus.iter().enumerate() {
            let table = build_phi_table(&diag, tau, 3).unwrap();
            let mut want = CVector::zeros(n);
            for (k, x) in xs.iter().enumerate() {
                want += table.phi(k).component_mul(x) * tau.powu(k as u32);
            }
            let err = (&out[t] - &want).norm() / want.norm();
            assert!(err < 10.0 * tol, "tau={tau} err={err}");
        }
    }

    #[test]
    fn dense_nonnormal_against_phi_dense() {
        let n = 6;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = cz(-1.0 - i as f64, 0.0);
            if i + 1 < n {
                a[(i, i + 1)] = cz(0.7, 0.2);
            }
        }
        let op = DenseOperator(a.clone());
        let xs: Vec<CVector> = (0..3).map(|k| sample(n, 1.1 + k as f64)).collect();
        let taus = [cz(0.8, 0.0)];
        let out = phi_combo(&PhiComboRequest::new(&op, &xs, &taus, 1e-12)).unwrap();
        let phis = crate::phi::phi_dense(&a, taus[0], 2).unwrap();
        let mut want = CVector::zeros(n);
        for (k, x) in xs.iter().enumerate() {
            want += &phis[k] * x * taus[0].powu(k as u32);
        }
        assert!((&out[0] - &want).norm() < 1e-11 * want.norm());
    }

    #[test]
    fn validation_errors() {
        let op = DiagonalOperator(CVector::zeros(3));
        let xs = [CVector::zeros(2)];
        let taus = [cz(1.0, 0.0)];
        assert!(phi_combo(&PhiComboRequest::new(&op, &xs, &taus, 1e-8)).is_err());
        let xs = [CVector::zeros(3)];
        let taus = [cz(2.0, 0.0), cz(1.0, 0.0)];
        assert!(phi_combo(&PhiComboRequest::new(&op, &xs, &taus, 1e-8)).is_err());
        let empty: [Complex64; 0] = [];
        assert!(phi_combo(&PhiComboRequest::new(&op, &xs, &empty, 1e-8)).is_err());
    }

    #[test]
    fn reports_convergence_failure() {
        let n = 400;
        let diag = CVector::from_iterator(n, (0..n).map(|i| cz(-(i as f64) * 50.0, 0.0)));
        let op = DiagonalOperator(diag);
        let xs = [CVector::from_element(n, c(1.0))];
        let taus = [cz(1.0, 0.0)];
        let mut req = PhiComboRequest::new(&op, &xs, &taus, 1e-14);
        req.max_dim = 8;
        match phi_combo(&req) {
            Err(Error::Convergence { dimension, residual }) => {
                assert_eq!(dimension, 8);
                assert!(residual > 1e-14);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
