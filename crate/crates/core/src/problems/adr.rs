//! 2-D advection-diffusion-reaction on `[0, 1]²` with homogeneous Neumann
//! boundaries, `u_t = ε∇²u + δ(u_x + u_y) + γu(u - ½)(1 - u)`.
//!
//! Second-order central differences on an `n × n` grid including the
//! boundary points; the boundary rows use mirrored ghost points.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CVector};
use crate::stepper::UnpartitionedProblem;

pub const ADR_DESK_N: usize = 48;
pub const ADR_T_FINAL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdrRegime {
    StiffLinearity,
    StiffNonlinearity,
}

impl AdrRegime {
    /// `(ε, δ, γ)`.
    pub fn params(self) -> (f64, f64, f64) {
        match self {
            AdrRegime::StiffLinearity => (1.0 / 100.0, -10.0, 100.0),
            AdrRegime::StiffNonlinearity => (1.0 / 10000.0, -1.0 / 10.0, 1000.0),
        }
    }
}

impl fmt::Display for AdrRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdrRegime::StiffLinearity => "stiff-lin",
            AdrRegime::StiffNonlinearity => "stiff-nonlin",
        })
    }
}

impl FromStr for AdrRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stiff-lin" | "stiff-linearity" => Ok(AdrRegime::StiffLinearity),
            "stiff-nonlin" | "stiff-nonlinearity" => Ok(AdrRegime::StiffNonlinearity),
            other => Err(Error::config(format!("unknown ADR regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdrProblem {
    pub n: usize,
    pub regime: AdrRegime,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub t_final: f64,
    h: f64,
    initial_state: CVector,
}

pub fn make_adr(n: usize, regime: AdrRegime) -> Result<AdrProblem> {
    if !(32..=200).contains(&n) {
        return Err(Error::param(format!("ADR grid size must be in 32..=200, got {n}")));
    }
    let (epsilon, delta, gamma) = regime.params();
    let h = 1.0 / (n - 1) as f64;
    let initial_state = CVector::from_fn(n * n, |idx, _| {
        let (x, y) = ((idx % n) as f64 * h, (idx / n) as f64 * h);
        let b = x * y * (1.0 - x) * (1.0 - y);
        c(256.0 * b * b + 0.3)
    });
    Ok(AdrProblem {
        n,
        regime,
        epsilon,
        delta,
        gamma,
        t_final: ADR_T_FINAL,
        h,
        initial_state,
    })
}

impl AdrProblem {
    pub fn initial_state(&self) -> &CVector {
        &self.initial_state
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `ε∇²v + δ(v_x + v_y)` with mirrored ghost points.
    fn linear_part(&self, v: &CVector) -> CVector {
        let n = self.n;
        let (e, d) = (self.epsilon / (self.h * self.h), self.delta / (2.0 * self.h));
        let at = |i: usize, j: usize| v[i + n * j];
        // Mirror: index -1 -> 1, n -> n-2.
        let lo = |i: usize| if i == 0 { 1 } else { i - 1 };
        let hi = |i: usize| if i == n - 1 { n - 2 } else { i + 1 };
        CVector::from_fn(n * n, |idx, _| {
            let (i, j) = (idx % n, idx / n);
            let u = at(i, j);
            let (w, ea) = (at(lo(i), j), at(hi(i), j));
            let (s, no) = (at(i, lo(j)), at(i, hi(j)));
            ((w - u) + (ea - u) + (s - u) + (no - u)) * e + ((ea - w) + (no - s)) * d
        })
    }
}

fn reaction(u: Complex64) -> Complex64 {
    u * (u - 0.5) * (c(1.0) - u)
}

fn reaction_derivative(u: Complex64) -> Complex64 {
    -u * u * 3.0 + u * 3.0 - 0.5
}

impl UnpartitionedProblem for AdrProblem {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn rhs(&self, y: &CVector) -> CVector {
        let mut out = self.linear_part(y);
        for (o, u) in out.iter_mut().zip(y.iter()) {
            *o += reaction(*u) * self.gamma;
        }
        out
    }

    fn jacobian_action(&self, base: &CVector, v: &CVector) -> CVector {
        let mut out = self.linear_part(v);
        for ((o, u), dv) in out.iter_mut().zip(base.iter()).zip(v.iter()) {
            *o += reaction_derivative(*u) * *dv * self.gamma;
        }
        out
    }
}
