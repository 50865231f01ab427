use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use super::partitioned::{check_iterator_pair, combine_values, copied_input};
use super::{check_output, BlockState, UnpartitionedProblem};
use crate::error::{Error, Result};
use crate::expansion::{MethodCoefficients, MethodFamily, OutputCoefficients, StencilMember};
use crate::linalg::{c, CVector, FnOperator};
use crate::phi::{phi_combo, PhiComboRequest, DEFAULT_MAX_KRYLOV_DIM};

pub const DEFAULT_KRYLOV_TOLERANCE: f64 = 1e-11;

/// Unpartitioned stepper: every output is
/// `y_b + η φ_1(ηA)(rF_b + d_0) + Σ_{ν≥1} η^{ν+1} φ_{ν+1}(ηA) d_ν` with
/// `A = rJ(y_b)` and `d_ν` the derivatives of the remainder interpolant.
pub struct UnpartitionedStepper<'p, P: UnpartitionedProblem + ?Sized> {
    problem: &'p P,
    r: f64,
    pub tolerance: f64,
    pub max_krylov_dim: usize,
    rhs_evals: AtomicUsize,
    steps: usize,
}

/// Outputs that can share one projection: same base data and remainder
/// weights, differing only in `η`.
fn same_expansion(a: &OutputCoefficients, b: &OutputCoefficients) -> bool {
    a.value_weights == b.value_weights
        && a.stencil == b.stencil
        && a.deriv_weights == b.deriv_weights
}

impl<'p, P: UnpartitionedProblem + ?Sized> UnpartitionedStepper<'p, P> {
    pub fn new(problem: &'p P, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("node radius must be positive, got {r}")));
        }
        Ok(Self {
            problem,
            r,
            tolerance: DEFAULT_KRYLOV_TOLERANCE,
            max_krylov_dim: DEFAULT_MAX_KRYLOV_DIM,
            rhs_evals: AtomicUsize::new(0),
            steps: 0,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.rhs_evals.load(Ordering::Relaxed)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn rhs(&self, y: &CVector) -> CVector {
        self.rhs_evals.fetch_add(1, Ordering::Relaxed);
        self.problem.rhs(y)
    }

    /// Evaluate a group of outputs sharing base and remainder weights.
    fn project(
        &self,
        group: &[&OutputCoefficients],
        y: &[CVector],
        f_in: &mut [Option<CVector>],
        y_out: &[Option<CVector>],
        f_out: &[Option<CVector>],
    ) -> Result<Vec<CVector>> {
        let lead = group[0];
        let r = self.r;
        let yb = combine_values(&lead.value_weights, y);
        let fb = match copied_base(lead) {
            Some(k) => {
                if f_in[k].is_none() {
                    f_in[k] = Some(self.rhs(&y[k]));
                }
                f_in[k].clone().expect("base rhs")
            }
            None => self.rhs(&yb),
        };

        if group.iter().all(|o| o.eta == c(0.0)) {
            return Ok(vec![yb; group.len()]);
        }

        let mut remainders = Vec::with_capacity(lead.stencil.len());
        for member in &lead.stencil {
            let (ym, fm) = match *member {
                StencilMember::Input(k) => {
                    if f_in[k].is_none() {
                        f_in[k] = Some(self.rhs(&y[k]));
                    }
                    (&y[k], f_in[k].as_ref().expect("input rhs"))
                }
                StencilMember::Output(k) => (
                    y_out[k].as_ref().expect("earlier output"),
                    f_out[k].as_ref().expect("earlier output rhs"),
                ),
            };
            let jdy = self.problem.jacobian_action(&yb, &(ym - &yb));
            remainders.push((fm - &fb - jdy) * c(r));
        }

        let dim = yb.len();
        let mut vectors = vec![CVector::zeros(dim); lead.stencil.len() + 1];
        for (nu, weights) in lead.deriv_weights.iter().enumerate() {
            for (m, rm) in remainders.iter().enumerate() {
                if weights[m] != c(0.0) {
                    vectors[nu + 1].axpy(weights[m], rm, c(1.0));
                }
            }
        }
        vectors[1].axpy(c(r), &fb, c(1.0));

        let mut order: Vec<usize> = (0..group.len()).filter(|&i| group[i].eta != c(0.0)).collect();
        order.sort_by(|&a, &b| group[a].eta.norm().total_cmp(&group[b].eta.norm()));
        let taus: Vec<Complex64> = order.iter().map(|&i| group[i].eta).collect();

        let op = FnOperator::new(dim, |v: &CVector| self.problem.jacobian_action(&yb, v) * c(r));
        let mut req = PhiComboRequest::new(&op, &vectors, &taus, self.tolerance);
        req.max_dim = self.max_krylov_dim;
        let combos = phi_combo(&req)?;

        let mut out = vec![yb.clone(); group.len()];
        for (slot, combo) in order.into_iter().zip(combos) {
            out[slot] += combo;
        }
        Ok(out)
    }

    pub fn step_unpartitioned(
        &mut self,
        coeffs: &MethodCoefficients,
        state: &BlockState,
    ) -> Result<BlockState> {
        state.validate(Some(self.problem.dim()))?;
        if coeffs.family != MethodFamily::Block || state.q() != coeffs.q() {
            return Err(Error::param("state and method block sizes differ"));
        }
        if state.r != self.r {
            return Err(Error::State("state radius differs from stepper radius".into()));
        }
        let q = coeffs.q();
        let alpha = coeffs.alpha();
        let step_index = self.steps + usize::from(alpha > 0.0);
        let mut f_in = state.nonlin.clone();
        let mut y_out: Vec<Option<CVector>> = vec![None; q];
        let mut f_out: Vec<Option<CVector>> = vec![None; q];

        if coeffs.is_parallel() {
            let mut done = vec![false; q];
            for j in 0..q {
                if done[j] {
                    continue;
                }
                let members: Vec<usize> = (j..q)
                    .filter(|&i| !done[i] && same_expansion(&coeffs.outputs[j], &coeffs.outputs[i]))
                    .collect();
                let group: Vec<&OutputCoefficients> = members.iter().map(|&i| &coeffs.outputs[i]).collect();
                let vals = self.project(&group, &state.y, &mut f_in, &y_out, &f_out)?;
                for (i, v) in members.into_iter().zip(vals) {
                    check_output(&v, step_index)?;
                    y_out[i] = Some(v);
                    done[i] = true;
                }
            }
        } else {
            let mut needed = vec![false; q];
            for o in &coeffs.outputs {
                for m in &o.stencil {
                    if let StencilMember::Output(k) = m {
                        needed[*k] = true;
                    }
                }
            }
            for j in 0..q {
                let v = self
                    .project(&[&coeffs.outputs[j]], &state.y, &mut f_in, &y_out, &f_out)?
                    .remove(0);
                check_output(&v, step_index)?;
                if needed[j] {
                    f_out[j] = Some(self.rhs(&v));
                }
                y_out[j] = Some(v);
            }
        }

        for (j, o) in coeffs.outputs.iter().enumerate() {
            if f_out[j].is_none() {
                if let Some(k) = copied_input(o) {
                    f_out[j] = f_in[k].clone();
                }
            }
        }
        self.steps = step_index;
        Ok(BlockState {
            y: y_out.into_iter().map(|v| v.expect("every output computed")).collect(),
            nonlin: f_out,
            t: state.t + self.r * alpha,
            r: self.r,
        })
    }

    pub fn step_composite(
        &mut self,
        prop: &MethodCoefficients,
        iter: &MethodCoefficients,
        kappa: usize,
        state: &BlockState,
    ) -> Result<BlockState> {
        if kappa > 0 {
            check_iterator_pair(prop, iter)?;
        }
        let mut next = self.step_unpartitioned(prop, state)?;
        for _ in 0..kappa {
            next = self.step_unpartitioned(iter, &next)?;
        }
        Ok(next)
    }

    pub fn bootstrap_initial_block(
        &mut self,
        iter: &MethodCoefficients,
        y0: &CVector,
        t0: f64,
        k: usize,
    ) -> Result<BlockState> {
        super::partitioned::check_iterator(iter)?;
        let z1 = iter.nodes()[0];
        let mut state = BlockState::constant(y0, iter.q(), t0 - self.r * z1.re, self.r)?;
        for _ in 0..k {
            state = self.step_unpartitioned(iter, &state)?;
        }
        Ok(state)
    }
}

/// `L_y(b)` is a single input when the value weights are a unit vector.
fn copied_base(o: &OutputCoefficients) -> Option<usize> {
    let unit = o
        .value_weights
        .iter()
        .enumerate()
        .all(|(k, w)| if k == o.base { *w == c(1.0) } else { *w == c(0.0) });
    unit.then_some(o.base)
}
