use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_output, BlockState, SemilinearProblem};
use crate::error::{Error, Result};
use crate::expansion::{MethodCoefficients, MethodFamily, OutputCoefficients, StencilMember};
use crate::linalg::{c, CVector};
use crate::phi::{build_phi_table, PhiTable};

/// Partitioned stepper bound to one problem and one node radius.
///
/// φ tables are built lazily per distinct `η` and reused for every step;
/// a new radius needs a new stepper.
pub struct Stepper<'p, P: SemilinearProblem + ?Sized> {
    problem: &'p P,
    r: f64,
    scaled: CVector,
    tables: HashMap<(u64, u64), Arc<PhiTable>>,
    pool: Option<rayon::ThreadPool>,
    evals: AtomicUsize,
    steps: usize,
    coherence_checked: bool,
}

fn eta_key(eta: Complex64) -> (u64, u64) {
    (eta.re.to_bits(), eta.im.to_bits())
}

/// `φ_0 .* ly + Σ_ν η^{ν+1} φ_{ν+1} .* (r Σ_m c[ν][m] N_m)`.
fn evaluate_output<'a>(
    o: &OutputCoefficients,
    table: &PhiTable,
    ly: CVector,
    r: f64,
    data: impl Fn(StencilMember) -> &'a CVector,
) -> CVector {
    if o.eta == c(0.0) {
        return ly;
    }
    let dim = ly.len();
    let mut out = table.phi(0).component_mul(&ly);
    let mut scale = c(r);
    let mut deriv = CVector::zeros(dim);
    for (nu, weights) in o.deriv_weights.iter().enumerate() {
        scale *= o.eta;
        deriv.fill(c(0.0));
        for (m, member) in o.stencil.iter().enumerate() {
            if weights[m] != c(0.0) {
                deriv.axpy(weights[m], data(*member), c(1.0));
            }
        }
        let phi = table.phi(nu + 1);
        for i in 0..dim {
            out[i] += phi[i] * deriv[i] * scale;
        }
    }
    out
}

pub(crate) fn combine_values(weights: &[Complex64], y: &[CVector]) -> CVector {
    let mut ly = CVector::zeros(y[0].len());
    for (w, v) in weights.iter().zip(y) {
        if *w != c(0.0) {
            ly.axpy(*w, v, c(1.0));
        }
    }
    ly
}

/// Output `j` reproduces input `k(j)` exactly when it is an unweighted copy
/// taken at zero step scale.
pub(crate) fn copied_input(o: &OutputCoefficients) -> Option<usize> {
    let unit = o
        .value_weights
        .iter()
        .enumerate()
        .all(|(k, w)| if k == o.base { *w == c(1.0) } else { *w == c(0.0) });
    (o.eta == c(0.0) && unit).then_some(o.base)
}

impl<'p, P: SemilinearProblem + ?Sized> Stepper<'p, P> {
    /// `threads <= 1` runs everything on the calling thread.
    pub fn new(problem: &'p P, r: f64, threads: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("node radius must be positive, got {r}")));
        }
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            problem,
            r,
            scaled: problem.linear_diag() * c(r),
            tables: HashMap::new(),
            pool,
            evals: AtomicUsize::new(0),
            steps: 0,
            coherence_checked: false,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Fresh nonlinear evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    /// Propagator steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn eval(&self, t: Complex64, y: &CVector) -> CVector {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.problem.nonlinear(t, y)
    }

    fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).map(f).collect(),
        }
    }

    fn table(&mut self, eta: Complex64, k_max: usize) -> Result<Arc<PhiTable>> {
        let key = eta_key(eta);
        if let Some(t) = self.tables.get(&key) {
            if t.k_max() >= k_max {
                return Ok(t.clone());
            }
        }
        let t = Arc::new(build_phi_table(&self.scaled, eta, k_max)?);
        self.tables.insert(key, t.clone());
        Ok(t)
    }

    fn tables_for(&mut self, coeffs: &MethodCoefficients) -> Result<Vec<Arc<PhiTable>>> {
        let k_max = coeffs.max_phi_index();
        coeffs.outputs.iter().map(|o| self.table(o.eta, k_max)).collect()
    }

    fn check_state(&self, coeffs: &MethodCoefficients, state: &BlockState) -> Result<()> {
        state.validate(Some(self.problem.dim()))?;
        if coeffs.family != MethodFamily::Block {
            return Err(Error::config("block step needs block-method coefficients"));
        }
        if state.q() != coeffs.q() {
            return Err(Error::param(format!(
                "state holds {} values but the method has q={}",
                state.q(),
                coeffs.q()
            )));
        }
        if state.r != self.r {
            return Err(Error::State(format!(
                "state radius {} differs from stepper radius {}",
                state.r, self.r
            )));
        }
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn check_coherence(&mut self, coeffs: &MethodCoefficients, state: &BlockState) -> Result<()> {
        if self.coherence_checked {
            return Ok(());
        }
        self.coherence_checked = true;
        for (j, cached) in state.nonlin.iter().enumerate() {
            if let Some(n) = cached {
                let t = c(state.t) + coeffs.nodes()[j] * state.r;
                let fresh = self.problem.nonlinear(t, &state.y[j]);
                if (&fresh - n).norm() > 1e-12 * fresh.norm().max(1.0) {
                    return Err(Error::State(format!("stale nonlinear cache at node {j}")));
                }
            }
        }
        Ok(())
    }

    #[cfg(not(debug_assertions))]
    fn check_coherence(&mut self, _: &MethodCoefficients, _: &BlockState) -> Result<()> {
        Ok(())
    }

    /// One block step. Parallel (PMFC) methods evaluate nonlinear terms and
    /// outputs concurrently; serial methods go in ascending output order.
    pub fn step_partitioned(
        &mut self,
        coeffs: &MethodCoefficients,
        state: &BlockState,
    ) -> Result<BlockState> {
        self.check_state(coeffs, state)?;
        self.check_coherence(coeffs, state)?;
        let z = coeffs.nodes();
        let r = self.r;
        let alpha = coeffs.alpha();
        let step_index = self.steps + usize::from(alpha > 0.0);

        let missing: Vec<usize> = coeffs
            .needed_inputs()
            .into_iter()
            .filter(|&k| state.nonlin[k].is_none())
            .collect();
        let fresh = self.map(missing.len(), |i| {
            let k = missing[i];
            self.eval(c(state.t) + z[k] * r, &state.y[k])
        });
        let mut n_in = state.nonlin.clone();
        for (k, v) in missing.iter().zip(fresh) {
            n_in[*k] = Some(v);
        }

        let tables = self.tables_for(coeffs)?;
        let t_new = state.t + r * alpha;
        let q = coeffs.q();
        let input = |k: usize| n_in[k].as_ref().expect("input nonlinear value");

        let (outputs, n_out) = if coeffs.is_parallel() {
            let outputs = self.map(q, |j| {
                let o = &coeffs.outputs[j];
                let ly = combine_values(&o.value_weights, &state.y);
                evaluate_output(o, &tables[j], ly, r, |m| match m {
                    StencilMember::Input(k) => input(k),
                    StencilMember::Output(_) => unreachable!("parallel stencil"),
                })
            });
            (outputs, vec![None; q])
        } else {
            let mut needed_out = vec![false; q];
            for o in &coeffs.outputs {
                for m in &o.stencil {
                    if let StencilMember::Output(k) = m {
                        needed_out[*k] = true;
                    }
                }
            }
            let mut outputs: Vec<CVector> = Vec::with_capacity(q);
            let mut n_out: Vec<Option<CVector>> = vec![None; q];
            for (j, o) in coeffs.outputs.iter().enumerate() {
                let ly = combine_values(&o.value_weights, &state.y);
                let v = evaluate_output(o, &tables[j], ly, r, |m| match m {
                    StencilMember::Input(k) => input(k),
                    StencilMember::Output(k) => n_out[k].as_ref().expect("earlier output"),
                });
                check_output(&v, step_index)?;
                if needed_out[j] {
                    n_out[j] = Some(self.eval(c(t_new) + z[j] * r, &v));
                }
                outputs.push(v);
            }
            (outputs, n_out)
        };

        for v in &outputs {
            check_output(v, step_index)?;
        }
        let mut nonlin = n_out;
        for (j, o) in coeffs.outputs.iter().enumerate() {
            if nonlin[j].is_none() {
                if let Some(k) = copied_input(o) {
                    nonlin[j] = n_in[k].clone();
                }
            }
        }
        self.steps = step_index;
        Ok(BlockState {
            y: outputs,
            nonlin,
            t: t_new,
            r,
        })
    }

    /// `κ` iterator sweeps after one propagator step.
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
        let mut next = self.step_partitioned(prop, state)?;
        for _ in 0..kappa {
            next = self.step_partitioned(iter, &next)?;
        }
        Ok(next)
    }

    /// `M^k c` with `c` the constant block `y0`; `y0` is the solution at
    /// `t0`, placed at node `z_1`.
    pub fn bootstrap_initial_block(
        &mut self,
        iter: &MethodCoefficients,
        y0: &CVector,
        t0: f64,
        k: usize,
    ) -> Result<BlockState> {
        check_iterator(iter)?;
        let z1 = iter.nodes()[0];
        if z1.im != 0.0 {
            return Err(Error::config("bootstrap needs a real first node"));
        }
        let mut state = BlockState::constant(y0, iter.q(), t0 - self.r * z1.re, self.r)?;
        for _ in 0..k {
            state = self.step_partitioned(iter, &state)?;
        }
        Ok(state)
    }

    /// One exponential Adams-Bashforth step with stepsize `r`.
    /// `history` holds `N` at `t_n - (p-1) r, …, t_n`.
    pub fn step_eab(
        &mut self,
        coeffs: &MethodCoefficients,
        history: &[CVector],
        y_n: &CVector,
    ) -> Result<CVector> {
        if coeffs.family != MethodFamily::AdamsBashforth {
            return Err(Error::config("step_eab needs Adams-Bashforth coefficients"));
        }
        let p = coeffs.q();
        if history.len() < p {
            return Err(Error::State(format!(
                "EAB{p} needs {p} history values, got {}",
                history.len()
            )));
        }
        let dim = self.problem.dim();
        if y_n.len() != dim || history.iter().any(|v| v.len() != dim) {
            return Err(Error::param("EAB data has the wrong dimension"));
        }
        let hist = &history[history.len() - p..];
        let o = &coeffs.outputs[0];
        let table = self.table(o.eta, coeffs.max_phi_index())?;
        let out = evaluate_output(o, &table, y_n.clone(), self.r, |m| match m {
            StencilMember::Input(k) => &hist[k],
            StencilMember::Output(_) => unreachable!("EAB uses history only"),
        });
        check_output(&out, self.steps + 1)?;
        self.steps += 1;
        Ok(out)
    }

    /// Fresh `N(t, y)`, counted.
    pub fn nonlinear(&self, t: f64, y: &CVector) -> CVector {
        self.eval(c(t), y)
    }

    /// ETDRK2 with stepsize `r`:
    /// `Y = φ_0 y + hφ_1 N_n`, `y+ = Y + hφ_2 (N(t+h, Y) - N_n)`.
    pub fn step_etdrk2(&mut self, y: &CVector, t: f64) -> Result<CVector> {
        if y.len() != self.problem.dim() {
            return Err(Error::param("ETDRK2 state has the wrong dimension"));
        }
        let h = self.r;
        let table = self.table(c(1.0), 2)?;
        let n0 = self.eval(c(t), y);
        let (p0, p1, p2) = (table.phi(0), table.phi(1), table.phi(2));
        let mut stage = CVector::zeros(y.len());
        for i in 0..y.len() {
            stage[i] = p0[i] * y[i] + p1[i] * n0[i] * h;
        }
        let n1 = self.eval(c(t + h), &stage);
        let mut out = stage;
        for i in 0..y.len() {
            out[i] += p2[i] * (n1[i] - n0[i]) * h;
        }
        check_output(&out, self.steps + 1)?;
        self.steps += 1;
        Ok(out)
    }
}

pub(crate) fn check_iterator(iter: &MethodCoefficients) -> Result<()> {
    if iter.alpha() != 0.0 {
        return Err(Error::config("iterator must have alpha = 0"));
    }
    if iter.spec.endpoints.iter().any(|&k| k != 0) {
        return Err(Error::config("iterator endpoints must all be z_1"));
    }
    if matches!(iter.spec.strategy, crate::expansion::Strategy::Smvc(_)) {
        return Err(Error::config("iterator must use PMFC or SMFC"));
    }
    Ok(())
}

pub(crate) fn check_iterator_pair(prop: &MethodCoefficients, iter: &MethodCoefficients) -> Result<()> {
    if prop.nodes() != iter.nodes() {
        return Err(Error::config("propagator and iterator must share their nodes"));
    }
    if iter.alpha() != 0.0 {
        return Err(Error::config("iterator must have alpha = 0"));
    }
    Ok(())
}
