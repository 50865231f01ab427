//! Adams φ-expansion coefficients for exponential polynomial block methods.
//!
//! Output `j` of a method is
//!
//! ```text
//! y_j = φ_0(rη_j L) Σ_k a_jk y_k + Σ_ν η_j^{ν+1} φ_{ν+1}(rη_j L) Σ_m c_j[ν][m] (r N)_m
//! ```
//!
//! where the `m` sum runs over the stencil of output `j` (inputs and, for
//! serial strategies, previously computed outputs). Indices are zero-based
//! throughout; the strategy parameter `ℓ` keeps its one-based meaning.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::nodes::{equispaced_history_nodes, fd_weights, legendre_epbm_nodes, NodeSet};

/// Stencil-selection strategy for the nonlinear interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Parallel maximal-fixed-cardinality.
    Pmfc(usize),
    /// Serial maximal-fixed-cardinality.
    Smfc(usize),
    /// Serial maximal-variable-cardinality.
    Smvc(usize),
}

impl Strategy {
    pub fn ell(self) -> usize {
        match self {
            Strategy::Pmfc(l) | Strategy::Smfc(l) | Strategy::Smvc(l) => l,
        }
    }

    pub fn is_parallel(self) -> bool {
        matches!(self, Strategy::Pmfc(_))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Pmfc(l) => write!(f, "PMFC_{l}"),
            Strategy::Smfc(l) => write!(f, "SMFC_{l}"),
            Strategy::Smvc(l) => write!(f, "SMVC_{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partitioning {
    Partitioned,
    Unpartitioned,
}

/// Input and output index sets of one output's nonlinear interpolant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
}

/// Index sets for outputs `j = 0..q`.
pub fn index_sets(strategy: Strategy, q: usize) -> Result<Vec<IndexSets>> {
    let ell = strategy.ell();
    if q == 0 || ell == 0 || ell > q {
        return Err(Error::param(format!("{strategy} needs 1 <= l <= q (q={q})")));
    }
    let l0 = ell - 1;
    Ok((0..q)
        .map(|j| match strategy {
            Strategy::Pmfc(_) => IndexSets {
                input: (l0..q).collect(),
                output: vec![],
            },
            Strategy::Smfc(_) => IndexSets {
                input: (j.max(l0)..q).collect(),
                output: (l0..j).collect(),
            },
            Strategy::Smvc(_) => IndexSets {
                input: (l0..q).collect(),
                output: (l0..j).collect(),
            },
        })
        .collect())
}

/// Full parameterisation of an explicit Adams EPBM.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub nodes: NodeSet,
    pub strategy: Strategy,
    /// `k(j)`: output `j` expands about `b_j = z_{k(j)}`.
    pub endpoints: Vec<usize>,
    pub alpha: f64,
    pub partitioning: Partitioning,
}

impl MethodSpec {
    pub fn new(
        nodes: NodeSet,
        strategy: Strategy,
        endpoints: Vec<usize>,
        alpha: f64,
        partitioning: Partitioning,
    ) -> Result<Self> {
        let spec = Self {
            nodes,
            strategy,
            endpoints,
            alpha,
            partitioning,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Build a spec from endpoint values; each must coincide with a node.
    pub fn with_endpoint_values(
        nodes: NodeSet,
        strategy: Strategy,
        endpoints: &[Complex64],
        alpha: f64,
        partitioning: Partitioning,
    ) -> Result<Self> {
        let idx = endpoints
            .iter()
            .map(|b| {
                nodes
                    .nodes()
                    .iter()
                    .position(|z| (z - b).norm() <= 1e-14)
                    .ok_or_else(|| Error::config(format!("endpoint {b} is not a node")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, strategy, idx, alpha, partitioning)
    }

    pub fn q(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.q();
        index_sets(self.strategy, q)?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::param(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if self.endpoints.len() != q {
            return Err(Error::config(format!(
                "expected {q} endpoints, got {}",
                self.endpoints.len()
            )));
        }
        if let Some(k) = self.endpoints.iter().find(|&&k| k >= q) {
            return Err(Error::config(format!("endpoint index {k} is not a node")));
        }
        if matches!(self.strategy, Strategy::Smvc(_)) && self.alpha == 0.0 {
            return Err(Error::config(
                "SMVC cannot be used with alpha = 0: input and output nodes overlap",
            ));
        }
        Ok(())
    }

    /// Bit-exact identity used as a cache key.
    fn key(&self) -> SpecKey {
        SpecKey {
            nodes: self
                .nodes
                .nodes()
                .iter()
                .map(|z| (z.re.to_bits(), z.im.to_bits()))
                .collect(),
            strategy: self.strategy,
            endpoints: self.endpoints.clone(),
            alpha: self.alpha.to_bits(),
            partitioning: self.partitioning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SpecKey {
    nodes: Vec<(u64, u64)>,
    strategy: Strategy,
    endpoints: Vec<usize>,
    alpha: u64,
    partitioning: Partitioning,
}

/// Legendre EPBM: `{-1} ∪ zeros of P_{q-1}`, PMFC_2, `b_j = z_1`.
pub fn legendre_spec(q: usize, alpha: f64, partitioning: Partitioning) -> Result<MethodSpec> {
    let nodes = legendre_epbm_nodes(q)?;
    MethodSpec::new(nodes, Strategy::Pmfc(2), vec![0; q], alpha, partitioning)
}

/// Which data layout the coefficients are meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodFamily {
    /// `q` inputs, `q` outputs.
    Block,
    /// One new value from a `p`-long history.
    AdamsBashforth,
}

/// Where a stencil member's data lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilMember {
    Input(usize),
    Output(usize),
}

/// Coefficients of a single output.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputCoefficients {
    /// Output node index `j`.
    pub node: usize,
    /// `η_j = z_j + α - b_j`.
    pub eta: Complex64,
    /// `k(j)`.
    pub base: usize,
    /// `L_y(b_j)` weights over all inputs.
    pub value_weights: Vec<Complex64>,
    pub stencil: Vec<StencilMember>,
    pub stencil_nodes: Vec<Complex64>,
    /// `deriv_weights[ν][m]`, `ν = 0..|stencil|`.
    pub deriv_weights: Vec<Vec<Complex64>>,
}

impl OutputCoefficients {
    /// Degree `g` of the derivative expansion.
    pub fn degree(&self) -> usize {
        self.stencil.len() - 1
    }

    pub fn uses_outputs(&self) -> bool {
        self.stencil.iter().any(|m| matches!(m, StencilMember::Output(_)))
    }
}

/// Coefficient-form tensors. With explicit methods and `L_y` built from
/// inputs only, `C` vanishes identically and is not stored.
///
/// `y_j = φ_0(rη_j L) Σ_k A[j][k] y_k
///      + r Σ_k φ_k(rη_j L) Σ_l (B[j][k-1][l] N_l + D[j][k-1][l] N_l^{new})`
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffForm {
    pub a: CMatrix,
    pub b: Vec<CMatrix>,
    pub d: Vec<CMatrix>,
}

/// Everything a stepper needs for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodCoefficients {
    pub spec: MethodSpec,
    pub family: MethodFamily,
    pub outputs: Vec<OutputCoefficients>,
    pub coeff_form: CoeffForm,
}

impl MethodCoefficients {
    pub fn q(&self) -> usize {
        self.spec.q()
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn nodes(&self) -> &[Complex64] {
        self.spec.nodes.nodes()
    }

    pub fn is_parallel(&self) -> bool {
        self.outputs.iter().all(|o| !o.uses_outputs())
    }

    /// Largest φ index used by any output.
    pub fn max_phi_index(&self) -> usize {
        self.outputs.iter().map(|o| o.stencil.len()).max().unwrap_or(0)
    }

    /// Inputs whose nonlinear values enter some stencil.
    pub fn needed_inputs(&self) -> Vec<usize> {
        let mut need = vec![false; self.q()];
        for o in &self.outputs {
            for m in &o.stencil {
                if let StencilMember::Input(k) = m {
                    need[*k] = true;
                }
            }
        }
        (0..self.q()).filter(|&k| need[k]).collect()
    }

    /// Distinct η values in first-appearance order.
    pub fn distinct_etas(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for o in &self.outputs {
            if !out.contains(&o.eta) {
                out.push(o.eta);
            }
        }
        out
    }
}

fn build_output(
    spec: &MethodSpec,
    j: usize,
    sets: &IndexSets,
) -> Result<OutputCoefficients> {
    let z = spec.nodes.nodes();
    let alpha = c(spec.alpha);
    let base = spec.endpoints[j];
    let b = z[base];

    let value_weights = fd_weights(z, b, 0)?.remove(0).weights;

    let mut stencil = Vec::new();
    let mut stencil_nodes = Vec::new();
    for &k in &sets.input {
        stencil.push(StencilMember::Input(k));
        stencil_nodes.push(z[k]);
    }
    for &k in &sets.output {
        let shifted = z[k] + alpha;
        if let Some(&clash) = sets.input.iter().find(|&&i| (z[i] - shifted).norm() <= 1e-14) {
            return Err(Error::config(format!(
                "output {j}: input node {clash} coincides with shifted output node {k}"
            )));
        }
        stencil.push(StencilMember::Output(k));
        stencil_nodes.push(shifted);
    }
    let g = stencil.len() - 1;
    let deriv_weights = fd_weights(&stencil_nodes, b, g)?
        .into_iter()
        .map(|row| row.weights)
        .collect();

    Ok(OutputCoefficients {
        node: j,
        eta: z[j] + alpha - b,
        base,
        value_weights,
        stencil,
        stencil_nodes,
        deriv_weights,
    })
}

fn assemble_coeff_form(q: usize, outputs: &[OutputCoefficients]) -> CoeffForm {
    let kmax = outputs.iter().map(|o| o.stencil.len()).max().unwrap_or(0);
    let mut a = CMatrix::zeros(outputs.len(), q);
    let mut b = Vec::with_capacity(outputs.len());
    let mut d = Vec::with_capacity(outputs.len());
    for (row, o) in outputs.iter().enumerate() {
        for (k, w) in o.value_weights.iter().enumerate() {
            a[(row, k)] = *w;
        }
        let mut bj = CMatrix::zeros(kmax, q);
        let mut dj = CMatrix::zeros(kmax, q);
        let mut eta_pow = c(1.0);
        for (nu, weights) in o.deriv_weights.iter().enumerate() {
            eta_pow *= o.eta;
            for (m, member) in o.stencil.iter().enumerate() {
                match member {
                    StencilMember::Input(l) => bj[(nu, *l)] += eta_pow * weights[m],
                    StencilMember::Output(l) => dj[(nu, *l)] += eta_pow * weights[m],
                }
            }
        }
        b.push(bj);
        d.push(dj);
    }
    CoeffForm { a, b, d }
}

/// Generate the coefficients of every output of a block method.
pub fn generate_coefficients(spec: &MethodSpec) -> Result<MethodCoefficients> {
    spec.validate()?;
    let sets = index_sets(spec.strategy, spec.q())?;
    let outputs = sets
        .iter()
        .enumerate()
        .map(|(j, s)| build_output(spec, j, s))
        .collect::<Result<Vec<_>>>()?;
    let coeff_form = assemble_coeff_form(spec.q(), &outputs);
    Ok(MethodCoefficients {
        spec: spec.clone(),
        family: MethodFamily::Block,
        outputs,
        coeff_form,
    })
}

/// `p`-step exponential Adams-Bashforth: history nodes `{-(p-1), …, 0}`,
/// `b = 0`, `α = 1`, one output at `τ = 1`.
pub fn eab_coefficients(p: usize) -> Result<MethodCoefficients> {
    if !(1..=8).contains(&p) {
        return Err(Error::param(format!("EAB order p={p} outside 1..=8")));
    }
    let nodes = equispaced_history_nodes(p)?;
    let spec = MethodSpec::new(
        nodes,
        Strategy::Pmfc(1),
        vec![p - 1; p],
        1.0,
        Partitioning::Partitioned,
    )?;
    let sets = index_sets(spec.strategy, p)?;
    let out = build_output(&spec, p - 1, &sets[p - 1])?;
    let outputs = vec![out];
    let coeff_form = assemble_coeff_form(p, &outputs);
    Ok(MethodCoefficients {
        spec,
        family: MethodFamily::AdamsBashforth,
        outputs,
        coeff_form,
    })
}

/// Memoises [`generate_coefficients`] by exact spec identity.
#[derive(Default)]
pub struct CoefficientCache {
    map: Mutex<HashMap<SpecKey, Arc<MethodCoefficients>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, spec: &MethodSpec) -> Result<Arc<MethodCoefficients>> {
        let key = spec.key();
        if let Some(hit) = self.map.lock().expect("coefficient cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let coeffs = Arc::new(generate_coefficients(spec)?);
        self.map
            .lock()
            .expect("coefficient cache poisoned")
            .insert(key, coeffs.clone());
        Ok(coeffs)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("coefficient cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
