//! Node sets, finite-difference weights and Lagrange interpolation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CVector};

/// How a node set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// `{-1} ∪ zeros of P_{q-1}`.
    LegendreEpbm,
    /// `i(1 - 2(j-1)/(m-1))`, generation order kept.
    ImaginaryEquispaced,
    /// Unit-spaced history lattice `{-(p-1), …, -1, 0}` used by exponential
    /// Adams-Bashforth. Exempt from the unit-disk normalisation so that the
    /// node radius equals the stepsize.
    EquispacedReal,
    Custom,
}

/// Ordered quadrature / interpolation nodes in local time.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    nodes: Vec<Complex64>,
    kind: NodeKind,
}

fn distinct(nodes: &[Complex64]) -> bool {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return false;
            }
        }
    }
    true
}

impl NodeSet {
    /// Build a validated node set.
    pub fn new(nodes: Vec<Complex64>, kind: NodeKind) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::param("node set must not be empty"));
        }
        if nodes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param("node set contains a non-finite node"));
        }
        if !distinct(&nodes) {
            return Err(Error::param("node set contains duplicate nodes"));
        }
        if kind != NodeKind::EquispacedReal && nodes.iter().any(|z| z.norm() > 1.0 + 1e-14) {
            return Err(Error::param("nodes must satisfy |z| <= 1"));
        }
        let real = nodes.iter().all(|z| z.im == 0.0);
        if real && nodes.windows(2).any(|w| w[0].re >= w[1].re) {
            return Err(Error::param("real nodes must be strictly increasing"));
        }
        Ok(Self { nodes, kind })
    }

    pub fn custom(nodes: Vec<Complex64>) -> Result<Self> {
        Self::new(nodes, NodeKind::Custom)
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.nodes.iter().all(|z| z.im == 0.0)
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Zeros of `P_n`, ascending, symmetrised about the origin.
pub fn legendre_zeros(n: usize) -> Vec<f64> {
    let mut zeros: Vec<f64> = (0..n)
        .map(|i| {
            let mut x = -((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            x
        })
        .collect();
    for i in 0..n / 2 {
        let a = 0.5 * (zeros[n - 1 - i].abs() + zeros[i].abs());
        zeros[i] = -a;
        zeros[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        zeros[n / 2] = 0.0;
    }
    zeros
}

/// `{-1} ∪ {zeros of P_{q-1}}`, ascending.
pub fn legendre_epbm_nodes(q: usize) -> Result<NodeSet> {
    if !(2..=12).contains(&q) {
        return Err(Error::param(format!("Legendre node count q={q} outside 2..=12")));
    }
    let mut nodes = vec![c(-1.0)];
    nodes.extend(legendre_zeros(q - 1).into_iter().map(c));
    NodeSet::new(nodes, NodeKind::LegendreEpbm)
}

/// `χ_{j,m} = i(1 - 2(j-1)/(m-1))` for `j = 1..=m`.
pub fn imaginary_equispaced_nodes(m: usize) -> Result<NodeSet> {
    if !(2..=12).contains(&m) {
        return Err(Error::param(format!("imaginary node count m={m} outside 2..=12")));
    }
    let nodes = (0..m)
        .map(|j| Complex64::new(0.0, 1.0 - 2.0 * j as f64 / (m - 1) as f64))
        .collect();
    NodeSet::new(nodes, NodeKind::ImaginaryEquispaced)
}

/// `{-1} ∪ {χ_{j,q-1}}`: the Legendre layout with the interior nodes
/// replaced by imaginary equispaced points.
pub fn imaginary_epbm_nodes(q: usize) -> Result<NodeSet> {
    if !(3..=12).contains(&q) {
        return Err(Error::param(format!("imaginary EPBM node count q={q} outside 3..=12")));
    }
    let mut nodes = vec![c(-1.0)];
    nodes.extend(imaginary_equispaced_nodes(q - 1)?.nodes);
    NodeSet::custom(nodes)
}

/// `{-(p-1), …, -1, 0}`.
pub fn equispaced_history_nodes(p: usize) -> Result<NodeSet> {
    if p == 0 {
        return Err(Error::param("history node count must be positive"));
    }
    let nodes = (0..p).map(|j| c(j as f64 - (p - 1) as f64)).collect();
    NodeSet::new(nodes, NodeKind::EquispacedReal)
}

/// Finite-difference weights for the `nu`-th derivative at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub nodes: Vec<Complex64>,
    pub x0: Complex64,
    pub nu: usize,
    pub weights: Vec<Complex64>,
}

fn check_stencil(nodes: &[Complex64], nu_max: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::param("empty stencil"));
    }
    if !distinct(nodes) {
        return Err(Error::param("stencil nodes must be distinct"));
    }
    if nu_max >= nodes.len() {
        return Err(Error::param(format!(
            "derivative order {nu_max} needs more than {} nodes",
            nodes.len()
        )));
    }
    Ok(())
}

/// Fornberg's recursive weights; `out[nu][j]`.
pub fn fornberg_weights(nodes: &[Complex64], x0: Complex64, nu_max: usize) -> Result<Vec<Vec<Complex64>>> {
    check_stencil(nodes, nu_max)?;
    let n = nodes.len();
    let m = nu_max;
    let zero = c(0.0);
    let mut w = vec![vec![zero; n]; m + 1];
    let mut c1 = c(1.0);
    let mut c4 = nodes[0] - x0;
    w[0][0] = c(1.0);
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = c(1.0);
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (c(k as f64) * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - c(k as f64) * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    Ok(w)
}

/// Weights from the inverse Vandermonde matrix `V_{ij} = (x_i - x0)^j`:
/// `w_{nu,i} = nu! (V^{-1})_{nu,i}`; `out[nu][j]`.
pub fn vandermonde_weights(nodes: &[Complex64], x0: Complex64, nu_max: usize) -> Result<Vec<Vec<Complex64>>> {
    check_stencil(nodes, nu_max)?;
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |i, j| (nodes[i] - x0).powu(j as u32));
    let inv = v
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Vandermonde matrix".into()))?;
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(nu_max + 1);
    for nu in 0..=nu_max {
        if nu > 0 {
            fact *= nu as f64;
        }
        out.push((0..n).map(|j| inv[(nu, j)] * fact).collect());
    }
    Ok(out)
}

/// Weight rows for derivative orders `0..=nu_max`. Real stencils use
/// Fornberg's recursion, complex stencils the pivoted Vandermonde solve.
pub fn fd_weights(nodes: &[Complex64], x0: Complex64, nu_max: usize) -> Result<Vec<WeightRow>> {
    let real = nodes.iter().all(|z| z.im == 0.0) && x0.im == 0.0;
    let rows = if real {
        fornberg_weights(nodes, x0, nu_max)?
    } else {
        vandermonde_weights(nodes, x0, nu_max)?
    };
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(nu, weights)| WeightRow {
            nodes: nodes.to_vec(),
            x0,
            nu,
            weights,
        })
        .collect())
}

/// Evaluate the Lagrange interpolant through `(nodes_j, values_j)` at `tau`.
pub fn lagrange_eval(nodes: &[Complex64], values: &[CVector], tau: Complex64) -> Result<CVector> {
    if nodes.is_empty() || nodes.len() != values.len() {
        return Err(Error::param("lagrange_eval needs one value per node"));
    }
    if !distinct(nodes) {
        return Err(Error::param("lagrange_eval nodes must be distinct"));
    }
    let dim = values[0].len();
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::param("lagrange_eval values differ in dimension"));
    }
    let mut out = CVector::zeros(dim);
    for (j, zj) in nodes.iter().enumerate() {
        let mut ell = c(1.0);
        for (k, zk) in nodes.iter().enumerate() {
            if k != j {
                ell *= (tau - zk) / (zj - zk);
            }
        }
        out.axpy(ell, &values[j], c(1.0));
    }
    Ok(out)
}
