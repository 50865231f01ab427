//! Whole-run drivers: bootstrap, then constant-stepsize stepping to `t_final`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use super::{BlockState, SemilinearProblem, Stepper, UnpartitionedProblem, UnpartitionedStepper};
use crate::error::{Error, Result};
use crate::expansion::{
    eab_coefficients, generate_coefficients, MethodCoefficients, MethodSpec, Partitioning, Strategy,
};
use crate::linalg::CVector;
use crate::nodes::{equispaced_history_nodes, imaginary_epbm_nodes, legendre_epbm_nodes};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeChoice {
    Legendre,
    /// `{-1} ∪` imaginary equispaced points.
    Imaginary,
}

/// A time integrator selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodConfig {
    Epbm {
        q: usize,
        alpha: f64,
        kappa: usize,
        nodes: NodeChoice,
    },
    Eab {
        p: usize,
    },
    Etdrk2,
}

impl MethodConfig {
    pub fn epbm(q: usize, alpha: f64) -> Self {
        MethodConfig::Epbm {
            q,
            alpha,
            kappa: 0,
            nodes: NodeChoice::Legendre,
        }
    }

    /// Nominal order of accuracy.
    pub fn order(&self) -> usize {
        match *self {
            MethodConfig::Epbm { q, .. } => q,
            MethodConfig::Eab { p } => p,
            MethodConfig::Etdrk2 => 2,
        }
    }

    /// Propagator and iterator coefficients of an EPBM.
    pub fn block_coefficients(
        &self,
        partitioning: Partitioning,
    ) -> Result<(MethodCoefficients, MethodCoefficients)> {
        let MethodConfig::Epbm { q, alpha, nodes, .. } = *self else {
            return Err(Error::config(format!("{self} is not a block method")));
        };
        if !(alpha > 0.0) {
            return Err(Error::config("a propagator needs alpha > 0"));
        }
        let nodes = match nodes {
            NodeChoice::Legendre => legendre_epbm_nodes(q)?,
            NodeChoice::Imaginary => imaginary_epbm_nodes(q)?,
        };
        let spec = |a| MethodSpec::new(nodes.clone(), Strategy::Pmfc(2), vec![0; q], a, partitioning);
        Ok((
            generate_coefficients(&spec(alpha)?)?,
            generate_coefficients(&spec(0.0)?)?,
        ))
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodConfig::Epbm {
                q,
                alpha,
                kappa,
                nodes,
            } => {
                let kind = match nodes {
                    NodeChoice::Legendre => "legendre",
                    NodeChoice::Imaginary => "imag",
                };
                write!(f, "epbm-{kind}:q={q},alpha={alpha},kappa={kappa}")
            }
            MethodConfig::Eab { p } => write!(f, "eab:p={p}"),
            MethodConfig::Etdrk2 => write!(f, "etdrk2"),
        }
    }
}

impl FromStr for MethodConfig {
    type Err = Error;

    /// `epbm-legendre:q=4,alpha=2,kappa=0`, `epbm-imag:q=3`, `eab:p=2`, `etdrk2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let mut q = None;
        let mut alpha = 2.0;
        let mut kappa = 0;
        let mut p = None;
        for kv in args.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got '{kv}'")))?;
            let bad = |_| Error::config(format!("bad value for {k}: '{v}'"));
            match k.trim() {
                "q" => q = Some(v.trim().parse().map_err(bad)?),
                "p" => p = Some(v.trim().parse().map_err(bad)?),
                "kappa" => kappa = v.trim().parse().map_err(bad)?,
                "alpha" => alpha = v.trim().parse().map_err(|_| Error::config(format!("bad alpha '{v}'")))?,
                other => return Err(Error::config(format!("unknown method parameter '{other}'"))),
            }
        }
        let need = |x: Option<usize>, key: &str| {
            x.ok_or_else(|| Error::config(format!("method '{name}' needs {key}=")))
        };
        match name.trim() {
            "epbm" | "epbm-legendre" => Ok(MethodConfig::Epbm {
                q: need(q, "q")?,
                alpha,
                kappa,
                nodes: NodeChoice::Legendre,
            }),
            "epbm-imag" => Ok(MethodConfig::Epbm {
                q: need(q, "q")?,
                alpha,
                kappa,
                nodes: NodeChoice::Imaginary,
            }),
            "eab" => Ok(MethodConfig::Eab { p: need(p, "p")? }),
            "etdrk2" => Ok(MethodConfig::Etdrk2),
            other => Err(Error::config(format!("unknown method '{other}'"))),
        }
    }
}

/// Result of a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub y: CVector,
    pub steps: usize,
    /// Fresh nonlinear (or right-hand-side) evaluations after start-up.
    pub evaluations: usize,
    pub startup_evaluations: usize,
}

fn step_count(t0: f64, t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) || !(t_final >= t0) {
        return Err(Error::param(format!("bad interval [{t0}, {t_final}] or stepsize {h}")));
    }
    let span = t_final - t0;
    let n = (span / h).round();
    if (n * h - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::param(format!("stepsize {h} does not divide the interval {span}")));
    }
    Ok(n as usize)
}

/// Integrate a semilinear problem from `(t0, y0)` to `t_final`.
pub fn integrate<P: SemilinearProblem + ?Sized>(
    problem: &P,
    method: &MethodConfig,
    y0: &CVector,
    t0: f64,
    t_final: f64,
    h: f64,
    threads: usize,
) -> Result<RunOutput> {
    let n = step_count(t0, t_final, h)?;
    let name = method.to_string();
    let tag = |e: Error| e.with_method(&name);
    match *method {
        MethodConfig::Epbm { q, alpha, kappa, .. } => {
            let (prop, iter) = method.block_coefficients(Partitioning::Partitioned)?;
            let mut stepper = Stepper::new(problem, h / alpha, threads)?;
            let mut state = stepper
                .bootstrap_initial_block(&iter, y0, t0, q)
                .map_err(tag)?;
            let startup = stepper.evaluations();
            for _ in 0..n {
                state = stepper
                    .step_composite(&prop, &iter, kappa, &state)
                    .map_err(tag)?;
            }
            Ok(RunOutput {
                y: state.y.swap_remove(0),
                steps: n,
                evaluations: stepper.evaluations() - startup,
                startup_evaluations: startup,
            })
        }
        MethodConfig::Eab { p } => {
            let coeffs = eab_coefficients(p)?;
            if n + 1 < p {
                return Err(Error::param(format!("EAB{p} needs at least {} steps", p - 1)));
            }
            let mut stepper = Stepper::new(problem, h, threads)?;
            let iter_spec = MethodSpec::new(
                equispaced_history_nodes(p)?,
                Strategy::Pmfc(1),
                vec![0; p],
                0.0,
                Partitioning::Partitioned,
            )?;
            let iter = generate_coefficients(&iter_spec)?;
            let start = stepper
                .bootstrap_initial_block(&iter, y0, t0, p)
                .map_err(tag)?;
            let mut history: VecDeque<CVector> = start
                .y
                .iter()
                .enumerate()
                .map(|(j, y)| stepper.nonlinear(t0 + h * j as f64, y))
                .collect();
            let mut y = start.y[p - 1].clone();
            let mut t = t0 + h * (p - 1) as f64;
            let startup = stepper.evaluations();
            let remaining = n + 1 - p;
            for step in 0..remaining {
                let hist = history.make_contiguous();
                y = stepper.step_eab(&coeffs, hist, &y).map_err(tag)?;
                t += h;
                if step + 1 < remaining {
                    history.pop_front();
                    history.push_back(stepper.nonlinear(t, &y));
                }
            }
            Ok(RunOutput {
                y,
                steps: remaining,
                evaluations: stepper.evaluations() - startup,
                startup_evaluations: startup,
            })
        }
        MethodConfig::Etdrk2 => {
            let mut stepper = Stepper::new(problem, h, threads)?;
            let mut y = y0.clone();
            for i in 0..n {
                y = stepper.step_etdrk2(&y, t0 + h * i as f64).map_err(tag)?;
            }
            Ok(RunOutput {
                y,
                steps: n,
                evaluations: stepper.evaluations(),
                startup_evaluations: 0,
            })
        }
    }
}

/// Integrate an unpartitioned problem with an EPBM.
pub fn integrate_unpartitioned<P: UnpartitionedProblem + ?Sized>(
    problem: &P,
    method: &MethodConfig,
    y0: &CVector,
    t_final: f64,
    h: f64,
    tolerance: Option<f64>,
) -> Result<RunOutput> {
    let n = step_count(0.0, t_final, h)?;
    let MethodConfig::Epbm { q, alpha, kappa, .. } = *method else {
        return Err(Error::config(format!("{method} has no unpartitioned form")));
    };
    let name = method.to_string();
    let tag = |e: Error| e.with_method(&name);
    let (prop, iter) = method.block_coefficients(Partitioning::Unpartitioned)?;
    let mut stepper = UnpartitionedStepper::new(problem, h / alpha)?;
    if let Some(tol) = tolerance {
        stepper.tolerance = tol;
    }
    let mut state: BlockState = stepper
        .bootstrap_initial_block(&iter, y0, 0.0, q)
        .map_err(tag)?;
    let startup = stepper.evaluations();
    for _ in 0..n {
        state = stepper
            .step_composite(&prop, &iter, kappa, &state)
            .map_err(tag)?;
    }
    Ok(RunOutput {
        y: state.y.swap_remove(0),
        steps: n,
        evaluations: stepper.evaluations() - startup,
        startup_evaluations: startup,
    })
}
