//! Method-of-lines test problems and reference solutions.

mod adr;
mod spectral;

pub use adr::{make_adr, AdrProblem, AdrRegime, ADR_DESK_N, ADR_T_FINAL};
pub use spectral::{
    dealias_mask, kdv_t_final, make_kdv, make_ks, make_nikolaevskiy, mode_index, SpectralProblem,
    KDV_DELTA, KDV_DESK_MODES, KS_DESK_MODES, KS_DESK_T_FINAL, KS_PAPER_T_FINAL, NIKOLAEVSKIY_DESK_MODES,
    NIKOLAEVSKIY_DESK_T_FINAL, NIKOLAEVSKIY_PARAMS,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::stepper::{integrate, integrate_unpartitioned, MethodConfig, RunOutput};

/// Registry names.
pub const PROBLEM_NAMES: [&str; 5] = ["ks", "nikolaevskiy", "kdv", "adr-stiff-lin", "adr-stiff-nonlin"];

/// Optional overrides of the desk defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProblemOverrides {
    /// Fourier modes (spectral) or grid points per side (ADR).
    pub resolution: Option<usize>,
    pub t_final: Option<f64>,
}

#[derive(Debug)]
pub enum Problem {
    Spectral(SpectralProblem),
    Adr(AdrProblem),
}

impl Problem {
    pub fn by_name(name: &str, ov: ProblemOverrides) -> Result<Self> {
        let mut p = match name {
            "ks" => Problem::Spectral(make_ks(ov.resolution.unwrap_or(KS_DESK_MODES))?),
            "nikolaevskiy" => Problem::Spectral(make_nikolaevskiy(
                ov.resolution.unwrap_or(NIKOLAEVSKIY_DESK_MODES),
            )?),
            "kdv" => Problem::Spectral(make_kdv(ov.resolution.unwrap_or(KDV_DESK_MODES))?),
            "adr-stiff-lin" => Problem::Adr(make_adr(
                ov.resolution.unwrap_or(ADR_DESK_N),
                AdrRegime::StiffLinearity,
            )?),
            "adr-stiff-nonlin" => Problem::Adr(make_adr(
                ov.resolution.unwrap_or(ADR_DESK_N),
                AdrRegime::StiffNonlinearity,
            )?),
            other => {
                return Err(Error::config(format!(
                    "unknown problem '{other}' (known: {})",
                    PROBLEM_NAMES.join(", ")
                )))
            }
        };
        if let Some(t) = ov.t_final {
            p.set_t_final(t)?;
        }
        Ok(p)
    }

    pub fn t_final(&self) -> f64 {
        match self {
            Problem::Spectral(p) => p.t_final,
            Problem::Adr(p) => p.t_final,
        }
    }

    fn set_t_final(&mut self, t: f64) -> Result<()> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::param(format!("t_final must be positive, got {t}")));
        }
        match self {
            Problem::Spectral(p) => p.t_final = t,
            Problem::Adr(p) => p.t_final = t,
        }
        Ok(())
    }

    pub fn is_partitioned(&self) -> bool {
        matches!(self, Problem::Spectral(_))
    }

    pub fn initial_state(&self) -> &CVector {
        match self {
            Problem::Spectral(p) => p.initial_state(),
            Problem::Adr(p) => p.initial_state(),
        }
    }

    /// Integrate from the initial state to `t_final`.
    pub fn run(&self, method: &MethodConfig, h: f64, threads: usize) -> Result<RunOutput> {
        match self {
            Problem::Spectral(p) => integrate(p, method, p.initial_state(), 0.0, p.t_final, h, threads),
            Problem::Adr(p) => integrate_unpartitioned(p, method, p.initial_state(), p.t_final, h, None),
        }
    }

    /// Values the error is measured on: the physical field for spectral
    /// problems, the grid values for ADR.
    pub fn observable(&self, y: &CVector) -> Vec<Complex64> {
        match self {
            Problem::Spectral(p) => p.to_physical(y),
            Problem::Adr(_) => y.iter().copied().collect(),
        }
    }

    /// `max|u - u_ref| / max|u_ref|` over the observable.
    pub fn relative_error(&self, y: &CVector, reference: &CVector) -> f64 {
        let (a, b) = (self.observable(y), self.observable(reference));
        let num = a.iter().zip(&b).map(|(x, r)| (x - r).norm()).fold(0.0, f64::max);
        let den = b.iter().map(|r| r.norm()).fold(0.0, f64::max);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Methods averaged for the reference solution.
    pub fn default_reference_methods(&self) -> Vec<MethodConfig> {
        match self {
            Problem::Spectral(_) => vec![MethodConfig::epbm(4, 2.0), MethodConfig::Eab { p: 4 }],
            Problem::Adr(_) => vec![MethodConfig::epbm(4, 2.0), MethodConfig::epbm(6, 2.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub y: CVector,
    /// Largest pairwise relative deviation between members.
    pub deviation: f64,
}

/// Mean of the final states of several runs at a small stepsize.
pub fn reference_solution(
    problem: &Problem,
    methods: &[MethodConfig],
    fine_h: f64,
    threads: usize,
) -> Result<Reference> {
    reference_from_runs(
        methods,
        |m| problem.run(m, fine_h, threads).map(|o| o.y),
        |a, b| problem.relative_error(a, b),
    )
}

/// [`reference_solution`] over an arbitrary runner and error metric.
pub fn reference_from_runs(
    methods: &[MethodConfig],
    run: impl Fn(&MethodConfig) -> Result<CVector>,
    metric: impl Fn(&CVector, &CVector) -> f64,
) -> Result<Reference> {
    if methods.len() < 2 {
        return Err(Error::param("a reference solution needs at least two methods"));
    }
    let finals = methods
        .iter()
        .map(|m| run(m).map_err(|e| e.with_method(&m.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = CVector::zeros(finals[0].len());
    for y in &finals {
        mean += y;
    }
    mean /= Complex64::new(finals.len() as f64, 0.0);
    let mut deviation: f64 = 0.0;
    for (i, a) in finals.iter().enumerate() {
        for b in &finals[i + 1..] {
            deviation = deviation.max(metric(a, b));
        }
    }
    Ok(Reference { y: mean, deviation })
}
