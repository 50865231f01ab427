//! Experiment drivers behind the subcommands.

use std::path::PathBuf;
use std::time::Instant;

use epbm_core::expansion::{eab_coefficients, MethodCoefficients, Partitioning};
use epbm_core::linalg::CMatrix;
use epbm_core::problems::{reference_solution, Problem};
use epbm_core::stability::{
    is_power_bounded, stability_slice, unpartitioned_amplification_matrix, GridSpec, SliceMethod,
};
use epbm_core::stepper::MethodConfig;
use epbm_core::{Complex64, Error};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{dividing_step, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::fit::{fit_order, OrderFit};
use crate::output::{
    base_metadata, slug, state_checksum, write_csv, ConvergenceRecord, Metadata, TimingRecord,
};

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

// ---------------------------------------------------------------- converge

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub method: String,
    pub order: Option<f64>,
    pub used: usize,
    pub floor: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub fits: Vec<FitRecord>,
    pub reference_deviation: f64,
    pub files: Vec<PathBuf>,
}

/// Run every method at every rung. `error_at` returns the relative error of
/// one run; a divergence becomes an infinite error.
pub fn convergence_study(
    methods: &[MethodConfig],
    rungs: &[f64],
    threads: usize,
    mut error_at: impl FnMut(&MethodConfig, f64) -> epbm_core::Result<f64>,
) -> Result<(Vec<ConvergenceRecord>, Vec<FitRecord>)> {
    let mut records = Vec::new();
    let mut fits = Vec::new();
    for m in methods {
        let mut pts = Vec::new();
        for &h in rungs {
            let start = Instant::now();
            let error = match error_at(m, h) {
                Ok(e) => e,
                Err(Error::Divergence { .. }) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
            records.push(ConvergenceRecord {
                method: m.to_string(),
                h,
                error,
                wall_s: start.elapsed().as_secs_f64(),
                threads,
            });
            pts.push((h, error));
        }
        let OrderFit {
            order,
            used,
            floor,
            monotone,
        } = fit_order(&pts);
        fits.push(FitRecord {
            method: m.to_string(),
            order,
            used,
            floor,
            monotone,
        });
    }
    Ok((records, fits))
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceOutcome> {
    cfg.validate()?;
    if cfg.ladder.count < 2 {
        return Err(HarnessError::Config("a slope fit needs at least two rungs".into()));
    }
    let problem = cfg.build_problem()?;
    let methods = cfg.method_configs()?;
    let threads = cfg.threads[0];
    let ref_methods = cfg
        .reference_methods()?
        .unwrap_or_else(|| problem.default_reference_methods());
    let ref_h = cfg.reference.h.unwrap_or_else(|| {
        let cap = if problem.is_partitioned() { 1e-4 } else { problem.t_final() / 1000.0 };
        dividing_step(problem.t_final(), cap)
    });
    let reference = reference_solution(&problem, &ref_methods, ref_h, threads)?;

    let rungs = cfg.ladder.rungs(problem.t_final());
    let (records, fits) = convergence_study(&methods, &rungs, threads, |m, h| {
        problem
            .run(m, h, threads)
            .map(|o| problem.relative_error(&o.y, &reference.y))
    })?;

    let mut meta = base_metadata(cfg, "converge");
    meta.push(("reference_h".into(), ref_h.to_string()));
    meta.push((
        "reference_methods".into(),
        ref_methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
    ));
    meta.push(("reference_deviation".into(), format!("{:e}", reference.deviation)));
    let data = cfg.out.join("converge.csv");
    let fit = cfg.out.join("converge_fit.csv");
    write_csv(&data, &meta, &records)?;
    write_csv(&fit, &meta, &fits)?;
    Ok(ConvergenceOutcome {
        records,
        fits,
        reference_deviation: reference.deviation,
        files: vec![data, fit],
    })
}

// --------------------------------------------------------------- stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub re: f64,
    pub im: f64,
    pub stable: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub method: String,
    pub direction: String,
    pub r: f64,
    pub z1_re: f64,
    pub z1_im: f64,
    pub alpha: f64,
    pub stable_points: usize,
    pub stable_area: f64,
    pub failures: usize,
    pub file: String,
}

/// `z₁` for a named direction at radius `r`.
pub fn z1_on_ray(direction: &str, r: f64) -> Result<Complex64> {
    match direction {
        "dissipative" => Ok(Complex64::new(-r, 0.0)),
        "oscillatory" => Ok(Complex64::new(0.0, r)),
        "mixed" => Ok(Complex64::from_polar(r, 0.75 * std::f64::consts::PI)),
        other => Err(HarnessError::Config(format!(
            "unknown direction '{other}' (dissipative, oscillatory, mixed)"
        ))),
    }
}

/// Coefficients a slice scans, plus the `α` that sets the node radius.
pub struct SliceCoefficients {
    pub prop: MethodCoefficients,
    pub iter: Option<(MethodCoefficients, usize)>,
    pub alpha: f64,
}

impl SliceCoefficients {
    pub fn new(method: &MethodConfig) -> Result<Self> {
        match *method {
            MethodConfig::Epbm { alpha, kappa, .. } => {
                let (prop, iter) = method.block_coefficients(Partitioning::Partitioned)?;
                Ok(Self {
                    prop,
                    iter: (kappa > 0).then_some((iter, kappa)),
                    alpha,
                })
            }
            MethodConfig::Eab { p } => Ok(Self {
                prop: eab_coefficients(p)?,
                iter: None,
                alpha: 1.0,
            }),
            MethodConfig::Etdrk2 => Err(HarnessError::Config(
                "etdrk2 has no amplification matrix in this framework".into(),
            )),
        }
    }

    pub fn slice_method(&self) -> SliceMethod<'_> {
        match &self.iter {
            Some((iter, kappa)) => SliceMethod::Composite {
                prop: &self.prop,
                iter,
                kappa: *kappa,
            },
            None => SliceMethod::Single(&self.prop),
        }
    }
}

fn grid_of(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let s = &cfg.stability;
    Ok(GridSpec::new(s.re, s.im, s.n_re, s.n_im)?)
}

fn mask_rows(grid: &GridSpec, mask: &[Vec<bool>]) -> Vec<StabilityPoint> {
    let (re, im) = (grid.re_values(), grid.im_values());
    let mut rows = Vec::with_capacity(re.len() * im.len());
    for (i, y) in im.iter().enumerate() {
        for (j, x) in re.iter().enumerate() {
            rows.push(StabilityPoint {
                re: *x,
                im: *y,
                stable: mask[i][j] as u8,
            });
        }
    }
    rows
}

/// Stability of the unpartitioned method on `y' = λy`, `z = hλ` on the grid.
pub fn unpartitioned_mask(method: &MethodConfig, grid: &GridSpec, tol: f64) -> Result<Vec<Vec<bool>>> {
    let MethodConfig::Epbm { alpha, kappa, .. } = *method else {
        return Err(HarnessError::Config(format!("{method} has no unpartitioned form")));
    };
    let (prop, iter) = method.block_coefficients(Partitioning::Unpartitioned)?;
    let (re, im) = (grid.re_values(), grid.im_values());
    let matrix = |z: Complex64| -> epbm_core::Result<CMatrix> {
        let mut m = unpartitioned_amplification_matrix(&prop, z, alpha)?.m;
        if kappa > 0 {
            let mi = unpartitioned_amplification_matrix(&iter, z, alpha)?.m;
            for _ in 0..kappa {
                m = &mi * &m;
            }
        }
        Ok(m)
    };
    Ok(im
        .par_iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    matrix(Complex64::new(x, y))
                        .and_then(|m| is_power_bounded(&m, tol))
                        .unwrap_or(false)
                })
                .collect()
        })
        .collect())
}

pub fn run_stability_export(cfg: &ExperimentConfig) -> Result<Vec<SliceSummary>> {
    cfg.validate()?;
    let grid = grid_of(cfg)?;
    let tol = cfg.stability.tol;
    let mut menu = Vec::new();
    for &r in &cfg.stability.radii {
        if r == 0.0 {
            menu.push(("zero".to_string(), 0.0, Complex64::new(0.0, 0.0)));
            continue;
        }
        for d in &cfg.stability.directions {
            menu.push((d.clone(), r, z1_on_ray(d, r)?));
        }
    }
    for d in &cfg.stability.directions {
        z1_on_ray(d, 1.0)?;
    }
    let pool = pool(cfg.threads[0])?;
    let mut summaries = Vec::new();
    for method in cfg.method_configs()? {
        let coeffs = SliceCoefficients::new(&method)?;
        let name = method.to_string();
        for (direction, r, z1) in &menu {
            let slice = pool.install(|| {
                stability_slice(coeffs.slice_method(), *z1, coeffs.alpha, grid, tol)
            })?;
            let file = format!("stability_{}_{}_r{}.csv", slug(&name), direction, r);
            let mut meta = base_metadata(cfg, "stability");
            meta.push(("method".into(), name.clone()));
            meta.push(("z1".into(), format!("{} {:+}i", z1.re, z1.im)));
            meta.push(("alpha".into(), coeffs.alpha.to_string()));
            meta.push(("failures".into(), slice.failures.to_string()));
            write_csv(&cfg.out.join(&file), &meta, &mask_rows(&grid, &slice.mask))?;
            summaries.push(SliceSummary {
                method: name.clone(),
                direction: direction.clone(),
                r: *r,
                z1_re: z1.re,
                z1_im: z1.im,
                alpha: coeffs.alpha,
                stable_points: slice.stable_count(),
                stable_area: slice.stable_area(),
                failures: slice.failures,
                file,
            });
        }
        if cfg.stability.unpartitioned && matches!(method, MethodConfig::Epbm { .. }) {
            let mask = pool.install(|| unpartitioned_mask(&method, &grid, tol))?;
            let file = format!("stability_{}_unpartitioned.csv", slug(&name));
            let mut meta = base_metadata(cfg, "stability");
            meta.push(("method".into(), name.clone()));
            meta.push(("form".into(), "unpartitioned, y' = lambda y, z = h lambda".into()));
            write_csv(&cfg.out.join(&file), &meta, &mask_rows(&grid, &mask))?;
        }
    }
    write_csv(
        &cfg.out.join("stability_index.csv"),
        &base_metadata(cfg, "stability"),
        &summaries,
    )?;
    Ok(summaries)
}

// ------------------------------------------------------------------ timing

#[derive(Debug, Clone)]
pub struct TimingOutcome {
    pub records: Vec<TimingRecord>,
    /// `(method, threads, t(first) / t(threads))` over the fastest repeat.
    pub speedups: Vec<(String, usize, f64)>,
    pub warnings: Vec<String>,
}

/// Whether a method has a parallel path across block outputs.
pub fn has_parallel_path(problem: &Problem, method: &MethodConfig) -> bool {
    problem.is_partitioned() && matches!(method, MethodConfig::Epbm { .. })
}

pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingOutcome> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let h = cfg.h.unwrap_or_else(|| cfg.ladder.rungs(problem.t_final())[0]);
    let mut records = Vec::new();
    let mut speedups = Vec::new();
    let mut warnings = Vec::new();
    let mut mismatch = None;
    for method in cfg.method_configs()? {
        let name = method.to_string();
        if !has_parallel_path(&problem, &method) && cfg.threads.iter().any(|&t| t > 1) {
            warnings.push(format!("{name}: no parallel path, thread count has no effect"));
        }
        let mut best = Vec::new();
        for &threads in &cfg.threads {
            let mut fastest = f64::INFINITY;
            for repeat in 0..cfg.repeats {
                let start = Instant::now();
                let out = problem.run(&method, h, threads)?;
                let wall_s = start.elapsed().as_secs_f64();
                fastest = fastest.min(wall_s);
                records.push(TimingRecord {
                    method: name.clone(),
                    threads,
                    repeat,
                    wall_s,
                    checksum: state_checksum(&out.y),
                });
            }
            best.push((threads, fastest));
        }
        let sums: Vec<&str> = records
            .iter()
            .filter(|r| r.method == name)
            .map(|r| r.checksum.as_str())
            .collect();
        if sums.windows(2).any(|w| w[0] != w[1]) && mismatch.is_none() {
            mismatch = Some(format!("{name}: checksums differ across runs: {}", sums.join(" ")));
        }
        let t0 = best[0].1;
        for (threads, t) in best {
            speedups.push((name.clone(), threads, t0 / t));
        }
    }
    let mut meta = base_metadata(cfg, "timing");
    meta.push(("h".into(), h.to_string()));
    write_csv(&cfg.out.join("timing.csv"), &meta, &records)?;
    if let Some(msg) = mismatch {
        return Err(HarnessError::Determinism(msg));
    }
    Ok(TimingOutcome {
        records,
        speedups,
        warnings,
    })
}

// ------------------------------------------------------------------ coeffs

/// Published derivative-weight rows of the Legendre methods, over
/// `N_1, …, N_q`.
pub fn legendre_reference_rows(q: usize) -> Option<Vec<Vec<f64>>> {
    let s3 = 3f64.sqrt();
    let s15 = 15f64.sqrt();
    match q {
        2 => Some(vec![vec![0.0, 1.0]]),
        3 => Some(vec![
            vec![0.0, (1.0 + s3) / 2.0, (1.0 - s3) / 2.0],
            vec![0.0, -s3 / 2.0, s3 / 2.0],
        ]),
        4 => Some(vec![
            vec![0.0, (5.0 + s15) / 6.0, -2.0 / 3.0, -(s15 - 5.0) / 6.0],
            vec![0.0, (-10.0 - s15) / 6.0, 10.0 / 3.0, (s15 - 10.0) / 6.0],
            vec![0.0, 5.0 / 3.0, -10.0 / 3.0, 5.0 / 3.0],
        ]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub output: usize,
    pub nu: usize,
    pub input: usize,
    pub re: f64,
    pub im: f64,
}

/// Derivative-weight rows of one output spread over all `q` inputs.
pub fn weight_rows(m: &MethodCoefficients, output: usize) -> Vec<Vec<Complex64>> {
    let o = &m.outputs[output];
    o.deriv_weights
        .iter()
        .map(|w| {
            let mut row = vec![Complex64::new(0.0, 0.0); m.q()];
            for (member, v) in o.stencil.iter().zip(w) {
                if let epbm_core::expansion::StencilMember::Input(k) = member {
                    row[*k] += v;
                }
            }
            row
        })
        .collect()
}

fn fmt_c(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn fmt_row(row: &[Complex64]) -> String {
    format!("[{}]", row.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(", "))
}

pub struct CoeffDump {
    pub text: String,
    pub records: Vec<CoeffRecord>,
    /// Largest deviation from the closed-form rows, when there are any.
    pub reference_error: Option<f64>,
    /// Largest sum-rule residual.
    pub sum_rule_error: f64,
}

pub fn dump_coefficients(method: &MethodConfig) -> Result<CoeffDump> {
    let MethodConfig::Epbm { q, nodes, .. } = *method else {
        let m = SliceCoefficients::new(method)?.prop;
        return dump_rows(method, &m, None);
    };
    let (prop, _) = method.block_coefficients(Partitioning::Partitioned)?;
    let closed_form = match nodes {
        epbm_core::stepper::NodeChoice::Legendre => legendre_reference_rows(q),
        epbm_core::stepper::NodeChoice::Imaginary => None,
    };
    dump_rows(method, &prop, closed_form)
}

fn dump_rows(method: &MethodConfig, m: &MethodCoefficients, closed_form: Option<Vec<Vec<f64>>>) -> Result<CoeffDump> {
    use std::fmt::Write;
    let mut text = String::new();
    let mut records = Vec::new();
    let mut reference_error: Option<f64> = None;
    let mut sum_rule_error: f64 = 0.0;
    writeln!(text, "method {method}").unwrap();
    writeln!(text, "nodes: {}", fmt_row(m.nodes())).unwrap();
    let etas: Vec<Complex64> = m.outputs.iter().map(|o| o.eta).collect();
    writeln!(text, "eta: {}", fmt_row(&etas)).unwrap();
    let rows: Vec<Vec<Vec<Complex64>>> = (0..m.outputs.len()).map(|j| weight_rows(m, j)).collect();
    let shared = rows.windows(2).all(|w| w[0] == w[1]);
    for (j, out_rows) in rows.iter().enumerate() {
        if shared && j > 0 {
            break;
        }
        if shared {
            writeln!(text, "rows shared by every output:").unwrap();
        } else {
            writeln!(text, "output {}:", m.outputs[j].node + 1).unwrap();
        }
        for (nu, row) in out_rows.iter().enumerate() {
            let want = if nu == 0 { 1.0 } else { 0.0 };
            let sum: Complex64 = row.iter().sum();
            sum_rule_error = sum_rule_error.max((sum - want).norm());
            let mut line = format!("  v{}: {}", nu + 1, fmt_row(row));
            if let Some(p) = closed_form.as_ref().and_then(|p| p.get(nu)) {
                let diff = row
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                reference_error = Some(reference_error.unwrap_or(0.0).max(diff));
                write!(line, "  closed form max|diff| {diff:.1e}").unwrap();
            }
            writeln!(text, "{line}").unwrap();
        }
    }
    for (j, out_rows) in rows.iter().enumerate() {
        for (nu, row) in out_rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                records.push(CoeffRecord {
                    output: j + 1,
                    nu: nu + 1,
                    input: k + 1,
                    re: v.re,
                    im: v.im,
                });
            }
        }
    }
    writeln!(text, "sum rules: max residual {sum_rule_error:.1e}").unwrap();
    Ok(CoeffDump {
        text,
        records,
        reference_error,
        sum_rule_error,
    })
}

pub fn run_coeffs(cfg: &ExperimentConfig) -> Result<Vec<CoeffDump>> {
    cfg.validate()?;
    let mut dumps = Vec::new();
    for method in cfg.method_configs()? {
        let dump = dump_coefficients(&method)?;
        let mut meta: Metadata = base_metadata(cfg, "coeffs");
        meta.push(("method".into(), method.to_string()));
        write_csv(
            &cfg.out.join(format!("coeffs_{}.csv", slug(&method.to_string()))),
            &meta,
            &dump.records,
        )?;
        dumps.push(dump);
    }
    Ok(dumps)
}

// ------------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub method: String,
    pub steps: usize,
    pub evaluations: usize,
    pub norm: f64,
    pub checksum: String,
    pub file: PathBuf,
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<Vec<SolveOutcome>> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let h = cfg.h.unwrap_or_else(|| cfg.ladder.rungs(problem.t_final())[0]);
    let mut outcomes = Vec::new();
    for method in cfg.method_configs()? {
        let name = method.to_string();
        let out = problem.run(&method, h, cfg.threads[0])?;
        let rows: Vec<StateRecord> = problem
            .observable(&out.y)
            .iter()
            .enumerate()
            .map(|(index, v)| StateRecord {
                index,
                re: v.re,
                im: v.im,
            })
            .collect();
        let file = cfg.out.join(format!("solve_{}.csv", slug(&name)));
        let mut meta = base_metadata(cfg, "solve");
        meta.push(("method".into(), name.clone()));
        meta.push(("h".into(), h.to_string()));
        meta.push(("t_final".into(), problem.t_final().to_string()));
        write_csv(&file, &meta, &rows)?;
        outcomes.push(SolveOutcome {
            method: name,
            steps: out.steps,
            evaluations: out.evaluations,
            norm: out.y.norm(),
            checksum: state_checksum(&out.y),
            file,
        });
    }
    Ok(outcomes)
}
