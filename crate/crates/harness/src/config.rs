//! Experiment configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use epbm_core::problems::{Problem, ProblemOverrides};
use epbm_core::stepper::MethodConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Geometric stepsize ladder `h_max, h_max/ratio, …` with `count` rungs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    /// Defaults to `t_final / 50`.
    pub h_max: Option<f64>,
    pub count: usize,
    pub ratio: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Self {
            h_max: None,
            count: 5,
            ratio: 2.0,
        }
    }
}

impl Ladder {
    /// Parse `h_max,count,ratio`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(HarnessError::Config(format!(
                "--h-ladder expects h_max,count,ratio, got '{s}'"
            )));
        }
        let bad = |what: &str| HarnessError::Config(format!("bad {what} in --h-ladder '{s}'"));
        Ok(Self {
            h_max: Some(parts[0].parse().map_err(|_| bad("h_max"))?),
            count: parts[1].parse().map_err(|_| bad("count"))?,
            ratio: parts[2].parse().map_err(|_| bad("ratio"))?,
        })
    }

    pub fn rungs(&self, t_final: f64) -> Vec<f64> {
        let h0 = self.h_max.unwrap_or(t_final / 50.0);
        (0..self.count).map(|i| h0 / self.ratio.powi(i as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    /// Defaults to the largest `t_final / n` not above `1e-4`.
    pub h: Option<f64>,
    /// Defaults to the problem's own reference set.
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    /// `|z₁|` values.
    pub radii: Vec<f64>,
    /// Any of `dissipative` (`-r`), `oscillatory` (`ir`), `mixed` (`r e^{3πi/4}`).
    pub directions: Vec<String>,
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
    pub tol: f64,
    /// Also emit the unpartitioned scalar mask over the same grid.
    pub unpartitioned: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.0, 3.0, 6.0, 15.0, 30.0],
            directions: vec!["dissipative".into(), "oscillatory".into(), "mixed".into()],
            re: (-6.0, 1.0),
            im: (-4.0, 4.0),
            n_re: 200,
            n_im: 200,
            tol: epbm_core::stability::DEFAULT_POWER_TOL,
            unpartitioned: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Fourier modes or grid points per side.
    pub resolution: Option<usize>,
    pub t_final: Option<f64>,
    pub methods: Vec<String>,
    pub ladder: Ladder,
    pub threads: Vec<usize>,
    pub out: PathBuf,
    /// Recorded in every output header.
    pub seed: u64,
    /// Stepsize for `solve` and `timing`; defaults to the first rung.
    pub h: Option<f64>,
    /// Timed repetitions per thread count.
    pub repeats: usize,
    pub reference: ReferenceConfig,
    pub stability: StabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "ks".into(),
            resolution: None,
            t_final: None,
            methods: vec!["epbm-legendre:q=4,alpha=2,kappa=0".into()],
            ladder: Ladder::default(),
            threads: vec![1],
            out: PathBuf::from("out"),
            seed: 0,
            h: None,
            repeats: 1,
            reference: ReferenceConfig::default(),
            stability: StabilityConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if !(self.ladder.ratio > 1.0) {
            return cfg(format!("ladder ratio must exceed 1, got {}", self.ladder.ratio));
        }
        if self.ladder.count == 0 {
            return cfg("ladder needs at least one rung".into());
        }
        if let Some(h) = self.ladder.h_max {
            if !(h > 0.0 && h.is_finite()) {
                return cfg(format!("ladder h_max must be positive, got {h}"));
            }
        }
        if self.threads.is_empty() || self.threads.contains(&0) {
            return cfg("thread counts must be positive".into());
        }
        if self.methods.is_empty() {
            return cfg("no methods given".into());
        }
        if self.repeats == 0 {
            return cfg("repeats must be positive".into());
        }
        self.method_configs()?;
        self.reference_methods()?;
        Ok(())
    }

    pub fn method_configs(&self) -> Result<Vec<MethodConfig>> {
        parse_methods(&self.methods)
    }

    /// Explicit reference methods, if any.
    pub fn reference_methods(&self) -> Result<Option<Vec<MethodConfig>>> {
        if self.reference.methods.is_empty() {
            Ok(None)
        } else {
            parse_methods(&self.reference.methods).map(Some)
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        Ok(Problem::by_name(
            &self.problem,
            ProblemOverrides {
                resolution: self.resolution,
                t_final: self.t_final,
            },
        )?)
    }
}

fn parse_methods(list: &[String]) -> Result<Vec<MethodConfig>> {
    list.iter()
        .map(|s| s.parse::<MethodConfig>().map_err(HarnessError::from))
        .collect()
}

/// Largest `t_final / n` not above `cap`.
pub fn dividing_step(t_final: f64, cap: f64) -> f64 {
    t_final / (t_final / cap).ceil()
}
