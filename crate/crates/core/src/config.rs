//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potentials::{builtin_problem, symmetric_grid, target_density_1d, ProblemParams, ProblemSpec};
use crate::reference::{FineUla, ReferenceTarget};
use crate::sgld::{lambda_max, InitLaw, SgldConfig};
use crate::streams::StreamSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub name: String,
    #[serde(default)]
    pub params: ProblemParams,
}

fn default_thin() -> usize {
    1
}

fn default_ensemble() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgldBlock {
    pub step_size: f64,
    #[serde(default)]
    pub horizon: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: Option<InitLaw>,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    AnalyticGaussian,
    Quadrature1d,
    FineUla,
}

fn default_half_width() -> f64 {
    8.0
}

fn default_spacing() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBlock {
    pub kind: ReferenceKind,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Fine ULA step as a fraction of `lambda_max`.
    #[serde(default)]
    pub step_fraction: Option<f64>,
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub gap: Option<u64>,
    #[serde(default)]
    pub moment_samples: Option<usize>,
}

fn default_diffusion_time() -> f64 {
    20.0
}
fn default_batches() -> usize {
    20
}
fn default_min_slope() -> f64 {
    0.4
}
fn default_two() -> f64 {
    2.0
}
fn default_four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateStudyBlock {
    pub lambdas: Vec<f64>,
    #[serde(default = "default_diffusion_time")]
    pub diffusion_time: f64,
    pub ensemble: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_min_slope")]
    pub min_slope: f64,
    #[serde(default = "default_two")]
    pub monotone_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurninStudyBlock {
    pub step_size: f64,
    pub checkpoints: Vec<u64>,
    pub ensemble: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Required upper bound on `W1(last) / W1(first)`, if any.
    #[serde(default)]
    pub max_ratio: Option<f64>,
    #[serde(default = "default_two")]
    pub plateau_sigmas: f64,
    /// Require every checkpoint to agree with the first within the plateau
    /// tolerance (near-stationary starts).
    #[serde(default)]
    pub expect_flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentCheckBlock {
    pub lambdas: Vec<f64>,
    pub checkpoints: Vec<u64>,
    pub ensemble: usize,
    #[serde(default = "default_ps")]
    pub ps: Vec<u32>,
    #[serde(default = "default_four")]
    pub sigmas: f64,
}

fn default_ps() -> Vec<u32> {
    vec![1, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstantsBlock {
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub horizons: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    #[serde(default)]
    pub rate_study: Option<RateStudyBlock>,
    #[serde(default)]
    pub burnin_study: Option<BurninStudyBlock>,
    #[serde(default)]
    pub moment_check: Option<MomentCheckBlock>,
    #[serde(default)]
    pub constants_report: Option<ConstantsBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    pub stream: StreamSpec,
    #[serde(default)]
    pub sgld: Option<SgldBlock>,
    #[serde(default)]
    pub reference: Option<ReferenceBlock>,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

/// Everything built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub problem: ProblemSpec,
    pub stream: StreamSpec,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Build the problem and stream and check grid invariants. `seed`
    /// overrides the configured one.
    pub fn resolve(&self, seed: Option<u64>) -> Result<Resolved> {
        let stream = self.stream.clone().with_analytic_metadata();
        stream.validate()?;
        let problem = builtin_problem(&self.problem.name, &self.problem.params, &stream)?;
        let lmax = lambda_max(&problem.constants);
        let check_grid = |name: &str, lambdas: &[f64]| -> Result<()> {
            if lambdas.is_empty() {
                return Err(Error::Config(format!("{name}: step-size grid is empty")));
            }
            for &l in lambdas {
                if !(l > 0.0 && l <= lmax) {
                    return Err(Error::Config(format!(
                        "{name}: step size {l} is outside (0, lambda_max = {lmax}]"
                    )));
                }
            }
            Ok(())
        };
        let check_sorted = |name: &str, ns: &[u64]| -> Result<()> {
            if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("{name}: checkpoints must be nonempty and strictly increasing")));
            }
            Ok(())
        };
        let ex = &self.experiment;
        if let Some(r) = &ex.rate_study {
            check_grid("rate_study", &r.lambdas)?;
            if r.lambdas.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::Config("rate_study: lambdas must be strictly decreasing".into()));
            }
            if r.ensemble < r.batches || r.batches < 2 {
                return Err(Error::Config("rate_study: need at least 2 batches and ensemble >= batches".into()));
            }
        }
        if let Some(b) = &ex.burnin_study {
            check_grid("burnin_study", &[b.step_size])?;
            check_sorted("burnin_study", &b.checkpoints)?;
            if b.ensemble < b.batches || b.batches < 2 {
                return Err(Error::Config("burnin_study: need at least 2 batches and ensemble >= batches".into()));
            }
        }
        if let Some(m) = &ex.moment_check {
            check_grid("moment_check", &m.lambdas)?;
            check_sorted("moment_check", &m.checkpoints)?;
            if m.ensemble < 2 {
                return Err(Error::Config("moment_check: ensemble must be at least 2".into()));
            }
            if m.ps.contains(&0) {
                return Err(Error::Config("moment_check: p must be positive".into()));
            }
        }
        if let Some(c) = &ex.constants_report {
            if !c.lambdas.is_empty() {
                check_grid("constants_report", &c.lambdas)?;
            }
        }
        if let Some(s) = &self.sgld {
            check_grid("sgld", &[s.step_size])?;
        }
        Ok(Resolved {
            seed: seed.or(self.sgld.as_ref().map(|s| s.seed)).unwrap_or(0),
            config: self.clone(),
            problem,
            stream,
        })
    }
}

impl Resolved {
    pub fn init(&self) -> InitLaw {
        self.config
            .sgld
            .as_ref()
            .and_then(|s| s.init.clone())
            .unwrap_or_else(|| InitLaw::Point(vec![0.0; self.problem.d()]))
    }

    pub fn sgld_config(&self, step_size: f64, horizon: u64, ensemble: usize) -> SgldConfig {
        SgldConfig {
            step_size,
            horizon,
            beta: self.problem.beta(),
            ensemble,
            seed: self.seed,
            init: self.init(),
            thin: self.config.sgld.as_ref().map_or(1, |s| s.thin),
        }
    }

    /// The configured reference, or the most exact one available.
    pub fn reference(&self) -> Result<ReferenceTarget> {
        let block = self.config.reference.clone().unwrap_or(ReferenceBlock {
            kind: if self.problem.gaussian_curvature.is_some() {
                ReferenceKind::AnalyticGaussian
            } else if self.problem.d() == 1 {
                ReferenceKind::Quadrature1d
            } else {
                ReferenceKind::FineUla
            },
            half_width: default_half_width(),
            spacing: default_spacing(),
            step_fraction: None,
            burn_in: None,
            gap: None,
            moment_samples: None,
        });
        match block.kind {
            ReferenceKind::AnalyticGaussian => ReferenceTarget::analytic(&self.problem),
            ReferenceKind::Quadrature1d => {
                let grid = symmetric_grid(block.half_width, block.spacing);
                Ok(ReferenceTarget::Quadrature1d(target_density_1d(&self.problem, &grid)?))
            }
            ReferenceKind::FineUla => {
                let mut f = FineUla::new(&self.problem, self.seed);
                if let Some(frac) = block.step_fraction {
                    f.step = frac * lambda_max(&self.problem.constants);
                    f.gap = (1.0 / f.step).ceil() as u64;
                    f.burn_in = (10.0 / (self.problem.constants.dissip_a * f.step)).ceil() as u64;
                }
                if let Some(b) = block.burn_in {
                    f.burn_in = b;
                }
                if let Some(g) = block.gap {
                    f.gap = g;
                }
                if let Some(m) = block.moment_samples {
                    f.moment_samples = m;
                }
                Ok(ReferenceTarget::FineUla(f))
            }
        }
    }
}
