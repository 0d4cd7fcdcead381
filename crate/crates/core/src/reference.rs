//! Reference draws from `pi_beta`: exact Gaussian sampling, inverse-CDF
//! sampling over a 1-D quadrature grid, and a long fine-step ULA chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potentials::{ProblemSpec, TargetDensity1d};
use crate::sgld::lambda_max;
use crate::theory::lyapunov::v;
use crate::vector::{all_finite, mean_stderr, norm_sq};
use crate::wasserstein::SampleSet;

#[derive(Debug, Clone)]
pub enum ReferenceTarget {
    /// Centered Gaussian with covariance `(curvature * beta)^{-1} I`.
    AnalyticGaussian { dim: usize, curvature: f64, beta: f64 },
    Quadrature1d(TargetDensity1d),
    FineUla(FineUla),
}

#[derive(Debug, Clone)]
pub struct FineUla {
    pub spec: ProblemSpec,
    pub step: f64,
    pub burn_in: u64,
    pub gap: u64,
    /// Draws used by [`pi_moment_v2`].
    pub moment_samples: usize,
    pub seed: u64,
}

impl FineUla {
    /// Defaults: step `lambda_max / 200`, gap `ceil(1 / step)`, burn-in of
    /// `10 / (a step)` steps.
    pub fn new(spec: &ProblemSpec, seed: u64) -> Self {
        let step = lambda_max(&spec.constants) / 200.0;
        Self {
            spec: spec.clone(),
            step,
            burn_in: (10.0 / (spec.constants.dissip_a * step)).ceil() as u64,
            gap: (1.0 / step).ceil() as u64,
            moment_samples: 2000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let lmax = lambda_max(&self.spec.constants);
        if !(self.step > 0.0 && self.step <= lmax / 100.0) {
            return Err(invalid(format!(
                "fine ULA step {} must lie in (0, lambda_max/100 = {}]",
                self.step,
                lmax / 100.0
            )));
        }
        if self.gap == 0 {
            return Err(invalid("fine ULA gap must be positive"));
        }
        Ok(())
    }

    /// `count` thinned draws from one chain started at the origin.
    pub fn run(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let d = self.spec.d();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = vec![0.0; d];
        let mut h = vec![0.0; d];
        let scale = (2.0 * self.step / self.spec.beta()).sqrt();
        let mut advance = |theta: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
            self.spec.objective.mean_field(theta, &mut h);
            for (t, g) in theta.iter_mut().zip(&h) {
                let xi: f64 = rng.sample(StandardNormal);
                *t = *t - self.step * g + scale * xi;
            }
        };
        for _ in 0..self.burn_in {
            advance(&mut theta, &mut rng);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            for _ in 0..self.gap {
                advance(&mut theta, &mut rng);
            }
            if !all_finite(&theta) {
                return Err(Error::NonFinite("fine ULA chain diverged".into()));
            }
            out.push(theta.clone());
        }
        Ok(out)
    }
}

impl ReferenceTarget {
    pub fn analytic(spec: &ProblemSpec) -> Result<Self> {
        let curvature = spec
            .gaussian_curvature
            .ok_or_else(|| invalid(format!("problem `{}` has no analytic Gaussian target", spec.name)))?;
        Ok(Self::AnalyticGaussian {
            dim: spec.d(),
            curvature,
            beta: spec.beta(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::AnalyticGaussian { dim, .. } => *dim,
            Self::Quadrature1d(_) => 1,
            Self::FineUla(f) => f.spec.d(),
        }
    }

    /// Quantile function of a 1-D target.
    pub fn quantile_1d(&self) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>> {
        match self {
            Self::AnalyticGaussian { dim: 1, curvature, beta } => {
                let sd = 1.0 / (curvature * beta).sqrt();
                Ok(Box::new(move |u| sd * standard_normal_quantile(u)))
            }
            Self::Quadrature1d(t) => Ok(Box::new(move |u| t.quantile(u))),
            _ => Err(invalid("quantiles are only available for one-dimensional analytic or quadrature targets")),
        }
    }
}

pub fn standard_normal_quantile(u: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(u)
}

pub fn reference_samples(target: &ReferenceTarget, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(invalid("count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match target {
        ReferenceTarget::AnalyticGaussian { dim, curvature, beta } => {
            let sd = 1.0 / (curvature * beta).sqrt();
            let pts = (0..count * dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
            SampleSet::new(*dim, pts)
        }
        ReferenceTarget::Quadrature1d(t) => {
            let pts = (0..count).map(|_| t.quantile(rng.random::<f64>())).collect();
            SampleSet::new(1, pts)
        }
        ReferenceTarget::FineUla(f) => SampleSet::from_rows(f.spec.d(), &f.run(count, seed)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// `int V_2 d pi_beta`.
pub fn pi_moment_v2(target: &ReferenceTarget) -> Result<MomentEstimate> {
    match target {
        ReferenceTarget::AnalyticGaussian { dim, curvature, beta } => Ok(MomentEstimate {
            value: 1.0 + *dim as f64 / (curvature * beta),
            stderr: None,
        }),
        ReferenceTarget::Quadrature1d(t) => Ok(MomentEstimate {
            value: t.expectation(|x| 1.0 + x * x),
            stderr: None,
        }),
        ReferenceTarget::FineUla(f) => {
            let draws = f.run(f.moment_samples, f.seed)?;
            let vals: Vec<f64> = draws.iter().map(|t| v(2.0, t)).collect();
            let (m, s) = batch_mean_stderr(&vals, 20);
            Ok(MomentEstimate {
                value: m,
                stderr: Some(s),
            })
        }
    }
}

/// Mean with the standard error of `batches` non-overlapping batch means.
pub fn batch_mean_stderr(values: &[f64], batches: usize) -> (f64, f64) {
    let per = (values.len() / batches).max(1);
    let means: Vec<f64> = values.chunks(per).filter(|c| c.len() == per).map(|c| c.iter().sum::<f64>() / per as f64).collect();
    let (_, se) = mean_stderr(&means);
    (values.iter().sum::<f64>() / values.len() as f64, se)
}

/// Sample variance of the squared norms, averaged per coordinate.
pub fn per_coordinate_variance(s: &SampleSet) -> f64 {
    let n = s.len() as f64;
    let mean_sq = (0..s.len()).map(|i| norm_sq(s.point(i))).sum::<f64>() / n;
    let means: Vec<f64> = (0..s.dim).map(|j| s.column(j).iter().sum::<f64>() / n).collect();
    (mean_sq - norm_sq(&means)) / s.dim as f64 * n / (n - 1.0)
}
