//! The SGLD recursion `theta' = theta - lambda H(theta, x) + sqrt(2 lambda / beta) xi`.
//!
//! Every chain owns three independent ChaCha substreams derived from
//! `(seed, chain_id)`: one for the initial draw, one for the data stream and
//! one for the Gaussian noise. Results depend on the chain id only, never on
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::potentials::{ProblemConstants, ProblemSpec};
use crate::streams::{StreamSpec, StreamState};
use crate::vector::all_finite;
use crate::wasserstein::SampleSet;

pub fn lambda_max(k: &ProblemConstants) -> f64 {
    let a = k.dissip_a;
    let k1 = k.lipschitz_theta;
    (a / (2.0 * k1 * k1)).min(1.0 / a)
}

/// One SGLD step with caller-supplied standard Gaussian `xi`.
pub fn step(theta: &[f64], x: &[f64], lambda: f64, beta: f64, xi: &[f64], spec: &ProblemSpec) -> Result<Vec<f64>> {
    let d = spec.d();
    for (len, want) in [(theta.len(), d), (xi.len(), d), (x.len(), spec.constants.dim_data)] {
        if len != want {
            return Err(Error::Dimension { expected: want, got: len });
        }
    }
    if !(all_finite(theta) && all_finite(x) && all_finite(xi) && lambda.is_finite() && beta.is_finite()) {
        return Err(Error::NonFinite("step inputs".into()));
    }
    let lmax = lambda_max(&spec.constants);
    if lambda > lmax {
        return Err(Error::StepTooLarge { step: lambda, max: lmax });
    }
    let mut out = vec![0.0; d];
    let mut h = vec![0.0; d];
    step_into(theta, x, lambda, (2.0 * lambda / beta).sqrt(), xi, spec, &mut h, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn step_into(
    theta: &[f64],
    x: &[f64],
    lambda: f64,
    noise_scale: f64,
    xi: &[f64],
    spec: &ProblemSpec,
    h: &mut [f64],
    out: &mut [f64],
) {
    spec.objective.grad(theta, x, h);
    for i in 0..theta.len() {
        out[i] = theta[i] - lambda * h[i] + noise_scale * xi[i];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitLaw {
    Point(Vec<f64>),
    Gaussian { mean: Vec<f64>, scale: f64 },
}

impl Default for InitLaw {
    fn default() -> Self {
        InitLaw::Point(vec![0.0])
    }
}

impl InitLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitLaw::Point(p) => p.len(),
            InitLaw::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            InitLaw::Point(p) => p.clone(),
            InitLaw::Gaussian { mean, scale } => mean
                .iter()
                .map(|m| m + scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    }

    /// `E|theta_0|^2`.
    pub fn second_moment(&self) -> f64 {
        match self {
            InitLaw::Point(p) => p.iter().map(|v| v * v).sum(),
            InitLaw::Gaussian { mean, scale } => {
                let m2: f64 = mean.iter().map(|v| v * v).sum();
                m2 + mean.len() as f64 * scale * scale
            }
        }
    }

    /// `E|theta_0|^4`.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            InitLaw::Point(p) => {
                let m2: f64 = p.iter().map(|v| v * v).sum();
                m2 * m2
            }
            InitLaw::Gaussian { mean, scale } => {
                let m2: f64 = mean.iter().map(|v| v * v).sum();
                let d = mean.len() as f64;
                let s2 = scale * scale;
                (m2 + d * s2).powi(2) + 4.0 * s2 * m2 + 2.0 * d * s2 * s2
            }
        }
    }
}

fn default_thin() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgldConfig {
    pub step_size: f64,
    pub horizon: u64,
    pub beta: f64,
    pub ensemble: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: InitLaw,
    /// Record every `thin`-th iterate in trajectories.
    #[serde(default = "default_thin")]
    pub thin: usize,
}

impl SgldConfig {
    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        let lmax = lambda_max(&spec.constants);
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.step_size > lmax {
            return Err(Error::StepTooLarge {
                step: self.step_size,
                max: lmax,
            });
        }
        if self.ensemble == 0 {
            return Err(invalid("ensemble must be at least 1"));
        }
        if self.thin == 0 {
            return Err(invalid("thin must be at least 1"));
        }
        if (self.beta - spec.beta()).abs() > 1e-12 * spec.beta() {
            return Err(invalid(format!(
                "sgld beta {} differs from the problem's beta {}",
                self.beta,
                spec.beta()
            )));
        }
        if self.init.dim() != spec.d() {
            return Err(Error::Dimension {
                expected: spec.d(),
                got: self.init.dim(),
            });
        }
        if let InitLaw::Gaussian { scale, .. } = self.init {
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(invalid("init scale must be nonnegative"));
            }
        }
        Ok(())
    }
}

const INIT_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Independent substream `k` of chain `chain_id`.
pub fn substream(seed: u64, chain_id: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_id * 4 + k);
    rng
}

/// State of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub iterate: Vec<f64>,
    pub step_index: u64,
    noise: ChaCha8Rng,
    stream: StreamState,
    x: Vec<f64>,
    xi: Vec<f64>,
    h: Vec<f64>,
    next: Vec<f64>,
}

impl ChainState {
    pub fn new(spec: &ProblemSpec, stream: &StreamSpec, cfg: &SgldConfig, chain_id: u64) -> Result<Self> {
        if stream.emitted_dim() != spec.constants.dim_data {
            return Err(Error::Dimension {
                expected: spec.constants.dim_data,
                got: stream.emitted_dim(),
            });
        }
        let mut init_rng = substream(cfg.seed, chain_id, INIT_STREAM);
        let iterate = cfg.init.sample(&mut init_rng);
        let stream_state = StreamState::from_rng(stream, substream(cfg.seed, chain_id, DATA_STREAM))?;
        let d = spec.d();
        Ok(Self {
            iterate,
            step_index: 0,
            noise: substream(cfg.seed, chain_id, NOISE_STREAM),
            stream: stream_state,
            x: vec![0.0; stream.emitted_dim()],
            xi: vec![0.0; d],
            h: vec![0.0; d],
            next: vec![0.0; d],
        })
    }

    #[inline]
    pub fn advance(&mut self, spec: &ProblemSpec, lambda: f64, noise_scale: f64) {
        self.stream.next_into(&mut self.x);
        for v in self.xi.iter_mut() {
            *v = self.noise.sample(StandardNormal);
        }
        step_into(&self.iterate, &self.x, lambda, noise_scale, &self.xi, spec, &mut self.h, &mut self.next);
        std::mem::swap(&mut self.iterate, &mut self.next);
        self.step_index += 1;
    }
}

/// Recorded iterates of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub chain_id: u64,
    pub dim: usize,
    pub steps: Vec<u64>,
    /// Row-major iterates, one row per entry of `steps`.
    pub states: Vec<f64>,
}

impl Trajectory {
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.steps.len() - 1)
    }
}

fn drive<F: FnMut(u64, &[f64])>(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    cfg: &SgldConfig,
    chain_id: u64,
    horizon: u64,
    mut visit: F,
) -> Result<()> {
    cfg.validate(spec)?;
    let mut chain = ChainState::new(spec, stream, cfg, chain_id)?;
    let lambda = cfg.step_size;
    let noise_scale = (2.0 * lambda / cfg.beta).sqrt();
    visit(0, &chain.iterate);
    for _ in 0..horizon {
        chain.advance(spec, lambda, noise_scale);
        visit(chain.step_index, &chain.iterate);
    }
    if !all_finite(&chain.iterate) {
        return Err(Error::NonFinite(format!("chain {chain_id} diverged")));
    }
    Ok(())
}

/// Run one chain to `cfg.horizon`, recording every `cfg.thin`-th iterate
/// and always the last one.
pub fn run_chain(spec: &ProblemSpec, stream: &StreamSpec, cfg: &SgldConfig, chain_id: u64) -> Result<Trajectory> {
    let d = spec.d();
    let thin = cfg.thin.max(1) as u64;
    let mut traj = Trajectory {
        chain_id,
        dim: d,
        steps: Vec::new(),
        states: Vec::new(),
    };
    drive(spec, stream, cfg, chain_id, cfg.horizon, |n, theta| {
        if n % thin == 0 || n == cfg.horizon {
            traj.steps.push(n);
            traj.states.extend_from_slice(theta);
        }
    })?;
    Ok(traj)
}

/// Final iterate of one chain.
pub fn run_chain_final(spec: &ProblemSpec, stream: &StreamSpec, cfg: &SgldConfig, chain_id: u64) -> Result<Vec<f64>> {
    let mut last = Vec::new();
    drive(spec, stream, cfg, chain_id, cfg.horizon, |n, theta| {
        if n == cfg.horizon {
            last = theta.to_vec();
        }
    })?;
    Ok(last)
}

/// Iterates of one chain at the given increasing step indices.
pub fn run_chain_checkpoints(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    cfg: &SgldConfig,
    chain_id: u64,
    checkpoints: &[u64],
) -> Result<Vec<Vec<f64>>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints must be strictly increasing"));
    }
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    drive(spec, stream, cfg, chain_id, horizon, |n, theta| {
        if next < checkpoints.len() && checkpoints[next] == n {
            out.push(theta.to_vec());
            next += 1;
        }
    })?;
    Ok(out)
}

/// Final iterates of `cfg.ensemble` independent chains, in chain order.
pub fn run_ensemble(spec: &ProblemSpec, stream: &StreamSpec, cfg: &SgldConfig) -> Result<SampleSet> {
    cfg.validate(spec)?;
    let finals: Vec<Vec<f64>> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|id| run_chain_final(spec, stream, cfg, id))
        .collect::<Result<_>>()?;
    SampleSet::from_rows(spec.d(), &finals)
}

/// One sample set per checkpoint, each holding every chain in chain order.
pub fn run_ensemble_checkpoints(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    cfg: &SgldConfig,
    checkpoints: &[u64],
) -> Result<Vec<SampleSet>> {
    cfg.validate(spec)?;
    let per_chain: Vec<Vec<Vec<f64>>> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|id| run_chain_checkpoints(spec, stream, cfg, id, checkpoints))
        .collect::<Result<_>>()?;
    (0..checkpoints.len())
        .map(|c| {
            let rows: Vec<Vec<f64>> = per_chain.iter().map(|chain| chain[c].clone()).collect();
            SampleSet::from_rows(spec.d(), &rows)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{builtin_problem, ProblemParams};

    fn gaussian(bound: f64) -> (ProblemSpec, StreamSpec) {
        let stream = StreamSpec::iid(1, bound);
        (builtin_problem("gaussian", &ProblemParams::default(), &stream).unwrap(), stream)
    }

    fn cfg(step: f64, horizon: u64) -> SgldConfig {
        SgldConfig {
            step_size: step,
            horizon,
            beta: 1.0,
            ensemble: 1,
            seed: 42,
            init: InitLaw::Point(vec![0.0]),
            thin: 1,
        }
    }

    fn k(a: f64, k1: f64) -> ProblemConstants {
        ProblemConstants {
            dim_theta: 1,
            dim_data: 1,
            lipschitz_theta: k1,
            lipschitz_data: 1.0,
            grad_at_origin: 0.0,
            dissip_a: a,
            dissip_b: 0.0,
            beta: 1.0,
        }
    }

    #[test]
    fn lambda_max_examples() {
        assert_eq!(lambda_max(&k(1.0, 1.0)), 0.5);
        assert_eq!(lambda_max(&k(2.0, 4.0)), 0.0625);
        assert_eq!(lambda_max(&k(0.5, 0.5)), 1.0);
    }

    #[test]
    fn step_examples() {
        let (spec, _) = gaussian(0.0);
        assert_eq!(step(&[1.0], &[0.0], 0.5, 1.0, &[0.0], &spec).unwrap(), vec![0.5]);
        let v = step(&[0.0], &[0.0], 0.5, 2.0, &[1.0], &spec).unwrap()[0];
        assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
        let v = step(&[1.0], &[0.5], 0.1, 1.0, &[0.0], &spec).unwrap()[0];
        assert!((v - 0.85).abs() < 1e-15);
        assert!(step(&[f64::NAN], &[0.0], 0.1, 1.0, &[0.0], &spec).is_err());
        assert!(matches!(
            step(&[1.0], &[0.0], 0.6, 1.0, &[0.0], &spec),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn zero_horizon_returns_initial_draw() {
        let (spec, stream) = gaussian(1.0);
        let mut c = cfg(0.1, 0);
        c.init = InitLaw::Point(vec![2.5]);
        let t = run_chain(&spec, &stream, &c, 3).unwrap();
        assert_eq!(t.steps, vec![0]);
        assert_eq!(t.states, vec![2.5]);
    }

    #[test]
    fn replay_is_bitwise() {
        let (spec, stream) = gaussian(1.0);
        let c = cfg(0.1, 500);
        let a = run_chain(&spec, &stream, &c, 7).unwrap();
        let b = run_chain(&spec, &stream, &c, 7).unwrap();
        assert_eq!(a, b);
        let other = run_chain(&spec, &stream, &c, 8).unwrap();
        assert_ne!(a.last(), other.last());
    }

    #[test]
    fn thinning_keeps_last() {
        let (spec, stream) = gaussian(1.0);
        let mut c = cfg(0.1, 10);
        c.thin = 4;
        let t = run_chain(&spec, &stream, &c, 0).unwrap();
        assert_eq!(t.steps, vec![0, 4, 8, 10]);
        let full = run_chain(&spec, &stream, &cfg(0.1, 10), 0).unwrap();
        assert_eq!(t.last(), full.last());
    }

    #[test]
    fn ensemble_of_one_matches_chain() {
        let (spec, stream) = gaussian(1.0);
        let c = cfg(0.1, 50);
        let s = run_ensemble(&spec, &stream, &c).unwrap();
        let f = run_chain_final(&spec, &stream, &c, 0).unwrap();
        assert_eq!(s.points, f);
    }

    #[test]
    fn checkpoints_match_trajectory() {
        let (spec, stream) = gaussian(1.0);
        let c = cfg(0.1, 30);
        let t = run_chain(&spec, &stream, &c, 2).unwrap();
        let cps = run_chain_checkpoints(&spec, &stream, &c, 2, &[0, 5, 30]).unwrap();
        assert_eq!(cps[0], t.state(0));
        assert_eq!(cps[1], t.state(5));
        assert_eq!(cps[2], t.state(30));
        assert!(run_chain_checkpoints(&spec, &stream, &c, 2, &[5, 5]).is_err());
    }

    #[test]
    fn rejects_oversized_step() {
        let (spec, stream) = gaussian(0.0);
        assert!(matches!(
            run_chain(&spec, &stream, &cfg(0.75, 1), 0),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn gaussian_init_moments() {
        let law = InitLaw::Gaussian {
            mean: vec![1.0, -2.0],
            scale: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 400_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..n {
            let v = law.sample(&mut rng);
            let r2: f64 = v.iter().map(|x| x * x).sum();
            m2 += r2;
            m4 += r2 * r2;
        }
        assert!((m2 / n as f64 - law.second_moment()).abs() < 0.02 * law.second_moment());
        assert!((m4 / n as f64 - law.fourth_moment()).abs() < 0.02 * law.fourth_moment());
    }
}
