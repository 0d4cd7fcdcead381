//! Target problems: the stochastic gradient `H(theta, x)`, its mean field
//! `h = grad U`, the potential `U`, and the declared assumption constants.
//!
//! `K1` and `K2` follow the coordinate-sum convention: each is the sum over
//! output coordinates of the per-coordinate Lipschitz constants, so both
//! grow linearly with the dimension.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::streams::{StreamSpec, StreamState};
use crate::theory::drift::mbar;
use crate::vector::{dist, dot, norm, norm_sq};

pub trait Objective: Send + Sync + fmt::Debug {
    fn dim_theta(&self) -> usize;
    fn dim_data(&self) -> usize;
    /// The stochastic gradient `H(theta, x)`.
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
    /// The mean field `h(theta) = grad U(theta)`.
    fn mean_field(&self, theta: &[f64], out: &mut [f64]);
    fn potential(&self, theta: &[f64]) -> f64;
}

/// Scalar constants of the Lipschitz and dissipativity assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub dim_theta: usize,
    pub dim_data: usize,
    pub lipschitz_theta: f64,
    pub lipschitz_data: f64,
    pub grad_at_origin: f64,
    pub dissip_a: f64,
    pub dissip_b: f64,
    pub beta: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        if self.dim_theta == 0 || self.dim_data == 0 {
            return Err(invalid("dimensions must be positive"));
        }
        let positive = [
            ("lipschitz_theta", self.lipschitz_theta),
            ("dissip_a", self.dissip_a),
            ("beta", self.beta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let nonneg = [
            ("lipschitz_data", self.lipschitz_data),
            ("grad_at_origin", self.grad_at_origin),
            ("dissip_b", self.dissip_b),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub constants: ProblemConstants,
    pub objective: Arc<dyn Objective>,
    /// Set when `pi_beta` is the centered Gaussian with precision
    /// `gaussian_curvature * beta`.
    pub gaussian_curvature: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("constants", &self.constants)
            .field("objective", &self.objective)
            .finish()
    }
}

impl ProblemSpec {
    pub fn d(&self) -> usize {
        self.constants.dim_theta
    }

    pub fn beta(&self) -> f64 {
        self.constants.beta
    }

    pub fn grad(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.objective.grad(theta, x, &mut out);
        out
    }

    pub fn mean_field(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.objective.mean_field(theta, &mut out);
        out
    }

    pub fn potential(&self, theta: &[f64]) -> f64 {
        self.objective.potential(theta)
    }
}

/// Parameters accepted by [`builtin_problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Regularization (predictor) or perturbation amplitude (cosine_quadratic).
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    /// Fraction of the curvature kept as the dissipativity constant when the
    /// data or the perturbation must be absorbed.
    #[serde(default)]
    pub dissipativity_fraction: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            dim: 1,
            a: 1.0,
            beta: 1.0,
            c: None,
            w: None,
            dissipativity_fraction: None,
        }
    }
}

pub const GAUSSIAN_FRACTION: f64 = 0.5;
pub const COSINE_FRACTION: f64 = 0.75;
pub const PREDICTOR_REGULARIZATION: f64 = 0.5;
pub const COSINE_AMPLITUDE: f64 = 0.25;

/// Build one of the named problems against the stream it will consume.
pub fn builtin_problem(name: &str, params: &ProblemParams, stream: &StreamSpec) -> Result<ProblemSpec> {
    stream.validate()?;
    if params.dim == 0 {
        return Err(invalid("dim must be positive"));
    }
    if !(params.a.is_finite() && params.a > 0.0) {
        return Err(invalid("a must be positive"));
    }
    if !(params.beta.is_finite() && params.beta > 0.0) {
        return Err(invalid("beta must be positive"));
    }
    let spec = match name {
        "gaussian" => gaussian(params, stream)?,
        "cosine_quadratic" => cosine_quadratic(params, stream)?,
        "predictor" => predictor(params, stream)?,
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    spec.constants.validate()?;
    Ok(spec)
}

fn fraction(params: &ProblemParams, default: f64) -> Result<f64> {
    let phi = params.dissipativity_fraction.unwrap_or(default);
    if !(phi > 0.0 && phi < 1.0) {
        return Err(invalid(format!("dissipativity_fraction must lie in (0, 1), got {phi}")));
    }
    Ok(phi)
}

fn check_data_dim(stream: &StreamSpec, expected: usize) -> Result<()> {
    if stream.emitted_dim() != expected {
        return Err(Error::Dimension {
            expected,
            got: stream.emitted_dim(),
        });
    }
    Ok(())
}

fn gaussian(params: &ProblemParams, stream: &StreamSpec) -> Result<ProblemSpec> {
    let d = params.dim;
    check_data_dim(stream, d)?;
    let a = params.a;
    let r = stream.support_radius();
    let (dissip_a, dissip_b) = if r == 0.0 {
        (a, 0.0)
    } else {
        let phi = fraction(params, GAUSSIAN_FRACTION)?;
        (phi * a, r * r / (4.0 * (1.0 - phi) * a))
    };
    Ok(ProblemSpec {
        name: "gaussian".into(),
        constants: ProblemConstants {
            dim_theta: d,
            dim_data: d,
            lipschitz_theta: d as f64 * a,
            lipschitz_data: d as f64,
            grad_at_origin: 0.0,
            dissip_a,
            dissip_b,
            beta: params.beta,
        },
        objective: Arc::new(Gaussian { a, d }),
        gaussian_curvature: Some(a),
    })
}

fn cosine_quadratic(params: &ProblemParams, stream: &StreamSpec) -> Result<ProblemSpec> {
    let d = params.dim;
    check_data_dim(stream, d)?;
    let a = params.a;
    let c = params.c.unwrap_or(COSINE_AMPLITUDE);
    let w = match &params.w {
        Some(w) if w.len() == d => w.clone(),
        Some(w) => {
            return Err(Error::Dimension {
                expected: d,
                got: w.len(),
            })
        }
        None => {
            let mut w = vec![0.0; d];
            w[0] = 1.0;
            w
        }
    };
    if !(c.is_finite() && c >= 0.0) {
        return Err(invalid("cosine amplitude c must be nonnegative"));
    }
    let wn = norm(&w);
    if c * wn >= a {
        return Err(invalid(format!(
            "cosine_quadratic is not dissipative with the declared margin: c*|w| = {} >= a = {a}",
            c * wn
        )));
    }
    let phi = fraction(params, COSINE_FRACTION)?;
    let r = stream.support_radius();
    let w1: f64 = w.iter().map(|v| v.abs()).sum();
    let shift = c * wn + r;
    Ok(ProblemSpec {
        name: "cosine_quadratic".into(),
        constants: ProblemConstants {
            dim_theta: d,
            dim_data: d,
            lipschitz_theta: d as f64 * a + c * wn * w1,
            lipschitz_data: d as f64,
            grad_at_origin: 0.0,
            dissip_a: phi * a,
            dissip_b: shift * shift / (4.0 * (1.0 - phi) * a),
            beta: params.beta,
        },
        objective: Arc::new(CosineQuadratic { a, c, w }),
        gaussian_curvature: None,
    })
}

/// `max_t 2 tanh(t) sech^2(t)`, rounded up.
const SECH2_DERIV_MAX: f64 = 0.769_801;
/// `max_t t sech^2(t)`, rounded up.
const T_SECH2_MAX: f64 = 0.447_8;

fn predictor(params: &ProblemParams, stream: &StreamSpec) -> Result<ProblemSpec> {
    let lags = params.dim;
    if stream.dim_data != 1 || stream.window != lags + 1 {
        return Err(invalid(format!(
            "predictor with {lags} lags needs a scalar stream with window {}, got dim_data {} and window {}",
            lags + 1,
            stream.dim_data,
            stream.window
        )));
    }
    let c = params.c.unwrap_or(PREDICTOR_REGULARIZATION);
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("predictor regularization c must be positive"));
    }
    let l = lags as f64;
    let z = stream.coordinate_bound();
    let k1_coord = 2.0 * z * z * l.sqrt() + 2.0 * SECH2_DERIV_MAX * (1.0 + l) * z * z + 2.0 * c;
    let k2_coord = 2.0 * z + 2.0 * z * l.sqrt() + 2.0 * (1.0 + l) * z;
    let autocov = (0..=lags).map(|k| stream.autocovariance(k)).collect();
    Ok(ProblemSpec {
        name: "predictor".into(),
        constants: ProblemConstants {
            dim_theta: lags,
            dim_data: lags + 1,
            lipschitz_theta: l * k1_coord,
            lipschitz_data: l * k2_coord,
            grad_at_origin: 0.0,
            dissip_a: 2.0 * c,
            dissip_b: 2.0 * T_SECH2_MAX * l * (1.0 + l) * z * z,
            beta: params.beta,
        },
        objective: Arc::new(Predictor { lags, c, autocov }),
        gaussian_curvature: None,
    })
}

#[derive(Debug, Clone)]
pub struct Gaussian {
    pub a: f64,
    pub d: usize,
}

impl Objective for Gaussian {
    fn dim_theta(&self) -> usize {
        self.d
    }
    fn dim_data(&self) -> usize {
        self.d
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        for ((o, t), x) in out.iter_mut().zip(theta).zip(x) {
            *o = self.a * t + x;
        }
    }
    fn mean_field(&self, theta: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(theta) {
            *o = self.a * t;
        }
    }
    fn potential(&self, theta: &[f64]) -> f64 {
        0.5 * self.a * norm_sq(theta)
    }
}

/// `U(theta) = a|theta|^2/2 + c cos<w, theta> + c`.
#[derive(Debug, Clone)]
pub struct CosineQuadratic {
    pub a: f64,
    pub c: f64,
    pub w: Vec<f64>,
}

impl Objective for CosineQuadratic {
    fn dim_theta(&self) -> usize {
        self.w.len()
    }
    fn dim_data(&self) -> usize {
        self.w.len()
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        self.mean_field(theta, out);
        for (o, x) in out.iter_mut().zip(x) {
            *o += x;
        }
    }
    fn mean_field(&self, theta: &[f64], out: &mut [f64]) {
        let s = self.c * dot(&self.w, theta).sin();
        for ((o, t), w) in out.iter_mut().zip(theta).zip(&self.w) {
            *o = self.a * t - s * w;
        }
    }
    fn potential(&self, theta: &[f64]) -> f64 {
        0.5 * self.a * norm_sq(theta) + self.c * dot(&self.w, theta).cos() + self.c
    }
}

/// Regularized one-step predictor `f_theta(z) = sum_i tanh(theta_i) z_i` of a
/// scalar stationary sequence from its last `lags` values. The data vector is
/// `x = [Z_n, Z_{n-1}, ..., Z_{n-lags}]`.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub lags: usize,
    pub c: f64,
    /// Stationary autocovariance of the base sequence at lags `0..=lags`.
    pub autocov: Vec<f64>,
}

impl Objective for Predictor {
    fn dim_theta(&self) -> usize {
        self.lags
    }
    fn dim_data(&self) -> usize {
        self.lags + 1
    }
    fn grad(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let target = x[0];
        let lagged = &x[1..];
        let pred: f64 = theta.iter().zip(lagged).map(|(t, z)| t.tanh() * z).sum();
        let resid = target - pred;
        for ((o, t), z) in out.iter_mut().zip(theta).zip(lagged) {
            let th = t.tanh();
            *o = -2.0 * resid * (1.0 - th * th) * z + 2.0 * self.c * t;
        }
    }
    fn mean_field(&self, theta: &[f64], out: &mut [f64]) {
        let g = &self.autocov;
        let th: Vec<f64> = theta.iter().map(|t| t.tanh()).collect();
        for i in 0..self.lags {
            // d/dt_i of -2 sum_j t_j g(j+1) + sum_{j,l} t_j t_l g(|j-l|)
            let mut s = -2.0 * g[i + 1];
            for (j, tj) in th.iter().enumerate() {
                s += 2.0 * tj * g[i.abs_diff(j)];
            }
            out[i] = s * (1.0 - th[i] * th[i]) + 2.0 * self.c * theta[i];
        }
    }
    fn potential(&self, theta: &[f64]) -> f64 {
        let g = &self.autocov;
        let th: Vec<f64> = theta.iter().map(|t| t.tanh()).collect();
        let mut u = g[0];
        for (j, tj) in th.iter().enumerate() {
            u -= 2.0 * tj * g[j + 1];
            for (l, tl) in th.iter().enumerate() {
                u += tj * tl * g[j.abs_diff(l)];
            }
        }
        u.max(0.0) + self.c * norm_sq(theta)
    }
}

/// Worst-case slacks of the declared assumptions over random probes.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub lipschitz: Slack,
    pub dissipativity: Slack,
    pub linear_growth: Slack,
    pub nonnegativity: Slack,
}

#[derive(Debug, Clone, Serialize)]
pub struct Slack {
    pub min: f64,
    /// `(theta, x, theta', x')` at the minimum; primed parts empty when unused.
    pub worst: (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>),
}

impl Slack {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            worst: Default::default(),
        }
    }

    fn record(&mut self, v: f64, t: &[f64], x: &[f64], t2: &[f64], x2: &[f64]) {
        if v < self.min {
            self.min = v;
            self.worst = (t.to_vec(), x.to_vec(), t2.to_vec(), x2.to_vec());
        }
    }
}

impl ProbeReport {
    pub fn passes(&self, tol: f64) -> bool {
        [&self.lipschitz, &self.dissipativity, &self.linear_growth, &self.nonnegativity]
            .iter()
            .all(|s| s.min >= -tol)
    }
}

pub(crate) fn uniform_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let n = norm(out);
    let u: f64 = rng.random();
    let scale = if n > 0.0 { radius * u.powf(1.0 / d as f64) / n } else { 0.0 };
    for v in out.iter_mut() {
        *v *= scale;
    }
}

pub(crate) fn support_point(rng: &mut ChaCha8Rng, bound: f64, out: &mut [f64]) {
    // A quarter of the probes sit on corners of the support box, where the
    // data-dependent slacks are tightest.
    let corner = rng.random::<f64>() < 0.25;
    for v in out.iter_mut() {
        let u: f64 = rng.random();
        *v = if corner {
            if u < 0.5 { -bound } else { bound }
        } else {
            bound * (2.0 * u - 1.0)
        };
    }
}

/// Numerically falsify the declared constants on random probe pairs.
pub fn probe_assumptions(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    num_samples: usize,
    radius: f64,
    seed: u64,
) -> ProbeReport {
    let k = &spec.constants;
    let d = k.dim_theta;
    let m = stream.emitted_dim();
    let bound = stream.coordinate_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut t2) = (vec![0.0; d], vec![0.0; d]);
    let (mut x, mut x2) = (vec![0.0; m], vec![0.0; m]);
    let (mut h, mut h2) = (vec![0.0; d], vec![0.0; d]);
    let mut report = ProbeReport {
        samples: num_samples,
        lipschitz: Slack::new(),
        dissipativity: Slack::new(),
        linear_growth: Slack::new(),
        nonnegativity: Slack::new(),
    };
    for i in 0..num_samples {
        uniform_ball(&mut rng, d, radius, &mut t);
        support_point(&mut rng, bound, &mut x);
        // Every eighth pair is a small perturbation to probe local slopes.
        if i % 8 == 7 {
            for (a, b) in t2.iter_mut().zip(&t) {
                *a = b + 1e-3 * rng.sample::<f64, _>(StandardNormal);
            }
            x2.copy_from_slice(&x);
        } else {
            uniform_ball(&mut rng, d, radius, &mut t2);
            support_point(&mut rng, bound, &mut x2);
        }
        spec.objective.grad(&t, &x, &mut h);
        spec.objective.grad(&t2, &x2, &mut h2);
        let lip = k.lipschitz_theta * dist(&t, &t2) + k.lipschitz_data * dist(&x, &x2) - dist(&h, &h2);
        report.lipschitz.record(lip, &t, &x, &t2, &x2);
        let dis = dot(&h, &t) - k.dissip_a * norm_sq(&t) + k.dissip_b;
        report.dissipativity.record(dis, &t, &x, &[], &[]);
        let growth = k.lipschitz_theta * norm(&t) + k.lipschitz_data * norm(&x) + k.grad_at_origin - norm(&h);
        report.linear_growth.record(growth, &t, &x, &[], &[]);
        report.nonnegativity.record(spec.potential(&t), &t, &[], &[], &[]);
    }
    report
}

/// Per-coordinate Monte Carlo check of `E[H(theta, X)] = h(theta)`.
#[derive(Debug, Clone)]
pub struct MeanFieldCheck {
    pub mc_mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_field: Vec<f64>,
}

impl MeanFieldCheck {
    pub fn max_z_score(&self) -> f64 {
        self.mc_mean
            .iter()
            .zip(&self.stderr)
            .zip(&self.mean_field)
            .map(|((m, s), h)| {
                let diff = (m - h).abs();
                if *s > 0.0 {
                    diff / s
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Average `H(theta, X_n)` along one stream path. Standard errors use
/// non-overlapping batch means so serial dependence is accounted for.
pub fn mean_field_check(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    theta: &[f64],
    draws: usize,
    seed: u64,
) -> Result<MeanFieldCheck> {
    let d = spec.d();
    let mut state = StreamState::from_rng(stream, ChaCha8Rng::seed_from_u64(seed))?;
    let batches = 100usize;
    let per = (draws / batches).max(1);
    let mut x = vec![0.0; stream.emitted_dim()];
    let mut h = vec![0.0; d];
    let mut batch_means = vec![vec![0.0; batches]; d];
    for b in 0..batches {
        let mut acc = vec![0.0; d];
        for _ in 0..per {
            state.next_into(&mut x);
            spec.objective.grad(theta, &x, &mut h);
            for (a, v) in acc.iter_mut().zip(&h) {
                *a += v;
            }
        }
        for i in 0..d {
            batch_means[i][b] = acc[i] / per as f64;
        }
    }
    let mut mc_mean = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    for bm in &batch_means {
        let (m, s) = crate::vector::mean_stderr(bm);
        mc_mean.push(m);
        stderr.push(s);
    }
    Ok(MeanFieldCheck {
        mc_mean,
        stderr,
        mean_field: spec.mean_field(theta),
    })
}

/// Normalized one-dimensional Gibbs density on a grid.
#[derive(Debug, Clone)]
pub struct TargetDensity1d {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
}

pub const TAIL_MASS_TOL: f64 = 1e-8;
pub const MAX_GRID_SPACING: f64 = 1e-2;

/// `exp(-beta U)` normalized by the trapezoidal rule over `grid`.
///
/// The grid is rejected if it is too coarse or if the mass outside it may
/// exceed `1e-8`. The tail mass is bounded through dissipativity of the mean
/// field: for `|theta| >= L`, `U(theta) - U(L) >= a(theta^2 - L^2)/2 - b ln(theta/L)`.
pub fn target_density_1d(spec: &ProblemSpec, grid: &[f64]) -> Result<TargetDensity1d> {
    if spec.d() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: spec.d(),
        });
    }
    if grid.len() < 3 {
        return Err(Error::Grid("at least three grid points are required".into()));
    }
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        if !(h > 0.0) {
            return Err(Error::Grid("grid must be strictly increasing".into()));
        }
        if h > MAX_GRID_SPACING * (1.0 + 1e-9) {
            return Err(Error::Grid(format!("grid spacing {h} exceeds {MAX_GRID_SPACING}")));
        }
    }
    let beta = spec.beta();
    let u: Vec<f64> = grid.iter().map(|t| spec.potential(&[*t])).collect();
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let density_raw: Vec<f64> = u.iter().map(|v| (-beta * (v - umin)).exp()).collect();
    let mut cum = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        cum[i] = cum[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (density_raw[i] + density_raw[i - 1]);
    }
    let z = cum[grid.len() - 1];
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NonFinite("normalizing constant".into()));
    }
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::Grid("grid must straddle the origin".into()));
    }
    let tail = tail_mass(spec, -lo, u[0] - umin, z)? + tail_mass(spec, hi, u[grid.len() - 1] - umin, z)?;
    if tail > TAIL_MASS_TOL {
        return Err(Error::Grid(format!(
            "tail mass beyond [{lo}, {hi}] may reach {tail:e}; widen the grid (M̄(4) = {})",
            mbar(&spec.constants, 4)
        )));
    }
    let density = density_raw.iter().map(|v| v / z).collect();
    let cdf = cum.iter().map(|v| v / z).collect();
    Ok(TargetDensity1d {
        grid: grid.to_vec(),
        density,
        cdf,
    })
}

/// Bound on the normalized mass beyond `|theta| = edge` on one side.
fn tail_mass(spec: &ProblemSpec, edge: f64, u_edge: f64, z: f64) -> Result<f64> {
    let k = &spec.constants;
    let (a, b, beta) = (k.dissip_a, k.dissip_b, k.beta);
    let log_env = |r: f64| -beta * a * 0.5 * (r * r - edge * edge) + beta * b * (r / edge).ln();
    // The envelope peaks at r* = sqrt(b/a); beyond max(edge, r*) it decays
    // like a Gaussian with variance 1/(beta a).
    let start = edge.max((b / a).sqrt());
    let span = start + 40.0 / (beta * a).sqrt();
    let mut integral = adaptive_simpson(|r| log_env(r).exp(), edge, span, 1e-8)?;
    // Beyond `span` bound the remainder by a Gaussian tail envelope.
    integral += log_env(span).exp() / (beta * a * span);
    Ok((-beta * u_edge).exp() * integral / z)
}

impl TargetDensity1d {
    pub fn spacing_max(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Trapezoidal integral of `f` against the density.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut s = 0.0;
        for i in 1..self.grid.len() {
            let (t0, t1) = (self.grid[i - 1], self.grid[i]);
            s += 0.5 * (t1 - t0) * (f(t0) * self.density[i - 1] + f(t1) * self.density[i]);
        }
        s
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|t| t)
    }

    /// Inverse of the cumulative trapezoidal CDF, linear between nodes.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.grid.len();
        if u <= 0.0 {
            return self.grid[0];
        }
        if u >= 1.0 {
            return self.grid[n - 1];
        }
        let i = self.cdf.partition_point(|c| *c < u);
        if i == 0 {
            return self.grid[0];
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        if c1 > c0 {
            t0 + (u - c0) / (c1 - c0) * (t1 - t0)
        } else {
            t1
        }
    }

    /// CDF at `t`, linear between nodes.
    pub fn cdf_at(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if t <= self.grid[0] {
            return 0.0;
        }
        if t >= self.grid[n - 1] {
            return 1.0;
        }
        let i = self.grid.partition_point(|g| *g < t);
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        c0 + (t - t0) / (t1 - t0) * (c1 - c0)
    }
}

/// Uniform grid on `[-half_width, half_width]` with the given spacing.
pub fn symmetric_grid(half_width: f64, spacing: f64) -> Vec<f64> {
    let n = (half_width / spacing).round() as i64;
    (-n..=n).map(|i| i as f64 * spacing).collect()
}
