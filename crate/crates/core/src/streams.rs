//! Bounded, centered, stationary data streams with closed-form mixing bounds.
//!
//! Every family is built from i.i.d. uniform innovations on `[-B, B]`, one
//! independent scalar process per coordinate. A stream may additionally be
//! windowed: with `window = L + 1` each emitted sample is the concatenation
//! `[Z_n, Z_{n-1}, ..., Z_{n-L}]` of the last `L + 1` base samples.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const AR1_BURN_IN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamFamily {
    IidUniform,
    Ar1Bounded,
    MovingAverage,
}

impl std::str::FromStr for StreamFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid_uniform" => Ok(Self::IidUniform),
            "ar1_bounded" => Ok(Self::Ar1Bounded),
            "moving_average" => Ok(Self::MovingAverage),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub family: StreamFamily,
    #[serde(default = "default_one")]
    pub dim_data: usize,
    pub innovation_bound: f64,
    #[serde(default)]
    pub correlation: f64,
    #[serde(default = "default_one")]
    pub order: usize,
    #[serde(default = "default_one")]
    pub window: usize,
    #[serde(default)]
    pub moment_bound_4: Option<f64>,
    #[serde(default)]
    pub mixing_m3_sq: Option<f64>,
    #[serde(default)]
    pub mixing_g3_sq: Option<f64>,
    #[serde(default)]
    pub mixing_g2_0: Option<f64>,
}

/// Closed-form conditional L-mixing bounds of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingBounds {
    pub m2: f64,
    pub m3: f64,
    pub g2: f64,
    pub g3: f64,
    pub g2_0: f64,
    pub moment_bound_4: f64,
}

impl StreamSpec {
    pub fn iid(dim_data: usize, bound: f64) -> Self {
        Self::new(StreamFamily::IidUniform, dim_data, bound, 0.0, 1)
    }

    pub fn ar1(dim_data: usize, bound: f64, rho: f64) -> Self {
        Self::new(StreamFamily::Ar1Bounded, dim_data, bound, rho, 1)
    }

    pub fn moving_average(dim_data: usize, bound: f64, rho: f64, order: usize) -> Self {
        Self::new(StreamFamily::MovingAverage, dim_data, bound, rho, order)
    }

    fn new(family: StreamFamily, dim_data: usize, bound: f64, rho: f64, order: usize) -> Self {
        Self {
            family,
            dim_data,
            innovation_bound: bound,
            correlation: rho,
            order,
            window: 1,
            moment_bound_4: None,
            mixing_m3_sq: None,
            mixing_g3_sq: None,
            mixing_g2_0: None,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_data == 0 {
            return Err(invalid("stream dim_data must be positive"));
        }
        if self.window == 0 {
            return Err(invalid("stream window must be positive"));
        }
        if !(self.innovation_bound.is_finite() && self.innovation_bound >= 0.0) {
            return Err(invalid("innovation_bound must be finite and nonnegative"));
        }
        match self.family {
            StreamFamily::IidUniform => {}
            StreamFamily::Ar1Bounded | StreamFamily::MovingAverage => {
                if !(self.correlation.abs() < 1.0) {
                    return Err(invalid(format!(
                        "correlation must satisfy |rho| < 1, got {}",
                        self.correlation
                    )));
                }
                if self.family == StreamFamily::MovingAverage && self.order == 0 {
                    return Err(invalid("moving_average order must be positive"));
                }
            }
        }
        let analytic = self.analytic_mixing_bounds();
        let declared = [
            ("moment_bound_4", self.moment_bound_4, analytic.moment_bound_4),
            ("mixing_m3_sq", self.mixing_m3_sq, analytic.m3),
            ("mixing_g3_sq", self.mixing_g3_sq, analytic.g3),
            ("mixing_g2_0", self.mixing_g2_0, analytic.g2_0),
        ];
        for (name, value, floor) in declared {
            if let Some(v) = value {
                if !(v.is_finite() && v >= floor * (1.0 - 1e-12)) {
                    return Err(invalid(format!(
                        "{name} = {v} is below the analytic bound {floor}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Length of each emitted sample, `dim_data * window`.
    pub fn emitted_dim(&self) -> usize {
        self.dim_data * self.window
    }

    /// Bound on the absolute value of every emitted coordinate.
    pub fn coordinate_bound(&self) -> f64 {
        let b = self.innovation_bound;
        let r = self.correlation.abs();
        match self.family {
            StreamFamily::IidUniform => b,
            StreamFamily::Ar1Bounded => b / (1.0 - r),
            StreamFamily::MovingAverage => b * (1.0 + ma_tail(r, self.order)),
        }
    }

    /// Bound on the Euclidean norm of an emitted sample.
    pub fn support_radius(&self) -> f64 {
        (self.emitted_dim() as f64).sqrt() * self.coordinate_bound()
    }

    pub fn analytic_mixing_bounds(&self) -> MixingBounds {
        let m = self.dim_data as f64;
        let b = self.innovation_bound;
        let r = self.correlation.abs();
        let (big_m, gamma) = match self.family {
            StreamFamily::IidUniform => (m * b, m * b),
            StreamFamily::Ar1Bounded => (m * b / (1.0 - r), 2.0 * m * b / ((1.0 - r) * (1.0 - r))),
            StreamFamily::MovingAverage => {
                let weighted: f64 = (0..=self.order)
                    .map(|k| (k + 1) as f64 * r.powi(k as i32))
                    .sum();
                (m * b * (1.0 + ma_tail(r, self.order)), 2.0 * m * b * weighted)
            }
        };
        let l = (self.window - 1) as f64;
        let w = self.window as f64;
        let gamma = w * gamma + l * w * big_m;
        let big_m = w * big_m;
        MixingBounds {
            m2: big_m,
            m3: big_m,
            g2: gamma,
            g3: gamma,
            g2_0: gamma,
            moment_bound_4: self.support_radius().powi(4),
        }
    }

    /// Declared metadata, falling back to the analytic bounds where absent.
    pub fn effective_mixing(&self) -> MixingBounds {
        let a = self.analytic_mixing_bounds();
        MixingBounds {
            m3: self.mixing_m3_sq.unwrap_or(a.m3),
            g3: self.mixing_g3_sq.unwrap_or(a.g3),
            g2_0: self.mixing_g2_0.unwrap_or(a.g2_0),
            moment_bound_4: self.moment_bound_4.unwrap_or(a.moment_bound_4),
            ..a
        }
    }

    /// Populate every missing metadata field with its analytic bound.
    pub fn with_analytic_metadata(mut self) -> Self {
        let e = self.effective_mixing();
        self.mixing_m3_sq = Some(e.m3);
        self.mixing_g3_sq = Some(e.g3);
        self.mixing_g2_0 = Some(e.g2_0);
        self.moment_bound_4 = Some(e.moment_bound_4);
        self
    }

    /// Stationary autocovariance of one scalar base coordinate at lag `k`.
    pub fn autocovariance(&self, k: usize) -> f64 {
        let var = self.innovation_bound * self.innovation_bound / 3.0;
        let rho = self.correlation;
        match self.family {
            StreamFamily::IidUniform => {
                if k == 0 {
                    var
                } else {
                    0.0
                }
            }
            StreamFamily::Ar1Bounded => var * rho.powi(k as i32) / (1.0 - rho * rho),
            StreamFamily::MovingAverage => {
                let q = self.order;
                if k > q {
                    return 0.0;
                }
                (0..=q - k)
                    .map(|i| rho.powi(i as i32) * rho.powi((i + k) as i32))
                    .sum::<f64>()
                    * var
            }
        }
    }
}

fn ma_tail(r: f64, order: usize) -> f64 {
    (1..=order).map(|k| r.powi(k as i32)).sum()
}

/// Sampling state of a stream; single owner.
#[derive(Debug, Clone)]
pub struct StreamState {
    spec: StreamSpec,
    rng: ChaCha8Rng,
    /// Current base value per coordinate (ar1).
    level: Vec<f64>,
    /// Recent innovations per coordinate, newest first (moving_average).
    innovations: Vec<VecDeque<f64>>,
    /// Most recent base samples, newest first.
    history: VecDeque<Vec<f64>>,
    ma_coef: Vec<f64>,
}

pub fn make_stream(spec: &StreamSpec, seed: u64) -> Result<StreamState> {
    StreamState::from_rng(spec, ChaCha8Rng::seed_from_u64(seed))
}

impl StreamState {
    pub fn from_rng(spec: &StreamSpec, rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let m = spec.dim_data;
        let ma_coef = (0..=spec.order)
            .map(|k| spec.correlation.powi(k as i32))
            .collect();
        let mut state = Self {
            spec: spec.clone(),
            rng,
            level: vec![0.0; m],
            innovations: vec![VecDeque::new(); m],
            history: VecDeque::with_capacity(spec.window),
            ma_coef,
        };
        match spec.family {
            StreamFamily::IidUniform => {}
            StreamFamily::Ar1Bounded => {
                for i in 0..m {
                    state.level[i] = state.innovation();
                }
                for _ in 0..AR1_BURN_IN {
                    state.advance_base();
                }
            }
            StreamFamily::MovingAverage => {
                for i in 0..m {
                    for _ in 0..spec.order {
                        let e = state.innovation();
                        state.innovations[i].push_back(e);
                    }
                }
            }
        }
        for _ in 1..spec.window {
            let z = state.advance_base();
            state.history.push_front(z);
        }
        Ok(state)
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    #[inline]
    fn innovation(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        self.spec.innovation_bound * (2.0 * u - 1.0)
    }

    fn advance_base(&mut self) -> Vec<f64> {
        let m = self.spec.dim_data;
        let mut z = vec![0.0; m];
        match self.spec.family {
            StreamFamily::IidUniform => {
                for v in z.iter_mut() {
                    *v = self.innovation();
                }
            }
            StreamFamily::Ar1Bounded => {
                for i in 0..m {
                    let e = self.innovation();
                    self.level[i] = self.spec.correlation * self.level[i] + e;
                    z[i] = self.level[i];
                }
            }
            StreamFamily::MovingAverage => {
                for i in 0..m {
                    let e = self.innovation();
                    let buf = &mut self.innovations[i];
                    buf.push_front(e);
                    buf.truncate(self.spec.order + 1);
                    z[i] = buf.iter().zip(&self.ma_coef).map(|(e, c)| e * c).sum();
                    buf.truncate(self.spec.order);
                }
            }
        }
        z
    }

    /// Draw the next sample into `out` (length `emitted_dim`).
    pub fn next_into(&mut self, out: &mut [f64]) {
        let m = self.spec.dim_data;
        debug_assert_eq!(out.len(), self.spec.emitted_dim());
        let z = self.advance_base();
        out[..m].copy_from_slice(&z);
        for (k, past) in self.history.iter().enumerate() {
            out[(k + 1) * m..(k + 2) * m].copy_from_slice(past);
        }
        if self.spec.window > 1 {
            self.history.push_front(z);
            self.history.truncate(self.spec.window - 1);
        }
    }

    pub fn next_sample(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.emitted_dim()];
        self.next_into(&mut out);
        out
    }
}

/// The constant of the maximal inequality, `sqrt(r-1) / (2^{1/2} - 2^{1/r})`.
pub fn maximal_inequality_constant(r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 2.0 + 1e-6) {
        return Err(invalid(format!("maximal inequality needs r > 2, got {r}")));
    }
    Ok((r - 1.0).sqrt() / (std::f64::consts::SQRT_2 - 2f64.powf(1.0 / r)))
}

/// Outcome of the empirical maximal-inequality experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaximalCheck {
    pub horizon: usize,
    pub empirical: f64,
    pub bound: f64,
}

impl MaximalCheck {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// Monte Carlo estimate of `E^{1/r}[sup_{s<=T} |int_0^s W_t dt|^r]` for the
/// piecewise-constant interpolation `W_t = X_{floor t}` of the first
/// coordinate, compared with `C'(r) sqrt(T) (M_r + Gamma_r)`.
pub fn maximal_inequality_check(
    spec: &StreamSpec,
    horizon: usize,
    r: f64,
    replications: usize,
    seed: u64,
) -> Result<MaximalCheck> {
    let c = maximal_inequality_constant(r)?;
    let mut scalar = spec.clone();
    scalar.dim_data = 1;
    scalar.window = 1;
    scalar.validate()?;
    let mix = scalar.analytic_mixing_bounds();
    let mut acc = 0.0;
    for rep in 0..replications {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let mut state = StreamState::from_rng(&scalar, rng)?;
        let mut x = [0.0];
        let mut s = 0.0f64;
        let mut sup = 0.0f64;
        // The running integral is linear between integer times, so its
        // supremum is attained at one of them.
        for _ in 0..horizon {
            state.next_into(&mut x);
            s += x[0];
            sup = sup.max(s.abs());
        }
        acc += sup.powf(r);
    }
    let empirical = (acc / replications as f64).powf(1.0 / r);
    let bound = c * (horizon as f64).sqrt() * (mix.m3 + mix.g3);
    Ok(MaximalCheck {
        horizon,
        empirical,
        bound,
    })
}
