//! Distances between finite empirical measures.

mod assignment;
mod exact1d;
mod kl;
mod sliced;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub use assignment::{hungarian, w12_cost, w12_semimetric_discrete, w1_matching_exact, MAX_ASSIGNMENT};
pub use exact1d::{w1_against_quantiles, wp_1d_exact};
pub use kl::kl_discrete;
pub use sliced::sliced_w1;

/// A finite measure: `len` points of dimension `dim`, stored row-major,
/// with uniform weights unless `weights` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("sample dimension must be positive"));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                points.len()
            )));
        }
        if !points.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sample point".into()));
        }
        Ok(Self {
            dim,
            points,
            weights: None,
        })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Self::new(dim, points)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::SizeMismatch(weights.len(), self.len()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.len() as f64,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    /// Weighted mean of `f` over the points.
    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        (0..self.len()).map(|i| self.weight(i) * f(self.point(i))).sum()
    }

    /// Coordinate `j` of every point.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.points[i * self.dim + j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact1d,
    Matching,
    Sliced,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact1d => "exact_1d",
            Method::Matching => "matching",
            Method::Sliced => "sliced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceResult {
    pub value: f64,
    pub method: Method,
    pub stderr: Option<f64>,
}
