use std::cmp::Ordering;

use super::{DistanceResult, Method, SampleSet};
use crate::error::{invalid, Error, Result};

fn sorted_atoms(s: &SampleSet) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = (0..s.len()).map(|i| (s.points[i], s.weight(i))).collect();
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    atoms
}

fn sorted_values(s: &SampleSet) -> Vec<f64> {
    let mut v = s.points.clone();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

fn cost(x: f64, y: f64, p: u32) -> f64 {
    let d = (x - y).abs();
    if p == 1 {
        d
    } else {
        d * d
    }
}

/// Exact `W_p` between one-dimensional measures through the monotone coupling.
pub fn wp_1d_exact(a: &SampleSet, b: &SampleSet, p: u32) -> Result<DistanceResult> {
    if a.dim != 1 || b.dim != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: a.dim.max(b.dim),
        });
    }
    if p != 1 && p != 2 {
        return Err(invalid(format!("p must be 1 or 2, got {p}")));
    }
    let total = if a.is_uniform() && b.is_uniform() {
        uniform_sweep(&sorted_values(a), &sorted_values(b), p)
    } else {
        weighted_sweep(&sorted_atoms(a), &sorted_atoms(b), p)
    };
    let value = if p == 1 { total } else { total.sqrt() };
    Ok(DistanceResult {
        value,
        method: Method::Exact1d,
        stderr: None,
    })
}

/// Uniform weights, sizes `n` and `m`: every atom of `a` carries `m` units
/// of mass and every atom of `b` carries `n`, so the sweep is exact in
/// integer arithmetic.
fn uniform_sweep(a: &[f64], b: &[f64], p: u32) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return a.iter().zip(b).map(|(x, y)| cost(*x, *y, p)).sum::<f64>() / n as f64;
    }
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (m as u64, n as u64);
    let mut acc = 0.0;
    while i < n && j < m {
        let t = ra.min(rb);
        acc += t as f64 * cost(a[i], b[j], p);
        ra -= t;
        rb -= t;
        if ra == 0 {
            i += 1;
            ra = m as u64;
        }
        if rb == 0 {
            j += 1;
            rb = n as u64;
        }
    }
    acc / (n as f64 * m as f64)
}

/// Integrate `|F^{-1}(u) - G^{-1}(u)|^p` over the merged cumulative-weight
/// breakpoints.
fn weighted_sweep(a: &[(f64, f64)], b: &[(f64, f64)], p: u32) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ca, mut cb) = (a[0].1, b[0].1);
    let mut prev = 0.0;
    let mut acc = 0.0;
    loop {
        let next = ca.min(cb);
        acc += (next - prev).max(0.0) * cost(a[i].0, b[j].0, p);
        prev = prev.max(next);
        if ca <= cb {
            i += 1;
            if i == a.len() {
                break;
            }
            ca += a[i].1;
        } else {
            j += 1;
            if j == b.len() {
                break;
            }
            cb += b[j].1;
        }
    }
    acc
}

/// `(1/n) sum_i |x_(i) - Q((i - 1/2)/n)|`: W1 between the empirical measure
/// of `samples` and the equal-mass quantile grid of a target.
pub fn w1_against_quantiles<Q: Fn(f64) -> f64>(samples: &[f64], quantile: Q) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| (x - quantile((i as f64 + 0.5) / n)).abs())
        .sum::<f64>()
        / n
}
