use super::{DistanceResult, Method, SampleSet};
use crate::error::{Error, Result};
use crate::theory::lyapunov::v;
use crate::vector::dist;

pub const MAX_ASSIGNMENT: usize = 1024;

/// Minimum-cost perfect matching on a dense row-major `n x n` cost matrix
/// (shortest augmenting paths with potentials, O(n^3)). Returns the total
/// cost and `assign[row] = column`.
pub fn hungarian(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return (0.0, Vec::new());
    }
    let inf = f64::INFINITY;
    // 1-based internally; column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    (total, assign)
}

fn check_pair(a: &SampleSet, b: &SampleSet) -> Result<usize> {
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    if !(a.is_uniform() && b.is_uniform()) {
        return Err(crate::error::invalid("matching requires uniform weights"));
    }
    let n = a.len();
    if n > MAX_ASSIGNMENT {
        return Err(Error::TooLarge {
            size: n,
            cap: MAX_ASSIGNMENT,
        });
    }
    Ok(n)
}

fn matching<F: Fn(&[f64], &[f64]) -> f64>(a: &SampleSet, b: &SampleSet, c: F) -> Result<DistanceResult> {
    let n = check_pair(a, b)?;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = c(a.point(i), b.point(j));
        }
    }
    let (total, _) = hungarian(&cost, n);
    Ok(DistanceResult {
        value: (total / n as f64).max(0.0),
        method: Method::Matching,
        stderr: None,
    })
}

/// Exact W1 between equal-size uniform samples in any dimension.
pub fn w1_matching_exact(a: &SampleSet, b: &SampleSet) -> Result<DistanceResult> {
    matching(a, b, dist)
}

/// The semimetric cost `(1 ∧ |x - y|)(1 + V_2(x) + V_2(y))`.
pub fn w12_cost(x: &[f64], y: &[f64]) -> f64 {
    dist(x, y).min(1.0) * (1.0 + v(2.0, x) + v(2.0, y))
}

/// Exact `w_{1,2}` between equal-size uniform samples.
pub fn w12_semimetric_discrete(a: &SampleSet, b: &SampleSet) -> Result<DistanceResult> {
    matching(a, b, w12_cost)
}
