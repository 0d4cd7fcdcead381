use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{wp_1d_exact, DistanceResult, Method, SampleSet};
use crate::error::{invalid, Error, Result};
use crate::vector::{dot, mean_stderr, norm};

fn direction(seed: u64, k: u64, d: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    loop {
        let mut u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&u);
        if n > 1e-12 {
            u.iter_mut().for_each(|x| *x /= n);
            return u;
        }
    }
}

fn project(s: &SampleSet, u: &[f64]) -> Result<SampleSet> {
    let values: Vec<f64> = (0..s.len()).map(|i| dot(s.point(i), u)).collect();
    let p = SampleSet::new(1, values)?;
    match &s.weights {
        Some(w) => p.with_weights(w.clone()),
        None => Ok(p),
    }
}

/// Sliced W1: the mean over random unit directions of the exact W1 of the
/// projected samples, with its Monte Carlo standard error.
pub fn sliced_w1(a: &SampleSet, b: &SampleSet, num_projections: usize, seed: u64) -> Result<DistanceResult> {
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.dim < 2 {
        return Err(invalid("sliced W1 needs dimension at least 2; use the exact 1-D distance"));
    }
    if num_projections == 0 {
        return Err(invalid("num_projections must be positive"));
    }
    let values: Vec<f64> = (0..num_projections as u64)
        .into_par_iter()
        .map(|k| {
            let u = direction(seed, k, a.dim);
            Ok(wp_1d_exact(&project(a, &u)?, &project(b, &u)?, 1)?.value)
        })
        .collect::<Result<_>>()?;
    let (value, stderr) = mean_stderr(&values);
    Ok(DistanceResult {
        value,
        method: Method::Sliced,
        stderr: Some(stderr),
    })
}
