use crate::error::{invalid, Error, Result};

/// `sum_i P_i ln(P_i / Q_i)` with `0 ln 0 = 0`. A positive `P_i` against a
/// zero `Q_i` is reported as [`Error::NotAbsolutelyContinuous`].
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch(p.len(), q.len()));
    }
    for (name, v) in [("P", p), ("Q", q)] {
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid(format!("{name} has a negative or non-finite entry")));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("{name} sums to {s}, not 1")));
        }
    }
    let mut acc = 0.0;
    for (i, (pi, qi)) in p.iter().zip(q).enumerate() {
        if *pi == 0.0 {
            continue;
        }
        if *qi == 0.0 {
            return Err(Error::NotAbsolutelyContinuous { index: i });
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(acc.max(0.0))
}
