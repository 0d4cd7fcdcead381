//! Adaptive Simpson quadrature, plus a log-space variant for integrands of
//! the form `exp(g(s))` whose exponent is far beyond the `f64` range.

use crate::error::{Error, Result};

/// Maximum number of subintervals the adaptive scheme may create.
pub const MAX_INTERVALS: usize = 1 << 20;
const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[lo, hi]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Quadrature("infinite integration bounds".into()));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Seed the absolute tolerance from a coarse composite estimate so that
    // sharply peaked integrands do not stop on a lucky first panel.
    let coarse = composite_simpson(&f, a, b, 64);
    let scale = coarse.abs().max(whole.abs());
    let tol = if scale > 0.0 { rel_tol * scale } else { rel_tol };
    let mut intervals = 1usize;
    let v = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut intervals)?;
    if !v.is_finite() {
        return Err(Error::Quadrature("integral is not finite".into()));
    }
    Ok(sign * v)
}

fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / (2 * panels) as f64;
    let mut s = f(a) + f(b);
    for i in 1..(2 * panels) {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    intervals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            return Err(Error::Quadrature(format!(
                "recursion depth exhausted on [{a}, {b}]"
            )));
        }
        return Ok(left + right + delta / 15.0);
    }
    *intervals += 1;
    if *intervals > MAX_INTERVALS {
        return Err(Error::Quadrature(format!(
            "more than {MAX_INTERVALS} subintervals required"
        )));
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, intervals)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, intervals)?;
    Ok(l + r)
}

/// `ln ∫_lo^hi exp(g(s)) ds` for an exponent `g` that attains its maximum
/// over the interval at `argmax`. The integrand is rescaled by
/// `exp(-g(argmax))` so it never exceeds one.
pub fn log_integral_exp<G: Fn(f64) -> f64>(
    g: G,
    lo: f64,
    hi: f64,
    argmax: f64,
    rel_tol: f64,
) -> Result<f64> {
    if hi <= lo {
        return Err(Error::Quadrature(format!("empty interval [{lo}, {hi}]")));
    }
    let gmax = g(argmax);
    if !gmax.is_finite() {
        return Err(Error::Quadrature("exponent is not finite".into()));
    }
    let scaled = adaptive_simpson(|s| (g(s) - gmax).exp(), lo, hi, rel_tol)?;
    if scaled <= 0.0 {
        return Err(Error::Quadrature("scaled integral vanished".into()));
    }
    Ok(gmax + scaled.ln())
}
