//! The Lyapunov functions `V_p(theta) = (1 + |theta|^2)^{p/2}`.

use crate::vector::norm_sq;

/// `v_p(u) = (1 + u^2)^{p/2}`.
#[inline]
pub fn vp_scalar(p: f64, u: f64) -> f64 {
    (1.0 + u * u).powf(0.5 * p)
}

pub fn v(p: f64, theta: &[f64]) -> f64 {
    (1.0 + norm_sq(theta)).powf(0.5 * p)
}

pub fn grad_v(p: f64, theta: &[f64], out: &mut [f64]) {
    let s = p * (1.0 + norm_sq(theta)).powf(0.5 * p - 1.0);
    for (o, t) in out.iter_mut().zip(theta) {
        *o = s * t;
    }
}

pub fn laplacian_v(p: f64, theta: &[f64]) -> f64 {
    let r2 = norm_sq(theta);
    let d = theta.len() as f64;
    let w = 1.0 + r2;
    p * d * w.powf(0.5 * p - 1.0) + p * (p - 2.0) * r2 * w.powf(0.5 * p - 2.0)
}
