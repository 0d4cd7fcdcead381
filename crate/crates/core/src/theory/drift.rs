//! Drift constants of the Lyapunov inequality
//! `beta^{-1} Delta V_p - <H, grad V_p> <= -C6 V_p + C7`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::potentials::ProblemConstants;
use crate::theory::lyapunov::vp_scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftConstants {
    pub p: u32,
    pub mbar: f64,
    pub c6: f64,
    pub c7: f64,
}

/// `M̄(p) = sqrt(1/3 + 4b/(3a) + 4d/(3 a beta) + 4(p-2)/(3 a beta))`.
pub fn mbar(k: &ProblemConstants, p: u32) -> f64 {
    let (a, b, beta) = (k.dissip_a, k.dissip_b, k.beta);
    let d = k.dim_theta as f64;
    let p = p as f64;
    (1.0 / 3.0 + 4.0 * b / (3.0 * a) + 4.0 * d / (3.0 * a * beta) + 4.0 * (p - 2.0) / (3.0 * a * beta)).sqrt()
}

pub fn drift_constants(k: &ProblemConstants, p: u32) -> Result<DriftConstants> {
    if p < 2 {
        return Err(invalid(format!("drift constants need p >= 2, got {p}")));
    }
    let m = mbar(k, p);
    let pf = p as f64;
    let a = k.dissip_a;
    Ok(DriftConstants {
        p,
        mbar: m,
        c6: a * pf / 4.0,
        c7: 0.75 * a * pf * vp_scalar(pf, m),
    })
}
