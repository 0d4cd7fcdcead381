//! Contraction constants of the Langevin diffusion in the `w_{1,2}`
//! semimetric, evaluated at `p = 2`.
//!
//! The exponentials involved overflow `f64` at modest parameters, so every
//! quantity built from them is carried as a logarithm until the end.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potentials::ProblemConstants;
use crate::quadrature::log_integral_exp;
use crate::theory::drift::drift_constants;

pub const QUADRATURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionConstants {
    pub p: u32,
    pub c6: f64,
    pub c7: f64,
    pub btilde: f64,
    pub bbar: f64,
    pub ln_phibar: f64,
    pub phibar: f64,
    /// Log of the integral of `exp((s sqrt(K1)/2 + 2/sqrt(K1))^2)` over `[0, btilde]`.
    pub ln_integral: f64,
    pub ln_epsilon: f64,
    pub epsilon: f64,
    pub r2_upper: f64,
    pub r2_lower: f64,
    pub c8: f64,
    pub ln_c10: f64,
    pub c10: f64,
    pub c11: f64,
    pub c9: f64,
}

/// Exponent `(s sqrt(K1)/2 + 2/sqrt(K1))^2` of the integrand.
pub fn exponent(k1: f64, s: f64) -> f64 {
    let t = s * k1.sqrt() / 2.0 + 2.0 / k1.sqrt();
    t * t
}

pub fn contraction_constants(k: &ProblemConstants) -> Result<ContractionConstants> {
    contraction_constants_p(k, 2)
}

pub fn contraction_constants_p(k: &ProblemConstants, p: u32) -> Result<ContractionConstants> {
    if p != 2 {
        return Err(invalid(format!(
            "contraction constants are only defined for p = 2 (the stated and proved forms of b̃, b̄ differ otherwise), got {p}"
        )));
    }
    let k1 = k.lipschitz_theta;
    let dc = drift_constants(k, p)?;
    let (c6, c7) = (dc.c6, dc.c7);
    let btilde = (2.0 * c7 / c6 - 1.0).sqrt();
    let bbar = (4.0 * c7 * (1.0 + c6) / c6 - 1.0).sqrt();
    let pi = std::f64::consts::PI;

    let ln_phibar = -(0.5 * (4.0 * pi / k1).ln() + bbar.ln() + exponent(k1, bbar));
    let phibar = ln_phibar.exp();

    let ln_integral = log_integral_exp(|s| exponent(k1, s), 0.0, btilde, btilde, QUADRATURE_REL_TOL)?;
    let ln_epsilon = (-((8.0 * c7).ln() + 0.5 * (pi / k1).ln() + ln_integral)).min(0.0);
    let epsilon = ln_epsilon.exp();

    let r2_upper = 2.0 * bbar;
    let r2_lower = (bbar * bbar - 1.0).sqrt();
    let c8 = phibar.min(c6).min(4.0 * c7 * epsilon * c6) / 2.0;
    let pf = p as f64;
    let ln_c10 = (epsilon / 2.0).ln() - k1 * r2_upper * r2_upper / 4.0 - pf * r2_upper + r2_lower.ln().min(0.0);
    let c10 = ln_c10.exp();
    let c11 = 1.0 + r2_upper;
    let c9 = (c11.ln() - ln_c10).exp();
    for (name, v) in [("C8", c8), ("C9", c9), ("phibar", phibar), ("epsilon", epsilon)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonFinite(format!("{name} = {v}")));
        }
    }
    Ok(ContractionConstants {
        p,
        c6,
        c7,
        btilde,
        bbar,
        ln_phibar,
        phibar,
        ln_integral,
        ln_epsilon,
        epsilon,
        r2_upper,
        r2_lower,
        c8,
        ln_c10,
        c10,
        c11,
        c9,
    })
}
