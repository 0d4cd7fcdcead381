//! Moment bounds for the SGLD iterates under worst-case bounded data.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potentials::ProblemConstants;
use crate::sgld::lambda_max;
use crate::streams::StreamSpec;
use crate::theory::drift::mbar;
use crate::theory::lyapunov::vp_scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentConstants {
    pub p: u32,
    pub lambda_max: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub mtilde: f64,
    pub m_pd: f64,
    pub mhat_pd: f64,
    pub c12: f64,
}

pub fn moment_constants(k: &ProblemConstants, p: u32) -> Result<MomentConstants> {
    if p < 1 {
        return Err(invalid("moment constants need p >= 1"));
    }
    let (a, b, beta) = (k.dissip_a, k.dissip_b, k.beta);
    let d = k.dim_theta as f64;
    let lmax = lambda_max(k);
    let h = k.grad_at_origin;
    let c0 = 8.0 * k.lipschitz_data * k.lipschitz_data * lmax;
    let c2 = 2.0 * b + 8.0 * lmax * h * h;
    let c1 = (c2 + 2.0 * d / beta) / a;
    let pf = p as f64;
    let mtilde = 2f64.powi(p as i32) * (pf * (2.0 * pf - 1.0) / (a * beta)).sqrt();
    let lead = (2.0 * lmax + 4.0 / a).powf(pf - 1.0) * (1.0 / a + d * mtilde * mtilde);
    let m_pd = lead * c0.powf(pf);
    // M (c2/c0)^p written without the ratio so that c0 = 0 stays finite.
    let mhat_pd = lead * c2.powf(pf)
        + mtilde * mtilde
            * (lmax + 2.0 / a).powf(pf - 1.0)
            * (d + (1.0 / beta).powf(pf - 1.0) * (2.0 * d * pf * (2.0 * pf - 1.0)).powf(pf));
    let c12 = 9.0 * (1.0 + (3.0 * a * pf).sqrt() / 2.0) * vp_scalar(pf, mbar(k, 2 * p));
    Ok(MomentConstants {
        p,
        lambda_max: lmax,
        c0,
        c1,
        c2,
        mtilde,
        m_pd,
        mhat_pd,
        c12,
    })
}

fn check_step(k: &ProblemConstants, lambda: f64) -> Result<()> {
    let lmax = lambda_max(k);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {lambda}")));
    }
    if lambda > lmax {
        return Err(Error::StepTooLarge {
            step: lambda,
            max: lmax,
        });
    }
    Ok(())
}

/// Bound on `E|theta_{n+1}|^2` with every `|x_j|` replaced by the stream's
/// support radius.
pub fn moment_bound_rhs_second(
    k: &ProblemConstants,
    stream: &StreamSpec,
    lambda: f64,
    n: u64,
    e_theta0_sq: f64,
) -> Result<f64> {
    check_step(k, lambda)?;
    let mc = moment_constants(k, 1)?;
    let a = k.dissip_a;
    let q = 1.0 - a * lambda;
    let decay = q.powf(n as f64 + 1.0);
    let r2 = stream.support_radius().powi(2);
    Ok(decay * e_theta0_sq + mc.c0 * r2 * (1.0 - decay) / a + mc.c1)
}

/// Bound on `E|Y_t|^{2p}` at continuous time `t`, with `t in (n, n+1]`, for
/// worst-case data. At integer `t = N` this bounds `E|theta_N|^{2p}`.
pub fn moment_bound_rhs_2p(
    k: &ProblemConstants,
    stream: &StreamSpec,
    lambda: f64,
    t: f64,
    p: u32,
    e_theta0_2p: f64,
) -> Result<f64> {
    check_step(k, lambda)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(e_theta0_2p);
    }
    let mc = moment_constants(k, p)?;
    let a = k.dissip_a;
    let n = t.ceil() - 1.0;
    let s = t - n;
    let q = 1.0 - a * lambda;
    let partial = 1.0 - a * lambda * s;
    let x2p = stream.support_radius().powf(2.0 * p as f64);
    let geometric = (1.0 - q.powf(n)) / (a * lambda);
    Ok(partial * q.powf(n) * e_theta0_2p
        + lambda * a * mc.m_pd * (x2p + partial * geometric * x2p)
        + mc.mhat_pd)
}
