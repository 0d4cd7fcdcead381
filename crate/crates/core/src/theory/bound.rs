//! Assembly of the certificate `C1 exp(-C0 lambda n) E[|theta_0|^4 + 1] + C2 sqrt(lambda)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potentials::ProblemConstants;
use crate::sgld::lambda_max;
use crate::streams::StreamSpec;
use crate::theory::contraction::{contraction_constants, ContractionConstants};
use crate::theory::drift::{drift_constants, mbar};
use crate::theory::moments::{moment_constants, MomentConstants};

/// Mixing metadata the certificate consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamInputs {
    pub m3_sq: f64,
    pub g3_sq: f64,
    pub g2_0: f64,
    pub moment_bound_4: f64,
}

impl StreamInputs {
    pub fn from_stream(stream: &StreamSpec) -> Result<Self> {
        let missing = |name: &str| invalid(format!("stream metadata `{name}` is missing"));
        Ok(Self {
            m3_sq: stream.mixing_m3_sq.ok_or_else(|| missing("mixing_m3_sq"))?,
            g3_sq: stream.mixing_g3_sq.ok_or_else(|| missing("mixing_g3_sq"))?,
            g2_0: stream.mixing_g2_0.ok_or_else(|| missing("mixing_g2_0"))?,
            moment_bound_4: stream.moment_bound_4.ok_or_else(|| missing("moment_bound_4"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub n: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lambda_max: f64,
    pub inputs: StreamInputs,
    pub pi_v2: f64,
    pub e_theta0_4: f64,
    pub mbar2: f64,
    pub mbar4: f64,
    pub moments1: MomentConstants,
    pub moments2: MomentConstants,
    pub contraction: ContractionConstants,
    pub c12_2: f64,
    pub c13: f64,
    pub c14: f64,
    pub c15: f64,
    pub csharp: f64,
    pub c17: f64,
    pub cbar1_data: f64,
    pub c19: f64,
    pub c0: f64,
    pub cbar1: f64,
    pub c1: f64,
    pub c2: f64,
    pub curve: Vec<CurvePoint>,
}

/// Build the full constant chain and evaluate the bound on `grid`.
pub fn theorem_bound(
    k: &ProblemConstants,
    stream: &StreamSpec,
    pi_v2: f64,
    e_theta0_4: f64,
    grid: &[(f64, u64)],
) -> Result<BoundReport> {
    theorem_bound_with(k, StreamInputs::from_stream(stream)?, pi_v2, e_theta0_4, grid)
}

pub fn theorem_bound_with(
    k: &ProblemConstants,
    inputs: StreamInputs,
    pi_v2: f64,
    e_theta0_4: f64,
    grid: &[(f64, u64)],
) -> Result<BoundReport> {
    k.validate()?;
    if !(pi_v2.is_finite() && pi_v2 >= 1.0) {
        return Err(invalid(format!("pi(V2) must be finite and at least 1, got {pi_v2}")));
    }
    let (a, beta) = (k.dissip_a, k.beta);
    let (k1, k2, hstar) = (k.lipschitz_theta, k.lipschitz_data, k.grad_at_origin);
    let lmax = lambda_max(k);
    let mbar2 = drift_constants(k, 2)?.mbar;
    let mbar4 = mbar(k, 4);
    let v2_m4 = 1.0 + mbar4 * mbar4;
    let v4_m4 = v2_m4 * v2_m4;
    let moments1 = moment_constants(k, 1)?;
    let moments2 = moment_constants(k, 2)?;
    let cc = contraction_constants(k)?;
    let (c8, c9) = (cc.c8, cc.c9);
    let one_minus_e_c8 = -(-c8).exp_m1();

    let c12_2 = moments2.c12;
    let c13 = 20.0
        * std::f64::consts::SQRT_2
        * k1.exp()
        * (k1 * 3f64.sqrt()
            + k1 * (1.0 + c12_2.sqrt())
            + k2 * inputs.m3_sq
            + k2 * inputs.g3_sq
            + hstar
            + 2.0 * lmax * k2 * inputs.g2_0);

    let m = c8.min(a / 4.0);
    let c14 = c9 * c13 * (1.0 + 2.0 / m) * m.exp() * (5.0 * v2_m4 + 4.0)
        + c9 * c13 * ((5.0 * v2_m4 + 1.0) / one_minus_e_c8 + (5.0 * v2_m4 + 2.0) * (1.0 + 2.0 / m));
    let c15 = c14 + 2.0 * c13;

    let csharp = (c9 + 1.0) * (lmax * beta * k1.powi(4) / (4.0 * a) + 12.0);
    let geo = 1.0 + 2.0 / c8.min(a);
    let c17 = 2.0 * geo * csharp;

    // Worst-case expectations of the data-dependent terms, with
    // A = 1 + sup E|X|^4 >= sup E|X|^2.
    let big_a = 1.0 + inputs.moment_bound_4;
    let (c0m, c1m) = (moments1.c0, moments1.c1);
    let cbar1_data = k1 * k1 * (1.0 + lmax * beta * hstar * hstar + lmax * beta * c1m * k1 * k1) / 4.0
        + beta * k1 * k1 * k2 * k2 / 4.0 * lmax * big_a
        + beta * k1.powi(4) * c0m / (4.0 * a) * lmax * big_a;
    let (m2d, mhat2d) = (moments2.m_pd, moments2.mhat_pd);
    let d_bar = 2.0 * m2d * big_a + 2.0 * mhat2d + 2.0;
    let d_bar_t = 2.0 + 2.0 * m2d * big_a * (a * lmax + 1.0) + 2.0 * mhat2d;
    let c_hat = cbar1_data + 3.0 + 6.0 * d_bar + 9.0 * v4_m4;
    let c_hat_t = cbar1_data + 3.0 + 3.0 * d_bar + 3.0 * d_bar_t + 9.0 * v4_m4;
    let c19 = c9 * c_hat / one_minus_e_c8 + c_hat_t + geo * csharp;

    let c0 = c8.min(a / 4.0) / 2.0;
    let cbar1 = 4.0 * lmax.sqrt() * (c19 + c15) + 6.0 * c9 + c9 * pi_v2;
    let c1 = c0.exp() * cbar1;
    let c2 = c17 + c15;

    let named = [
        ("C13", c13),
        ("C14", c14),
        ("C15", c15),
        ("Csharp", csharp),
        ("C17", c17),
        ("C19", c19),
        ("C0", c0),
        ("C1", c1),
        ("C2", c2),
    ];
    for (name, v) in named {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonFinite(format!("{name} = {v}")));
        }
    }
    let mut report = BoundReport {
        lambda_max: lmax,
        inputs,
        pi_v2,
        e_theta0_4,
        mbar2,
        mbar4,
        moments1,
        moments2,
        contraction: cc,
        c12_2,
        c13,
        c14,
        c15,
        csharp,
        c17,
        cbar1_data,
        c19,
        c0,
        cbar1,
        c1,
        c2,
        curve: Vec::with_capacity(grid.len()),
    };
    for &(lambda, n) in grid {
        if !(lambda > 0.0) {
            return Err(invalid(format!("step size must be positive, got {lambda}")));
        }
        if lambda > lmax {
            return Err(Error::StepTooLarge {
                step: lambda,
                max: lmax,
            });
        }
        let value = report.bound_at(lambda, n);
        report.curve.push(CurvePoint { lambda, n, value });
    }
    Ok(report)
}

impl BoundReport {
    /// `C1 exp(-C0 lambda n) (E|theta_0|^4 + 1) + C2 sqrt(lambda)`.
    pub fn bound_at(&self, lambda: f64, n: u64) -> f64 {
        self.c1 * (-self.c0 * lambda * n as f64).exp() * (self.e_theta0_4 + 1.0) + self.c2 * lambda.sqrt()
    }

    /// Limit of the bound as `n` grows.
    pub fn asymptote(&self, lambda: f64) -> f64 {
        self.c2 * lambda.sqrt()
    }

    /// Flat name-to-value map of every reported constant.
    pub fn named_constants(&self) -> BTreeMap<&'static str, f64> {
        let cc = &self.contraction;
        BTreeMap::from([
            ("lambda_max", self.lambda_max),
            ("Mbar2", self.mbar2),
            ("Mbar4", self.mbar4),
            ("C6", cc.c6),
            ("C7", cc.c7),
            ("c0", self.moments1.c0),
            ("c1", self.moments1.c1),
            ("c2", self.moments1.c2),
            ("Mtilde2", self.moments2.mtilde),
            ("M2d", self.moments2.m_pd),
            ("Mhat2d", self.moments2.mhat_pd),
            ("btilde", cc.btilde),
            ("bbar", cc.bbar),
            ("phibar", cc.phibar),
            ("epsilon", cc.epsilon),
            ("R2_upper", cc.r2_upper),
            ("R2_lower", cc.r2_lower),
            ("C8", cc.c8),
            ("C9", cc.c9),
            ("C10", cc.c10),
            ("C11", cc.c11),
            ("C12", self.c12_2),
            ("C13", self.c13),
            ("C14", self.c14),
            ("C15", self.c15),
            ("Csharp", self.csharp),
            ("C17", self.c17),
            ("C19", self.c19),
            ("C0", self.c0),
            ("Cbar1", self.cbar1),
            ("C1", self.c1),
            ("C2", self.c2),
            ("pi_v2", self.pi_v2),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ProblemConstants {
        ProblemConstants {
            dim_theta: 1,
            dim_data: 1,
            lipschitz_theta: 1.0,
            lipschitz_data: 1.0,
            grad_at_origin: 0.0,
            dissip_a: 1.0,
            dissip_b: 1.0,
            beta: 1.0,
        }
    }

    fn iid_inputs() -> StreamInputs {
        StreamInputs {
            m3_sq: 1.0,
            g3_sq: 1.0,
            g2_0: 1.0,
            moment_bound_4: 1.0,
        }
    }

    #[test]
    fn all_constants_finite_and_positive() {
        let r = theorem_bound_with(&unit(), iid_inputs(), 2.0, 0.0, &[(0.1, 10)]).unwrap();
        for (name, v) in r.named_constants() {
            assert!(v.is_finite() && v > 0.0, "{name} = {v}");
        }
    }

    #[test]
    fn curve_limits_and_monotonicity() {
        let r = theorem_bound_with(&unit(), iid_inputs(), 2.0, 3.0, &[]).unwrap();
        let lambda = 0.1;
        let mut prev = f64::INFINITY;
        for n in [0u64, 10, 100, 1000, 10_000] {
            let v = r.bound_at(lambda, n);
            assert!(v <= prev);
            prev = v;
        }
        assert!(r.bound_at(lambda, 0) > r.asymptote(lambda));
        // C0 is astronomically small, so the limit lies beyond any u64 horizon.
        let gap = r.bound_at(lambda, u64::MAX) - r.asymptote(lambda);
        assert!(gap > 0.0 && gap < r.bound_at(lambda, 0) - r.asymptote(lambda));
        assert!(r.bound_at(0.2, 5) > r.bound_at(0.1, 5));
    }

    #[test]
    fn mixing_inputs_increase_c13_and_c2() {
        let base = theorem_bound_with(&unit(), iid_inputs(), 2.0, 0.0, &[]).unwrap();
        let doubled = theorem_bound_with(
            &unit(),
            StreamInputs {
                g3_sq: 2.0,
                ..iid_inputs()
            },
            2.0,
            0.0,
            &[],
        )
        .unwrap();
        assert!(doubled.c13 > base.c13);
        assert!(doubled.c2 > base.c2);
    }

    #[test]
    fn rejects_large_step_and_missing_metadata() {
        assert!(matches!(
            theorem_bound_with(&unit(), iid_inputs(), 2.0, 0.0, &[(0.6, 1)]),
            Err(Error::StepTooLarge { .. })
        ));
        let bare = StreamSpec::iid(1, 1.0);
        assert!(theorem_bound(&unit(), &bare, 2.0, 0.0, &[]).is_err());
        let full = bare.with_analytic_metadata();
        assert!(theorem_bound(&unit(), &full, 2.0, 0.0, &[]).is_ok());
    }

    #[test]
    fn pure_function() {
        let a = theorem_bound_with(&unit(), iid_inputs(), 2.0, 1.0, &[(0.1, 5)]).unwrap();
        let b = theorem_bound_with(&unit(), iid_inputs(), 2.0, 1.0, &[(0.1, 5)]).unwrap();
        assert_eq!(a, b);
    }
}
