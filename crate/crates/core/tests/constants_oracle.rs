use std::time::Instant;

use sgld_core::potentials::ProblemConstants;
use sgld_core::sgld::lambda_max;
use sgld_core::streams::{maximal_inequality_constant, StreamSpec};
use sgld_core::theory::bound::{theorem_bound, theorem_bound_with, StreamInputs};
use sgld_core::theory::contraction::contraction_constants;
use sgld_core::theory::drift::drift_constants;

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

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let pi = std::f64::consts::PI;
    (1..=n)
        .map(|i| {
            let mut x = (pi * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// ln of the integral of exp(g) over [lo, hi] for increasing g, by composite
/// Gauss-Legendre after factoring out exp(g(hi)).
fn log_integral_oracle(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let rule = gauss_legendre(40);
    let panels = 400;
    let h = (hi - lo) / panels as f64;
    let top = g(hi);
    let mut sum = 0.0;
    for j in 0..panels {
        let mid = lo + (j as f64 + 0.5) * h;
        for &(x, w) in &rule {
            sum += w * h / 2.0 * (g(mid + x * h / 2.0) - top).exp();
        }
    }
    top + sum.ln()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn unit_problem_regression() {
    let start = Instant::now();
    let k = unit();
    assert!((lambda_max(&k) - 0.5).abs() < 1e-12);
    let dc = drift_constants(&k, 2).unwrap();
    assert!((dc.c6 - 0.5).abs() < 1e-12);
    assert!((dc.c7 - 6.0).abs() < 1e-12);
    assert!((dc.mbar - 3f64.sqrt()).abs() < 1e-12);
    let cc = contraction_constants(&k).unwrap();
    assert!((cc.btilde - 23f64.sqrt()).abs() < 1e-12);
    assert!((cc.bbar - 71f64.sqrt()).abs() < 1e-12);
    let c3 = maximal_inequality_constant(3.0).unwrap();
    // sqrt(2) / (sqrt(2) - 2^{1/3}) = 9.16580 to five places.
    assert!((c3 * 1000.0).round() == 9166.0 && c3 <= 10.0, "{c3}");
    assert!((c3 - 9.165_795_148_826).abs() < 1e-10);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn phibar_and_epsilon_match_gauss_legendre() {
    let pi = std::f64::consts::PI;
    for k in [
        unit(),
        ProblemConstants {
            dissip_a: 0.5,
            dissip_b: 0.25,
            lipschitz_theta: 2.0,
            dim_theta: 2,
            ..unit()
        },
        ProblemConstants {
            dissip_a: 0.75,
            dissip_b: 0.0625,
            lipschitz_theta: 1.25,
            ..unit()
        },
    ] {
        let cc = contraction_constants(&k).unwrap();
        let k1 = k.lipschitz_theta;
        let g = |s: f64| (s * k1.sqrt() / 2.0 + 2.0 / k1.sqrt()).powi(2);
        let ln_phibar = -(0.5 * (4.0 * pi / k1).ln() + cc.bbar.ln() + g(cc.bbar));
        let ln_int = log_integral_oracle(g, 0.0, cc.btilde);
        let ln_eps = (-((8.0 * cc.c7).ln() + 0.5 * (pi / k1).ln() + ln_int)).min(0.0);
        assert!(rel(cc.phibar, ln_phibar.exp()) < 1e-6, "{} vs {}", cc.phibar, ln_phibar.exp());
        assert!(rel(cc.epsilon, ln_eps.exp()) < 1e-6, "{} vs {}", cc.epsilon, ln_eps.exp());
    }
}

#[test]
fn phibar_and_epsilon_match_arbitrary_precision_values() {
    // Unit problem, evaluated at 40 significant digits.
    let cc = contraction_constants(&unit()).unwrap();
    assert!(rel(cc.phibar, 5.754_402_180_675_397e-19) < 1e-6);
    assert!(rel(cc.epsilon, 2.001_636_879_478_078e-10) < 1e-6);
}

#[test]
fn final_constants_assemble_consistently() {
    let k = unit();
    let stream = StreamSpec::iid(1, 1.0).with_analytic_metadata();
    let r = theorem_bound(&k, &stream, 2.0, 1.0, &[(0.1, 10), (0.1, 1000)]).unwrap();
    let c = r.named_constants();
    let geo = 1.0 + 2.0 / c["C8"].min(k.dissip_a);
    assert!(rel(c["C15"], c["C14"] + 2.0 * c["C13"]) < 1e-12);
    assert!(rel(c["C17"], 2.0 * geo * c["Csharp"]) < 1e-12);
    assert!(rel(c["C2"], c["C17"] + c["C15"]) < 1e-12);
    assert!(rel(c["C1"], c["C0"].exp() * c["Cbar1"]) < 1e-12);
    for p in &r.curve {
        let expected = c["C1"] * (-c["C0"] * p.lambda * p.n as f64).exp() * 2.0 + c["C2"] * p.lambda.sqrt();
        assert!(rel(p.value, expected) < 1e-12);
    }
}

#[test]
fn bound_grows_with_mixing_inputs() {
    let k = unit();
    let base = StreamInputs {
        m3_sq: 1.0,
        g3_sq: 1.0,
        g2_0: 1.0,
        moment_bound_4: 1.0,
    };
    let lo = theorem_bound_with(&k, base, 2.0, 1.0, &[]).unwrap();
    for bump in [
        StreamInputs { m3_sq: 2.0, ..base },
        StreamInputs { g3_sq: 2.0, ..base },
        StreamInputs { g2_0: 2.0, ..base },
        StreamInputs {
            moment_bound_4: 2.0,
            ..base
        },
    ] {
        let hi = theorem_bound_with(&k, bump, 2.0, 1.0, &[]).unwrap();
        assert!(hi.c2 >= lo.c2 && hi.c1 >= lo.c1);
        assert!(hi.c2 > lo.c2 || hi.c1 > lo.c1);
    }
}
