//! Experiment drivers: rate and burn-in studies, moment checks, constants
//! reports and the numerical drift-inequality probe.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{BurninStudyBlock, ConstantsBlock, MomentCheckBlock, RateStudyBlock, Resolved};
use crate::error::{Error, Result};
use crate::output::{Cell, Table};
use crate::potentials::{support_point, uniform_ball, ProblemSpec};
use crate::reference::{pi_moment_v2, ReferenceTarget};
use crate::sgld::{lambda_max, run_ensemble, run_ensemble_checkpoints};
use crate::streams::StreamSpec;
use crate::theory::drift::{drift_constants, DriftConstants};
use crate::theory::lyapunov::{grad_v, laplacian_v, v};
use crate::theory::{moment_bound_rhs_2p, moment_bound_rhs_second, theorem_bound, BoundReport};
use crate::vector::{dot, mean_stderr, norm_sq};
use crate::wasserstein::w1_against_quantiles;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub table: Table,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, f64>,
}

impl StudyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// W1 between 1-D samples and a quantile function, with a batch-means
/// standard error over consecutive chains.
pub fn w1_with_stderr(values: &[f64], quantile: &dyn Fn(f64) -> f64, batches: usize) -> (f64, f64) {
    let full = w1_against_quantiles(values, quantile);
    let per = values.len() / batches.max(1);
    if batches < 2 || per == 0 {
        return (full, f64::NAN);
    }
    let batch: Vec<f64> = values
        .chunks(per)
        .filter(|c| c.len() == per)
        .map(|c| w1_against_quantiles(c, quantile))
        .collect();
    (full, mean_stderr(&batch).1)
}

/// Ordinary least squares slope of `y` on `x` with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

fn bound_report(r: &Resolved, reference: &ReferenceTarget, grid: &[(f64, u64)]) -> Result<BoundReport> {
    let pi_v2 = pi_moment_v2(reference)?.value;
    theorem_bound(&r.problem.constants, &r.stream, pi_v2, r.init().fourth_moment(), grid)
}

fn quantile_of(reference: &ReferenceTarget) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>> {
    reference
        .quantile_1d()
        .map_err(|e| Error::Config(format!("reference unavailable: {e}")))
}

pub fn run_rate_study(r: &Resolved, block: &RateStudyBlock) -> Result<StudyOutcome> {
    let reference = r.reference()?;
    let quantile = quantile_of(&reference)?;
    let horizons: Vec<u64> = block
        .lambdas
        .iter()
        .map(|l| (block.diffusion_time / l).ceil() as u64)
        .collect();
    let grid: Vec<(f64, u64)> = block.lambdas.iter().copied().zip(horizons.iter().copied()).collect();
    let bound = bound_report(r, &reference, &grid)?;

    let mut table = Table::new(&["lambda", "n", "w1", "stderr", "bound"]);
    let mut checks = Vec::new();
    let mut measured = Vec::new();
    for (&lambda, &n) in block.lambdas.iter().zip(&horizons) {
        let cfg = r.sgld_config(lambda, n, block.ensemble);
        match run_ensemble(&r.problem, &r.stream, &cfg) {
            Ok(samples) => {
                let (w1, se) = w1_with_stderr(&samples.points, &*quantile, block.batches);
                let b = bound.bound_at(lambda, n);
                table.push(vec![lambda.into(), n.into(), w1.into(), se.into(), b.into()]);
                measured.push((lambda, w1, se, b));
            }
            Err(e) => {
                table.push_failed(vec![lambda.into(), n.into()]);
                checks.push(Check::new(format!("run lambda={lambda}"), false, e.to_string()));
            }
        }
    }

    let mut monotone = measured.len() == block.lambdas.len();
    let mut detail = String::new();
    for w in measured.windows(2) {
        let (l0, w0, s0, _) = w[0];
        let (l1, w1, s1, _) = w[1];
        let tol = block.monotone_sigmas * (s0 * s0 + s1 * s1).sqrt();
        if !(w1 < w0 + tol) {
            monotone = false;
            detail = format!("W1({l1}) = {w1} vs W1({l0}) = {w0} + {tol}");
        }
    }
    if monotone {
        detail = format!("{} step sizes", measured.len());
    }
    checks.push(Check::new("w1_decreasing", monotone, detail));

    let mut summary = BTreeMap::new();
    if measured.len() >= 2 {
        let x: Vec<f64> = measured.iter().map(|m| m.0.ln()).collect();
        let y: Vec<f64> = measured.iter().map(|m| m.1.ln()).collect();
        let (slope, se) = ols_slope(&x, &y);
        summary.insert("slope".to_string(), slope);
        summary.insert("slope_stderr".to_string(), se);
        checks.push(Check::new(
            "loglog_slope",
            slope >= block.min_slope,
            format!("slope {slope:.4} +- {se:.4}, threshold {}", block.min_slope),
        ));
    } else {
        checks.push(Check::new("loglog_slope", false, "fewer than two measured step sizes"));
    }
    checks.push(domination_check(measured.iter().map(|m| (m.1, m.3))));
    summary.insert("C0".into(), bound.c0);
    summary.insert("C1".into(), bound.c1);
    summary.insert("C2".into(), bound.c2);
    Ok(StudyOutcome { table, checks, summary })
}

fn domination_check(pairs: impl Iterator<Item = (f64, f64)>) -> Check {
    let mut worst: Option<(f64, f64)> = None;
    let mut count = 0;
    let mut ok = true;
    for (w1, b) in pairs {
        count += 1;
        if !(b >= w1) {
            ok = false;
            worst = Some((w1, b));
        }
    }
    let detail = match worst {
        Some((w1, b)) => format!("W1 {w1} exceeds bound {b}"),
        None => format!("{count} measurements dominated"),
    };
    Check::new("bound_dominates", ok && count > 0, detail)
}

pub fn run_burnin_study(r: &Resolved, block: &BurninStudyBlock) -> Result<StudyOutcome> {
    let reference = r.reference()?;
    let quantile = quantile_of(&reference)?;
    let lambda = block.step_size;
    let grid: Vec<(f64, u64)> = block.checkpoints.iter().map(|&n| (lambda, n)).collect();
    let bound = bound_report(r, &reference, &grid)?;
    let cfg = r.sgld_config(lambda, *block.checkpoints.last().expect("validated"), block.ensemble);

    let mut table = Table::new(&["n", "w1", "stderr", "bound"]);
    let mut checks = Vec::new();
    let mut measured = Vec::new();
    match run_ensemble_checkpoints(&r.problem, &r.stream, &cfg, &block.checkpoints) {
        Ok(sets) => {
            for (&n, s) in block.checkpoints.iter().zip(&sets) {
                let (w1, se) = w1_with_stderr(&s.points, &*quantile, block.batches);
                let b = bound.bound_at(lambda, n);
                table.push(vec![n.into(), w1.into(), se.into(), b.into()]);
                measured.push((n, w1, se, b));
            }
        }
        Err(e) => {
            for &n in &block.checkpoints {
                table.push_failed(vec![n.into()]);
            }
            checks.push(Check::new("run", false, e.to_string()));
        }
    }

    let mut summary = BTreeMap::new();
    if let (Some(first), Some(last)) = (measured.first(), measured.last()) {
        let ratio = last.1 / first.1;
        summary.insert("ratio_last_first".to_string(), ratio);
        if let Some(max_ratio) = block.max_ratio {
            checks.push(Check::new(
                "decay_ratio",
                ratio < max_ratio,
                format!("W1(n={}) / W1(n={}) = {ratio:.4}, threshold {max_ratio}", last.0, first.0),
            ));
        }
        if measured.len() >= 2 {
            let prev = measured[measured.len() - 2];
            let tol = block.plateau_sigmas * (prev.2 * prev.2 + last.2 * last.2).sqrt();
            checks.push(Check::new(
                "plateau",
                (last.1 - prev.1).abs() < tol,
                format!("|W1({}) - W1({})| = {:.3e}, tolerance {tol:.3e}", last.0, prev.0, (last.1 - prev.1).abs()),
            ));
        }
        if block.expect_flat {
            let worst = measured
                .iter()
                .map(|m| (m.1 - first.1).abs() / (block.plateau_sigmas * (m.2 * m.2 + first.2 * first.2).sqrt()))
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "flat",
                worst < 1.0,
                format!("largest deviation is {worst:.3} of the tolerance"),
            ));
        }
    }
    checks.push(domination_check(measured.iter().map(|m| (m.1, m.3))));
    Ok(StudyOutcome { table, checks, summary })
}

pub fn run_moment_check(r: &Resolved, block: &MomentCheckBlock) -> Result<StudyOutcome> {
    let reference = r.reference()?;
    let quantile = if r.problem.d() == 1 { reference.quantile_1d().ok() } else { None };
    let grid: Vec<(f64, u64)> = block
        .lambdas
        .iter()
        .flat_map(|&l| block.checkpoints.iter().map(move |&n| (l, n)))
        .collect();
    let bound = if quantile.is_some() {
        Some(bound_report(r, &reference, &grid)?)
    } else {
        None
    };
    let init = r.init();
    let k = &r.problem.constants;

    let mut table = Table::new(&["lambda", "n", "p", "mc_moment", "stderr", "rhs", "slack", "w1", "bound"]);
    let mut checks = Vec::new();
    let mut violations = Vec::new();
    let mut w1_pairs = Vec::new();
    let mut rows = 0usize;
    for &lambda in &block.lambdas {
        let cfg = r.sgld_config(lambda, *block.checkpoints.last().expect("validated"), block.ensemble);
        let sets = match run_ensemble_checkpoints(&r.problem, &r.stream, &cfg, &block.checkpoints) {
            Ok(s) => s,
            Err(e) => {
                for &n in &block.checkpoints {
                    for &p in &block.ps {
                        table.push_failed(vec![lambda.into(), n.into(), (p as u64).into()]);
                    }
                }
                checks.push(Check::new(format!("run lambda={lambda}"), false, e.to_string()));
                continue;
            }
        };
        for (&n, s) in block.checkpoints.iter().zip(&sets) {
            let (w1, b) = match &quantile {
                Some(q) => {
                    let w1 = w1_against_quantiles(&s.points, &**q);
                    let b = bound.as_ref().expect("bound with quantiles").bound_at(lambda, n);
                    w1_pairs.push((w1, b));
                    (Cell::Num(w1), Cell::Num(b))
                }
                None => (Cell::Text(String::new()), Cell::Text(String::new())),
            };
            for &p in &block.ps {
                let vals: Vec<f64> = (0..s.len()).map(|i| norm_sq(s.point(i)).powi(p as i32)).collect();
                let (mc, se) = mean_stderr(&vals);
                let rhs = if p == 1 {
                    if n == 0 {
                        Ok(init.second_moment())
                    } else {
                        moment_bound_rhs_second(k, &r.stream, lambda, n - 1, init.second_moment())
                    }
                } else {
                    let e0 = init_moment(&init, p, block.ensemble, r.seed);
                    moment_bound_rhs_2p(k, &r.stream, lambda, n as f64, p, e0)
                };
                rows += 1;
                match rhs {
                    Ok(rhs) => {
                        let slack = rhs - mc;
                        if !(mc <= rhs + block.sigmas * se) {
                            violations.push(format!("lambda={lambda} n={n} p={p}: {mc} > {rhs} + {}se", block.sigmas));
                        }
                        table.push(vec![
                            lambda.into(),
                            n.into(),
                            (p as u64).into(),
                            mc.into(),
                            se.into(),
                            rhs.into(),
                            slack.into(),
                            w1.clone(),
                            b.clone(),
                        ]);
                    }
                    Err(e) => {
                        violations.push(format!("lambda={lambda} n={n} p={p}: {e}"));
                        let mut row = vec![lambda.into(), n.into(), (p as u64).into(), mc.into(), se.into()];
                        row.resize(table.columns.len(), Cell::Failed);
                        table.push(row);
                    }
                }
            }
        }
    }
    checks.push(Check::new(
        "moment_bounds",
        violations.is_empty() && rows > 0,
        if violations.is_empty() {
            format!("{rows} moments within bound")
        } else {
            violations.join("; ")
        },
    ));
    if quantile.is_some() {
        checks.push(domination_check(w1_pairs.into_iter()));
    }
    Ok(StudyOutcome {
        table,
        checks,
        summary: BTreeMap::new(),
    })
}

/// `E|theta_0|^{2p}`: closed form for `p <= 2`, Monte Carlo otherwise.
fn init_moment(init: &crate::sgld::InitLaw, p: u32, count: usize, seed: u64) -> f64 {
    match p {
        1 => init.second_moment(),
        2 => init.fourth_moment(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = count.max(1000);
            (0..n).map(|_| norm_sq(&init.sample(&mut rng)).powi(p as i32)).sum::<f64>() / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub problem: String,
    pub constants: crate::potentials::ProblemConstants,
    pub stream: StreamSpec,
    pub drift_p2: DriftConstants,
    pub theorem: BTreeMap<&'static str, f64>,
    pub curve: Vec<crate::theory::bound::CurvePoint>,
}

pub fn run_constants_report(r: &Resolved, block: &ConstantsBlock) -> Result<ConstantsReport> {
    let reference = r.reference()?;
    let lambdas = if block.lambdas.is_empty() {
        vec![lambda_max(&r.problem.constants)]
    } else {
        block.lambdas.clone()
    };
    let horizons = if block.horizons.is_empty() { vec![0] } else { block.horizons.clone() };
    let grid: Vec<(f64, u64)> = lambdas
        .iter()
        .flat_map(|&l| horizons.iter().map(move |&n| (l, n)))
        .collect();
    let bound = bound_report(r, &reference, &grid)?;
    Ok(ConstantsReport {
        problem: r.problem.name.clone(),
        constants: r.problem.constants,
        stream: r.stream.clone(),
        drift_p2: drift_constants(&r.problem.constants, 2)?,
        theorem: bound.named_constants(),
        curve: bound.curve.clone(),
    })
}

/// Worst slack of `beta^-1 Lap V_p - <H, grad V_p> <= -C6 V_p + C7` over
/// random `theta` and support points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCheck {
    pub p: u32,
    pub samples: usize,
    pub min_slack: f64,
    pub worst_theta: Vec<f64>,
    pub worst_x: Vec<f64>,
}

pub fn drift_inequality_check(
    spec: &ProblemSpec,
    stream: &StreamSpec,
    p: u32,
    samples: usize,
    seed: u64,
) -> Result<DriftCheck> {
    let dc = drift_constants(&spec.constants, p)?;
    let d = spec.d();
    let m = stream.emitted_dim();
    if m != spec.constants.dim_data {
        return Err(Error::Dimension {
            expected: spec.constants.dim_data,
            got: m,
        });
    }
    let pf = p as f64;
    let bound = stream.coordinate_bound();
    let radius = 4.0 * dc.mbar.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut theta, mut x) = (vec![0.0; d], vec![0.0; m]);
    let (mut h, mut gv) = (vec![0.0; d], vec![0.0; d]);
    let mut out = DriftCheck {
        p,
        samples,
        min_slack: f64::INFINITY,
        worst_theta: Vec::new(),
        worst_x: Vec::new(),
    };
    for _ in 0..samples {
        uniform_ball(&mut rng, d, radius, &mut theta);
        support_point(&mut rng, bound, &mut x);
        spec.objective.grad(&theta, &x, &mut h);
        grad_v(pf, &theta, &mut gv);
        let lhs = laplacian_v(pf, &theta) / spec.beta() - dot(&h, &gv);
        let rhs = -dc.c6 * v(pf, &theta) + dc.c7;
        let slack = rhs - lhs;
        if slack < out.min_slack {
            out.min_slack = slack;
            out.worst_theta = theta.clone();
            out.worst_x = x.clone();
        }
    }
    Ok(out)
}
