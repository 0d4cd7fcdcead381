//! One PASS/FAIL line per acceptance criterion.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgld_core::experiment::drift_inequality_check;
use sgld_core::potentials::{builtin_problem, ProblemConstants, ProblemParams};
use sgld_core::sgld::lambda_max;
use sgld_core::streams::{maximal_inequality_check, maximal_inequality_constant, StreamSpec};
use sgld_core::theory::contraction::contraction_constants;
use sgld_core::theory::drift::drift_constants;
use sgld_core::theory::lyapunov::v;
use sgld_core::theory::multinomial_inequality_check;
use sgld_core::vector::dist;
use sgld_core::wasserstein::{kl_discrete, w12_semimetric_discrete, w1_matching_exact, wp_1d_exact, SampleSet};

const MOMENT_CONFIGS: [&str; 4] = [
    "moments_gaussian_iid.json",
    "moments_gaussian_ar1.json",
    "moments_cosine_iid.json",
    "moments_cosine_ar1.json",
];
const RATE_CONFIGS: [&str; 2] = ["rate_gaussian.json", "rate_cosine.json"];
const BURNIN_CONFIGS: [&str; 2] = ["burnin_gaussian.json", "burnin_stationary.json"];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sgld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgld"))
        .args(args)
        .output()
        .expect("sgld binary runs")
}

/// Run a study, returning its exit code, CSV text and stderr.
fn study(command: &str, config: &str, out: &Path) -> (i32, String, String) {
    let cfg = configs().join(config);
    let o = sgld(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), command]);
    let csv = std::fs::read_to_string(out).unwrap_or_default();
    (o.status.code().unwrap_or(-1), csv, String::from_utf8_lossy(&o.stderr).into_owned())
}

/// Values of two named columns, skipping the header comment.
fn columns(csv: &str, a: &str, b: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let (ia, ib) = match (header.iter().position(|h| *h == a), header.iter().position(|h| *h == b)) {
        (Some(ia), Some(ib)) => (ia, ib),
        _ => return Vec::new(),
    };
    lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f.get(ia)?.parse().ok()?, f.get(ib)?.parse().ok()?))
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let k = ProblemConstants {
        dim_theta: 1,
        dim_data: 1,
        lipschitz_theta: 1.0,
        lipschitz_data: 1.0,
        grad_at_origin: 0.0,
        dissip_a: 1.0,
        dissip_b: 1.0,
        beta: 1.0,
    };
    let dc = drift_constants(&k, 2).unwrap();
    let cc = contraction_constants(&k).unwrap();
    let c3 = maximal_inequality_constant(3.0).unwrap();
    let checks = [
        ("lambda_max", (lambda_max(&k) - 0.5).abs() < 1e-12),
        ("C6", (dc.c6 - 0.5).abs() < 1e-12),
        ("C7", (dc.c7 - 6.0).abs() < 1e-12),
        ("Mbar2", (dc.mbar - 3f64.sqrt()).abs() < 1e-12),
        ("btilde", (cc.btilde - 23f64.sqrt()).abs() < 1e-12),
        ("bbar", (cc.bbar - 71f64.sqrt()).abs() < 1e-12),
        // High-precision quadrature values of the unit problem.
        ("phibar", rel(cc.phibar, 5.754_402_180_675_397e-19) < 1e-6),
        ("epsilon", rel(cc.epsilon, 2.001_636_879_478_078e-10) < 1e-6),
        ("C'(3)", (c3 * 1000.0).round() == 9166.0 && c3 <= 10.0),
    ];
    let secs = start.elapsed().as_secs_f64();
    let bad: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        bad.is_empty() && secs < 1.0,
        format!("C'(3) = {c3:.5}, {secs:.3}s, mismatches {bad:?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let s = StreamSpec::iid(1, 1.0);
    problems.push((builtin_problem("gaussian", &ProblemParams::default(), &s).unwrap(), s));
    let s = StreamSpec::ar1(1, 1.0, 0.5);
    let p = ProblemParams {
        c: Some(0.25),
        w: Some(vec![1.0]),
        ..Default::default()
    };
    problems.push((builtin_problem("cosine_quadratic", &p, &s).unwrap(), s));
    let s = StreamSpec::ar1(1, 0.5, 0.5).with_window(3);
    let p = ProblemParams {
        dim: 2,
        ..Default::default()
    };
    problems.push((builtin_problem("predictor", &p, &s).unwrap(), s));
    let mut worst = f64::INFINITY;
    for (i, (spec, stream)) in problems.iter().enumerate() {
        worst = worst.min(drift_inequality_check(spec, stream, 2, 10_000, i as u64).unwrap().min_slack);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst >= -1e-9 && secs < 5.0, format!("min slack {worst:.3e} over 3 problems, {secs:.2}s"))
}

fn criterion_3(dir: &Path) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rows = 0;
    for cfg in MOMENT_CONFIGS {
        let (code, csv, err) = study("moment-check", cfg, &dir.join(cfg.replace(".json", ".csv")));
        rows += columns(&csv, "mc_moment", "rhs").len();
        if code != 0 {
            failures.push(format!("{cfg}: exit {code}: {}", err.trim()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && rows == 48 && secs < 120.0,
        format!("{rows} moment rows, {secs:.1}s {}", failures.join("; ")),
    )
}

fn criterion_4(dir: &Path) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut slopes = Vec::new();
    for cfg in RATE_CONFIGS {
        let (code, _, err) = study("rate-study", cfg, &dir.join(cfg.replace(".json", ".csv")));
        if let Some(line) = err.lines().find(|l| l.starts_with("slope =")) {
            slopes.push(line.trim_start_matches("slope = ").to_string());
        }
        if code != 0 {
            failures.push(format!("{cfg}: exit {code}: {}", err.trim()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 300.0,
        format!("slopes {slopes:?}, {secs:.1}s {}", failures.join("; ")),
    )
}

fn criterion_5(dir: &Path) -> Outcome {
    let (_, csv, _) = study("rate-study", "rate_gaussian_b0.json", &dir.join("rate_gaussian_b0.csv"));
    let mut pairs = columns(&csv, "w1", "bound");
    for cfg in MOMENT_CONFIGS.iter().chain(&RATE_CONFIGS) {
        let text = std::fs::read_to_string(dir.join(cfg.replace(".json", ".csv"))).unwrap_or_default();
        pairs.extend(columns(&text, "w1", "bound"));
    }
    let worst = pairs.iter().map(|(w, b)| w / b).fold(0.0, f64::max);
    let ok = !pairs.is_empty() && pairs.iter().all(|(w, b)| b >= w);
    outcome(ok, format!("{} measurements, largest W1/bound {worst:.3e}", pairs.len()))
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> SampleSet {
    SampleSet::new(d, (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

fn brute_force_w1(a: &SampleSet, b: &SampleSet) -> f64 {
    fn go(a: &SampleSet, b: &SampleSet, i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if i == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(a, b, i + 1, used, acc + dist(a.point(i), b.point(j)), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, &mut vec![false; b.len()], 0.0, &mut best);
    best / a.len() as f64
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_exact = 0.0f64;
    let mut worst_match = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=7);
        let (a, b) = (random_set(&mut rng, n, 1), random_set(&mut rng, n, 1));
        let e = wp_1d_exact(&a, &b, 1).unwrap().value;
        worst_exact = worst_exact.max((e - brute_force_w1(&a, &b)).abs());
        worst_match = worst_match.max((w1_matching_exact(&a, &b).unwrap().value - e).abs());
    }
    let mut pinsker_ok = true;
    let mut domination_ok = true;
    let total = 48;
    for _ in 0..200 {
        let k = rng.random_range(1..=16);
        let support: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let counts = |rng: &mut ChaCha8Rng| {
            let mut c = vec![1usize; k];
            for _ in k..total {
                c[rng.random_range(0..k)] += 1;
            }
            c
        };
        let (ca, cb) = (counts(&mut rng), counts(&mut rng));
        let expand = |c: &[usize]| {
            let pts = support.iter().zip(c).flat_map(|(&x, &m)| std::iter::repeat_n(x, m)).collect();
            SampleSet::new(1, pts).unwrap()
        };
        let (ea, eb) = (expand(&ca), expand(&cb));
        let w12 = w12_semimetric_discrete(&ea, &eb).unwrap().value;
        domination_ok &= w1_matching_exact(&ea, &eb).unwrap().value <= w12 + 1e-12;
        let wa: Vec<f64> = ca.iter().map(|&c| c as f64 / total as f64).collect();
        let wb: Vec<f64> = cb.iter().map(|&c| c as f64 / total as f64).collect();
        let v4 = |w: &[f64]| support.iter().zip(w).map(|(&x, p)| p * v(4.0, &[x])).sum::<f64>();
        let kl = kl_discrete(&wa, &wb).unwrap();
        pinsker_ok &= w12 <= 2f64.sqrt() * (1.0 + v4(&wa).sqrt() + v4(&wb).sqrt()) * kl.sqrt() + 1e-9;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_exact < 1e-10 && worst_match < 1e-10 && pinsker_ok && domination_ok && secs < 30.0,
        format!(
            "exact err {worst_exact:.1e}, matching err {worst_match:.1e}, W1<=w12 {domination_ok}, Pinsker {pinsker_ok}, {secs:.2}s"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for _ in 0..10_000 {
        let d = rng.random_range(1..=4);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = rng.random_range(1..=5);
        if !multinomial_inequality_check(&x, &y, p).unwrap().holds {
            failures += 1;
        }
    }
    for p in 1..=5 {
        let zero = [0.0, 0.0];
        let w = [1.5, -0.5];
        for (x, y) in [(&zero, &w), (&w, &zero)] {
            if !multinomial_inequality_check(x, y, p).unwrap().holds {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(failures == 0 && secs < 5.0, format!("{failures} violations, {secs:.2}s"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in [("iid", StreamSpec::iid(1, 1.0)), ("ar1", StreamSpec::ar1(1, 1.0, 0.5))] {
        for horizon in [16, 64] {
            let c = maximal_inequality_check(&spec, horizon, 3.0, 2000, 8).unwrap();
            ok &= c.holds();
            lines.push(format!("{name} T={horizon}: {:.3} <= {:.3}", c.empirical, c.bound));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && secs < 60.0, format!("{}, {secs:.2}s", lines.join(", ")))
}

fn criterion_9(dir: &Path) -> Outcome {
    let mut mismatches = Vec::new();
    let mut compared = 0;
    let mut rerun = |command: &str, cfg: &str, first: PathBuf| {
        let second = dir.join(format!("rerun_{}", first.file_name().unwrap().to_string_lossy()));
        study(command, cfg, &second);
        let (a, b) = (std::fs::read(&first).unwrap_or_default(), std::fs::read(&second).unwrap_or_default());
        compared += 1;
        if a.is_empty() || a != b {
            mismatches.push(format!("{command} {cfg}"));
        }
    };
    for cfg in MOMENT_CONFIGS {
        rerun("moment-check", cfg, dir.join(cfg.replace(".json", ".csv")));
    }
    for cfg in RATE_CONFIGS {
        rerun("rate-study", cfg, dir.join(cfg.replace(".json", ".csv")));
    }
    for cfg in BURNIN_CONFIGS {
        let first = dir.join(cfg.replace(".json", ".csv"));
        study("burnin-study", cfg, &first);
        rerun("burnin-study", cfg, first);
    }
    for (command, ext) in [("constants", "json"), ("simulate", "csv"), ("reference", "csv")] {
        let first = dir.join(format!("{command}.{ext}"));
        study(command, "rate_cosine.json", &first);
        rerun(command, "rate_cosine.json", first);
    }
    let (sim, reference) = (dir.join("simulate.csv"), dir.join("reference.csv"));
    let w1_runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            sgld(&["w1", "--a", sim.to_str().unwrap(), "--b", reference.to_str().unwrap()]).stdout
        })
        .collect();
    compared += 1;
    if w1_runs[0].is_empty() || w1_runs[0] != w1_runs[1] {
        mismatches.push("w1".into());
    }
    outcome(
        mismatches.is_empty(),
        format!("{compared} outputs compared byte for byte, mismatches {mismatches:?}"),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("constant regression", Box::new(criterion_1)),
        ("drift inequality", Box::new(criterion_2)),
        ("moment bounds", Box::new(|| criterion_3(dir.path()))),
        ("rate study", Box::new(|| criterion_4(dir.path()))),
        ("bound domination", Box::new(|| criterion_5(dir.path()))),
        ("wasserstein correctness", Box::new(criterion_6)),
        ("multinomial inequality", Box::new(criterion_7)),
        ("maximal inequality", Box::new(criterion_8)),
        ("determinism", Box::new(|| criterion_9(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {} {}: {} ({})", i + 1, name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
