use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use sgld_core::config::{ExperimentConfig, Resolved};
use sgld_core::experiment::{run_burnin_study, run_constants_report, run_moment_check, run_rate_study, StudyOutcome};
use sgld_core::output::{format_f64, read_points, Cell, Meta, Table};
use sgld_core::reference::reference_samples;
use sgld_core::sgld::run_chain;
use sgld_core::wasserstein::{sliced_w1, w1_matching_exact, wp_1d_exact, DistanceResult};
use sgld_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sgld", version, about = "SGLD with dependent data streams: simulation, references and bound checks")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for ensemble runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report every bound constant as JSON.
    Constants,
    /// Run the configured SGLD ensemble and write the thinned trajectories.
    Simulate,
    /// Draw samples from the configured reference target.
    Reference {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
    /// Distance between two point clouds stored as CSV.
    W1 {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
        p: u32,
        /// Number of random projections for the sliced estimator.
        #[arg(long)]
        sliced: Option<usize>,
    },
    RateStudy,
    BurninStudy,
    MomentCheck,
}

enum Failure {
    Usage(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Constants => "constants",
        Command::Simulate => "simulate",
        Command::Reference { .. } => "reference",
        Command::W1 { .. } => "w1",
        Command::RateStudy => "rate-study",
        Command::BurninStudy => "burnin-study",
        Command::MomentCheck => "moment-check",
    }
}

fn resolved(cli: &Cli) -> Result<(Resolved, String), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("`{}` needs --config", command_name(&cli.command))))?;
    let cfg = ExperimentConfig::load(path)?;
    let hash = cfg.sha256();
    Ok((cfg.resolve(cli.seed)?, hash))
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let name = command_name(&cli.command).to_string();
    match &cli.command {
        Command::W1 { a, b, p, sliced } => w1(cli, a, b, *p, *sliced),
        Command::Constants => {
            let (r, hash) = resolved(cli)?;
            let block = r.config.experiment.constants_report.clone().unwrap_or_default();
            let report = run_constants_report(&r, &block)?;
            let meta = Meta {
                command: name,
                config_sha256: hash,
                seed: r.seed,
            };
            let doc = serde_json::json!({ "meta": meta, "report": report });
            let mut w = sink(&cli.out)?;
            writeln!(w, "{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?)?;
            Ok(())
        }
        Command::Simulate => {
            let (r, hash) = resolved(cli)?;
            let block = r
                .config
                .sgld
                .as_ref()
                .ok_or_else(|| Failure::Usage("simulate needs an `sgld` block".into()))?;
            let cfg = r.sgld_config(block.step_size, block.horizon, block.ensemble);
            cfg.validate(&r.problem)?;
            let trajectories = (0..cfg.ensemble as u64)
                .into_par_iter()
                .map(|id| run_chain(&r.problem, &r.stream, &cfg, id))
                .collect::<Result<Vec<_>, _>>()?;
            let d = r.problem.d();
            let mut columns = vec!["chain_id".to_string(), "step".to_string()];
            columns.extend((0..d).map(|j| format!("theta_{j}")));
            let mut table = Table::new(&columns);
            for t in &trajectories {
                for (i, &step) in t.steps.iter().enumerate() {
                    let mut row = vec![Cell::Int(t.chain_id), Cell::Int(step)];
                    row.extend(t.state(i).iter().map(|&x| Cell::Num(x)));
                    table.push(row);
                }
            }
            emit(cli, &table, name, hash, r.seed)
        }
        Command::Reference { count } => {
            let (r, hash) = resolved(cli)?;
            let target = r.reference()?;
            let s = reference_samples(&target, *count, r.seed)?;
            let columns: Vec<String> = (0..s.dim).map(|j| format!("theta_{j}")).collect();
            let mut table = Table::new(&columns);
            for i in 0..s.len() {
                table.push(s.point(i).iter().map(|&x| Cell::Num(x)).collect());
            }
            emit(cli, &table, name, hash, r.seed)
        }
        Command::RateStudy => study(cli, name, |r| {
            let block = r
                .config
                .experiment
                .rate_study
                .as_ref()
                .ok_or_else(|| Error::Config("missing experiment.rate_study".into()))?;
            run_rate_study(r, block)
        }),
        Command::BurninStudy => study(cli, name, |r| {
            let block = r
                .config
                .experiment
                .burnin_study
                .as_ref()
                .ok_or_else(|| Error::Config("missing experiment.burnin_study".into()))?;
            run_burnin_study(r, block)
        }),
        Command::MomentCheck => study(cli, name, |r| {
            let block = r
                .config
                .experiment
                .moment_check
                .as_ref()
                .ok_or_else(|| Error::Config("missing experiment.moment_check".into()))?;
            run_moment_check(r, block)
        }),
    }
}

fn emit(cli: &Cli, table: &Table, command: String, hash: String, seed: u64) -> Result<(), Failure> {
    let meta = Meta {
        command,
        config_sha256: hash,
        seed,
    };
    let mut w = sink(&cli.out)?;
    table.write(&meta, &mut w)?;
    w.flush()?;
    Ok(())
}

fn study<F>(cli: &Cli, name: String, f: F) -> Result<(), Failure>
where
    F: FnOnce(&Resolved) -> sgld_core::Result<StudyOutcome>,
{
    let (r, hash) = resolved(cli)?;
    let outcome = f(&r)?;
    emit(cli, &outcome.table, name, hash, r.seed)?;
    for (k, v) in &outcome.summary {
        eprintln!("{k} = {}", format_f64(*v));
    }
    for c in &outcome.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn load_points(path: &Path) -> Result<sgld_core::SampleSet, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(read_points(BufReader::new(file))?)
}

fn w1(cli: &Cli, a: &Path, b: &Path, p: u32, sliced: Option<usize>) -> Result<(), Failure> {
    let (sa, sb) = (load_points(a)?, load_points(b)?);
    if sa.dim != sb.dim {
        return Err(Failure::Usage(format!("dimensions differ: {} vs {}", sa.dim, sb.dim)));
    }
    let seed = cli.seed.unwrap_or(0);
    let (metric, result): (String, DistanceResult) = match (sa.dim, sliced) {
        (1, None) => (format!("W{p}"), wp_1d_exact(&sa, &sb, p)?),
        (_, Some(k)) => {
            if p != 1 {
                return Err(Failure::Usage("the sliced estimator is only available for p = 1".into()));
            }
            ("sliced_W1".into(), sliced_w1(&sa, &sb, k, seed)?)
        }
        (_, None) => {
            if p != 1 {
                return Err(Failure::Usage("W2 is only available in one dimension".into()));
            }
            ("W1".into(), w1_matching_exact(&sa, &sb)?)
        }
    };
    let mut table = Table::new(&["metric", "method", "value", "stderr"]);
    table.push(vec![
        Cell::Text(metric),
        Cell::Text(result.method.as_str().into()),
        Cell::Num(result.value),
        result.stderr.map_or(Cell::Text(String::new()), Cell::Num),
    ]);
    let hash = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?.sha256(),
        None => String::new(),
    };
    emit(cli, &table, "w1".into(), hash, seed)
}
