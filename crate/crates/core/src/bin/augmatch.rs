//! Command-line front end: generate instances, synthesize predictions, solve
//! offline, run one algorithm, sweep a grid, or re-render a report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

/// `println!` that drops the line once stdout is closed (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

use augmatch::auction::{quasi_feasibility_audit, run_algorithm2_with};
use augmatch::bounded::{dual_rate_audit, run_algorithm1, waterfill_baseline};
use augmatch::generators::{generate, GeneratorSpec};
use augmatch::harness::{
    apply_generator_overrides, emit_report, follow_prediction, parse_generator_spec, parse_summary_csv, Algorithm,
    CellSummary, InstanceSource, OutputFormat, SweepConfig, SweepReport,
};
use augmatch::io::{
    format_allocation, format_instance, format_prediction, parse_instance, parse_prediction, write_trace,
};
use augmatch::offline::{fractional_opt, integral_opt, IntegralOptions};
use augmatch::predictions::{perturb_auction, perturb_bounded, prediction_value, OracleConfig};
use augmatch::{check_dual_feasibility, check_primal_feasibility, revenue, Instance, Prediction};

#[derive(Parser)]
#[command(
    name = "augmatch",
    version,
    about = "Learning-augmented online allocation experiments"
)]
struct Cli {
    /// Base seed for generators, oracles and sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (generate, predict, solve-offline, run) or directory (sweep, report).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 2 when any audit fails.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Svg => OutputFormat::Svg,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance.
    Generate(GenerateArgs),
    /// Write a perturbed optimal prediction for an instance.
    Predict(PredictArgs),
    /// Solve the offline fractional (and optionally integral) problem.
    SolveOffline(SolveArgs),
    /// Run one algorithm on one instance and audit the result.
    Run(RunArgs),
    /// Run an eta x error-rate sweep and write CSV/SVG.
    Sweep(SweepArgs),
    /// Re-render SVG plots from a summary CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// instance1, instance2, instance3, instance4 or lognormal.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Generator config file (`key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a generator field, e.g. `--set items=200`.
    #[arg(long = "set", value_parser = parse_kv)]
    overrides: Vec<(String, String)>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    /// Base assignment to perturb instead of the computed integral optimum.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Node limit of the integral search.
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
    /// Perturb bounded items only when two or more alternatives exist.
    #[arg(long)]
    literal_alternatives: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also search for the integral optimum.
    #[arg(long)]
    integral: bool,
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Algo1,
    Algo2,
    WaterfillBaseline,
    FollowPrediction,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Prediction file; omitted means no prediction.
    #[arg(long)]
    prediction: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "algo1")]
    algorithm: AlgoArg,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Declared R_max for algo2.
    #[arg(long)]
    r_max: Option<f64>,
    /// Write the per-item trace (TSV).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file; without it `--algorithm` and `--preset` are required.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgoArg>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma list or `start:stop:step`.
    #[arg(long)]
    etas: Option<String>,
    #[arg(long)]
    error_rates: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Summary CSV written by `sweep`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "algo1")]
    algorithm: AlgoArg,
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn algorithm(a: AlgoArg) -> Algorithm {
    match a {
        AlgoArg::Algo1 => Algorithm::Algo1,
        AlgoArg::Algo2 => Algorithm::Algo2,
        AlgoArg::WaterfillBaseline => Algorithm::WaterfillBaseline,
        AlgoArg::FollowPrediction => Algorithm::FollowPrediction,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    Ok(parse_instance(&read(path)?).with_context(|| format!("parsing {}", path.display()))?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `Ok(true)` when every audit passed.
fn dispatch(cli: &Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate(a) => {
            let spec = match (&a.preset, &a.config) {
                (Some(p), _) => GeneratorSpec::preset(p, seed)?,
                (None, Some(c)) => parse_generator_spec(&read(c)?)?,
                (None, None) => bail!("generate needs --preset or --config"),
            };
            let spec = if cli.seed.is_some() { spec.with_seed(seed) } else { spec };
            let spec = apply_generator_overrides(spec, &a.overrides)?;
            let inst = generate(&spec)?;
            info!("generated {} instance with seed {}", inst.kind(), spec.seed);
            emit(out, &format_instance(&inst))?;
            Ok(true)
        }
        Command::Predict(a) => {
            let inst = load_instance(&a.instance)?;
            let base = match &a.base {
                Some(p) => parse_prediction(&read(p)?)?.prediction,
                None => {
                    let opts = IntegralOptions {
                        time_budget: std::time::Duration::MAX,
                        node_limit: Some(a.nodes),
                        ..Default::default()
                    };
                    integral_opt(&inst, &opts)?.assignment
                }
            };
            let oracle = OracleConfig {
                error_rate: a.error_rate,
                seed,
                literal_alternatives: a.literal_alternatives,
            };
            let pred = match &inst {
                Instance::Bounded(b) => perturb_bounded(b, &base, &oracle)?,
                Instance::Auction(x) => perturb_auction(x, &base, &oracle)?,
            };
            let meta = vec![
                ("seed".to_string(), seed.to_string()),
                ("error_rate".to_string(), a.error_rate.to_string()),
                ("base_optimal".to_string(), a.base.is_none().to_string()),
            ];
            emit(out, &format_prediction(&pred, &meta))?;
            Ok(true)
        }
        Command::SolveOffline(a) => {
            let inst = load_instance(&a.instance)?;
            let frac = fractional_opt(&inst)?;
            out!("fractional_opt\t{:.9}", frac.value);
            out!("method\t{}", frac.method.name());
            out!("certified\t{}", frac.certificate.is_some());
            if a.integral {
                let opts = IntegralOptions {
                    time_budget: std::time::Duration::from_secs_f64(a.time_limit.max(0.0)),
                    ..Default::default()
                };
                let int = integral_opt(&inst, &opts)?;
                out!("integral_opt\t{:.9}", int.value);
                out!("integral_proven\t{}", int.proven);
                out!("integral_upper_bound\t{:.9}", int.upper_bound);
                out!("integrality_gap\t{:.6}", int.integrality_gap);
            }
            if let Some(p) = out {
                emit(Some(p), &format_allocation(&frac.allocation))?;
            }
            Ok(true)
        }
        Command::Run(a) => run_one(a, out),
        Command::Sweep(a) => {
            let mut cfg = match &a.config {
                Some(p) => SweepConfig::parse(&read(p)?)?,
                None => {
                    let (Some(alg), Some(preset)) = (a.algorithm, &a.preset) else {
                        bail!("sweep needs --config, or --algorithm with --preset");
                    };
                    SweepConfig::new(
                        algorithm(alg),
                        InstanceSource::Generator(GeneratorSpec::preset(preset, seed)?),
                    )
                }
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(alg) = a.algorithm {
                cfg.algorithm = algorithm(alg);
            }
            if let Some(e) = &a.etas {
                cfg.etas = augmatch::harness::parse_grid(e)?;
            }
            if let Some(e) = &a.error_rates {
                cfg.error_rates = augmatch::harness::parse_grid(e)?;
            }
            if let Some(r) = a.repetitions {
                cfg.repetitions = r;
            }
            let report = augmatch::harness::run_sweep(&cfg)?;
            let dir = out.unwrap_or(Path::new("."));
            for p in emit_report(&report, dir, cli.format.into())? {
                out!("wrote {}", p.display());
            }
            let failures = report.audit_failures();
            out!("runs {}  audit failures {}", report.runs.len(), failures);
            Ok(failures == 0)
        }
        Command::Report(a) => {
            let cells: Vec<CellSummary> = parse_summary_csv(&read(&a.input)?)?;
            let failures: usize = cells.iter().map(|c| c.audit_failures).sum();
            let report = SweepReport {
                algorithm: algorithm(a.algorithm),
                cells,
                runs: Vec::new(),
                mean_integrality_gap: f64::NAN,
                mean_r_max: f64::NAN,
                instances: 0,
            };
            let dir = out.unwrap_or(Path::new("."));
            for p in emit_report(&report, dir, OutputFormat::Svg)? {
                out!("wrote {}", p.display());
            }
            Ok(failures == 0)
        }
    }
}

fn run_one(a: &RunArgs, out: Option<&Path>) -> Result<bool> {
    let inst = load_instance(&a.instance)?;
    let market = inst.as_market();
    let pred = match &a.prediction {
        Some(p) => parse_prediction(&read(p)?)?.prediction,
        None => Prediction::none(market.num_items()),
    };
    let pv = prediction_value(market, &pred)?;
    let opt = fractional_opt(&inst)?.value;
    let mut audits: Vec<(&str, bool)> = Vec::new();
    let (value, alloc, records) = match (a.algorithm, &inst) {
        (AlgoArg::Algo1 | AlgoArg::WaterfillBaseline, Instance::Bounded(b)) => {
            let run = match a.algorithm {
                AlgoArg::Algo1 => run_algorithm1(b, &pred, a.eta)?,
                _ => waterfill_baseline(b)?,
            };
            audits.push((
                "primal_feasibility",
                check_primal_feasibility(b, &run.allocation, 1.0)?.passed(),
            ));
            audits.push(("dual_feasibility", check_dual_feasibility(b, &run.dual)?.passed()));
            audits.push(("dual_rate", dual_rate_audit(&run.trace).passed()));
            (run.revenue(), run.allocation.clone(), run.trace.records())
        }
        (AlgoArg::Algo1 | AlgoArg::WaterfillBaseline, Instance::Auction(_)) => {
            bail!("this algorithm needs a bounded-allocation instance")
        }
        (AlgoArg::Algo2, _) => {
            let auction = match &inst {
                Instance::Auction(x) => x.clone(),
                Instance::Bounded(b) => b.to_auction(),
            };
            let o = run_algorithm2_with(&auction, &pred, a.eta, a.r_max)?;
            audits.push((
                "quasi_feasibility",
                quasi_feasibility_audit(&auction, &o.allocation, o.trace.r_max)?.passed(),
            ));
            audits.push(("dual_feasibility", check_dual_feasibility(&auction, &o.dual)?.passed()));
            audits.push(("potential", o.trace.potential_failures == 0));
            out!("uncapped_revenue\t{:.9}", o.revenue());
            (o.capped_revenue(&auction), o.allocation.clone(), o.trace.records())
        }
        (AlgoArg::FollowPrediction, _) => {
            let alloc = follow_prediction(market, &pred)?;
            audits.push((
                "primal_feasibility",
                check_primal_feasibility(market, &alloc, 1.0)?.passed(),
            ));
            (revenue(market, &alloc)?, alloc, Vec::new())
        }
    };
    out!("algo\t{value:.9}");
    out!("opt\t{opt:.9}");
    out!("ratio\t{:.6}", if opt > 0.0 { value / opt } else { 1.0 });
    out!("prediction_value\t{:.9}", pv.value);
    out!("prediction_feasible\t{}", pv.feasible);
    for (name, ok) in &audits {
        out!("audit\t{name}\t{}", if *ok { "pass" } else { "FAIL" });
    }
    if let Some(p) = &a.trace {
        let f = std::fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        write_trace(&records, std::io::BufWriter::new(f))?;
    }
    if let Some(p) = out {
        emit(Some(p), &format_allocation(&alloc))?;
    }
    Ok(audits.iter().all(|a| a.1))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("audit failures detected");
            if cli.strict {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
