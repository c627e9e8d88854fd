//! Command-line front end: sampling, simulation, design review, testing,
//! and Monte Carlo benchmarks over CSV and JSON files.
//!
//! Exit codes: 0 success, 2 command-line misuse, 3 unreadable or malformed
//! input files, 4 contract violations and numerical failures reported by
//! the statistical modules.

mod bench;
mod io;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rsskit::allocate::design_report;
use rsskit::infer::{
    rss_auc_test, rss_elr_test, rss_prop_test, rss_sign_test, rss_t_test, rss_z_test, DfMethod,
};
use rsskit::model::{Allocation, Alternative, Kind};
use rsskit::sampling::{rss_prop_sample, rss_sample, PoolPolicy, SamplingConfig};
use rsskit::simulate::{rss_prop_simulate, rss_simulate, Dist, SimConfig};

use io::{Failure, Result};

#[derive(Parser)]
#[command(name = "rsskit", about = "Ranked set sampling designs, tests, and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ranked set sample from a population file.
    Sample(SampleArgs),
    /// Draw a ranked set sample ranking on a binary trait.
    PropSample(SampleArgs),
    /// Generate a ranked set sample from a parametric model.
    Simulate(SimulateArgs),
    /// Generate a binary ranked set sample with success probability p.
    PropSimulate(PropSimulateArgs),
    /// Report allocation recommendations for an existing sample.
    Design(DesignArgs),
    /// Run a hypothesis test and report the confidence interval as JSON.
    Test(TestArgs),
    /// Compare sampling designs by Monte Carlo coverage and CI length.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Population CSV with columns ID,X[,Y].
    #[arg(long)]
    pop: PathBuf,
    /// Set size: units ranked per set.
    #[arg(long = "H")]
    set_size: usize,
    /// Comma-separated per-rank sample sizes, e.g. 4,10,9.
    #[arg(long)]
    nsamp: String,
    /// What happens to unmeasured units of a used set.
    #[arg(long, default_value = "discard")]
    pool: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "H")]
    set_size: usize,
    #[arg(long)]
    nsamp: String,
    /// normal, t, or lognormal.
    #[arg(long, default_value = "normal")]
    dist: String,
    /// Correlation between the ranking variable and the outcome.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Location shift added to every outcome.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Degrees of freedom when --dist t.
    #[arg(long = "t-df", default_value_t = 3.0)]
    t_df: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PropSimulateArgs {
    #[arg(long = "H")]
    set_size: usize,
    #[arg(long)]
    nsamp: String,
    /// Population success probability.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    /// Sample CSV with columns rank[,ID][,y].
    #[arg(long)]
    data: PathBuf,
    /// Treat the data as binary and report Neyman proportions.
    #[arg(long)]
    prop: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// z, t, elr, sign, prop, or auc.
    method: String,
    #[arg(long)]
    data: PathBuf,
    /// Second sample for two-sample methods.
    #[arg(long)]
    data2: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// two.sided, less, or greater.
    #[arg(long, default_value = "two.sided")]
    alternative: String,
    /// Hypothesized mean (difference of means for two samples).
    #[arg(long, default_value_t = 0.0)]
    mu0: f64,
    /// Hypothesized median for the sign test.
    #[arg(long, default_value_t = 0.0)]
    median0: f64,
    /// Hypothesized proportion for the proportion test.
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
    /// Hypothesized AUC for the auc test.
    #[arg(long, default_value_t = 0.5)]
    delta0: f64,
    /// naive or sample; t test only.
    #[arg(long = "df-method", default_value = "sample")]
    df_method: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; without it the CSV precedes the table on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli.command) {
        eprintln!("{failure}");
        std::process::exit(failure.code());
    }
}

fn usage<T>(result: std::result::Result<T, String>) -> Result<T> {
    result.map_err(Failure::Usage)
}

fn numeric<T>(result: std::result::Result<T, impl std::fmt::Display>) -> Result<T> {
    result.map_err(|e| Failure::Numeric(e.to_string()))
}

fn parse_counts(nsamp: &str) -> Result<Vec<usize>> {
    nsamp
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Usage(format!("cannot parse sample count {part:?}")))
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(args) => sample(args, false),
        Command::PropSample(args) => sample(args, true),
        Command::Simulate(args) => simulate(args),
        Command::PropSimulate(args) => prop_simulate(args),
        Command::Design(args) => design(args),
        Command::Test(args) => test(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn sample(args: SampleArgs, prop: bool) -> Result<()> {
    let pool = usage(PoolPolicy::from_str(&args.pool))?;
    let counts = parse_counts(&args.nsamp)?;
    let pop = io::read_population(&args.pop)?;
    let cfg = SamplingConfig::new(args.set_size, Allocation::new(counts), args.seed)
        .with_pool_policy(pool);
    let data = if prop {
        numeric(rss_prop_sample(&pop, &cfg))?
    } else {
        numeric(rss_sample(&pop, &cfg))?
    };
    io::emit(args.out.as_deref(), &io::format_rss(&data))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let dist = usage(Dist::from_str(&args.dist))?;
    let counts = parse_counts(&args.nsamp)?;
    let cfg = SimConfig::new(args.set_size, Allocation::new(counts), dist, args.rho, args.seed)
        .with_delta(args.delta)
        .with_t_df(args.t_df);
    let data = numeric(rss_simulate(&cfg))?;
    io::emit(args.out.as_deref(), &io::format_rss(&data))
}

fn prop_simulate(args: PropSimulateArgs) -> Result<()> {
    let counts = parse_counts(&args.nsamp)?;
    let data =
        numeric(rss_prop_simulate(args.set_size, &Allocation::new(counts), args.p, args.seed))?;
    io::emit(args.out.as_deref(), &io::format_rss(&data))
}

fn design(args: DesignArgs) -> Result<()> {
    let kind = if args.prop { Kind::Binary } else { Kind::Continuous };
    let data = io::read_rss(&args.data, kind)?;
    let report = numeric(design_report(&data, args.prop))?;
    io::emit(args.out.as_deref(), &io::format_design_report(&report))
}

fn test(args: TestArgs) -> Result<()> {
    let known_methods = ["z", "t", "elr", "sign", "prop", "auc"];
    if !known_methods.contains(&args.method.as_str()) {
        return Err(Failure::Usage(format!(
            "unknown test method {:?} (expected z, t, elr, sign, prop, or auc)",
            args.method
        )));
    }
    let alternative = usage(Alternative::from_str(&args.alternative))?;
    let two_sided = alternative == Alternative::TwoSided;
    let kind = if args.method == "prop" { Kind::Binary } else { Kind::Continuous };
    let data = io::read_rss(&args.data, kind)?;
    let data2 = args.data2.as_deref().map(|p| io::read_rss(p, kind)).transpose()?;

    let reject_data2 = || {
        if data2.is_some() {
            Err(Failure::Usage(format!("{} is a one-sample method; drop --data2", args.method)))
        } else {
            Ok(())
        }
    };
    let result = match args.method.as_str() {
        "z" => numeric(rss_z_test(&data, data2.as_ref(), args.mu0, args.alpha, alternative))?,
        "t" => {
            let df_method = usage(DfMethod::from_str(&args.df_method))?;
            numeric(rss_t_test(&data, data2.as_ref(), args.mu0, args.alpha, alternative, df_method))?
        }
        "elr" => {
            reject_data2()?;
            if !two_sided {
                return Err(Failure::Usage("elr supports two.sided only".into()));
            }
            numeric(rss_elr_test(&data, args.mu0, args.alpha))?.0
        }
        "sign" => {
            reject_data2()?;
            numeric(rss_sign_test(&data, args.median0, args.alpha, alternative))?
        }
        "prop" => {
            reject_data2()?;
            numeric(rss_prop_test(&data, args.p0, args.alpha, alternative))?
        }
        "auc" => {
            let data2 = data2
                .as_ref()
                .ok_or_else(|| Failure::Usage("auc needs a second sample; pass --data2".into()))?;
            if !two_sided {
                return Err(Failure::Usage("auc supports two.sided only".into()));
            }
            numeric(rss_auc_test(&data, data2, args.delta0, args.alpha))?
        }
        _ => unreachable!("method validated above"),
    };
    io::emit(args.out.as_deref(), &io::format_test_result(&result))
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let cfg = bench::read_config(&args.config)?;
    let rows = bench::run(&cfg)?;
    let csv = io::format_bench_csv(&rows);
    let table = io::format_bench_table(&rows);
    match args.out.as_deref() {
        Some(path) => {
            io::emit(Some(path), &csv)?;
            io::emit(None, &table)
        }
        None => io::emit(None, &format!("{csv}\n{table}")),
    }
}
