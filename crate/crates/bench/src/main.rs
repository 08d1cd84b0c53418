use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use finite_bandits::racing::VarianceMode;

use bandit_bench::demo::{gibbs_demo, DemoConfig};
use bandit_bench::sweep::{run_error_sweep, write_csv, AlgoKind, SweepConfig};
use bandit_bench::synth::{synth_gen, RewardDist, SyntheticSpec};
use bandit_bench::table::emit_bnormal_table;

#[derive(Parser)]
#[command(
    name = "bandit-bench",
    version,
    about = "Benchmarks for approximate discrete sampling via best-arm identification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Misidentification sweep over algorithms, budgets, and reward shapes;
    /// emits one CSV row per setting.
    Sweep(SweepArgs),
    /// Solve the threshold-multiplier table and emit it as CSV.
    BnormalTable(TableArgs),
    /// Paired exact and subsampled chains on a toy posterior; emits a JSON
    /// report.
    GibbsDemo(DemoArgs),
    /// Generate a synthetic reward population file.
    GenPopulation(GenArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Master seed; equal seeds give byte-identical output.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Independent trials per setting.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Number of arms D.
    #[arg(long, default_value_t = 10)]
    arms: usize,
    /// Rewards per arm N.
    #[arg(long, default_value_t = 10_000)]
    pop: usize,
    /// Reward distributions (default: normal,uniform,lognormal).
    #[arg(long, value_delimiter = ',')]
    dist: Vec<String>,
    /// Population reward standard deviations (default: 1e-1,1e-4,1e-5).
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    /// Failure budgets (default: 1e-3,3e-3,1e-2,3e-2,1e-1).
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Algorithms (default: exact,racing-normal,racing-ebs,lil-ucb).
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// Racing variance mode: marginal, pairwise, or independent.
    #[arg(long, default_value = "marginal")]
    variance_mode: String,
    /// First batch size; per-algorithm default when absent (50 for
    /// racing-normal, 2 for racing-ebs).
    #[arg(long)]
    m1: Option<usize>,
    /// File with one target probability per line; softmax of logits spaced
    /// 0..2 when absent.
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Budget rows (default: the published 39-value grid).
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// First-batch proportion columns (default: the published 6 values).
    #[arg(long, value_delimiter = ',')]
    pi: Vec<f64>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Draws per chain.
    #[arg(long, default_value_t = 20_000)]
    draws: usize,
    #[arg(long, default_value_t = 10)]
    arms: usize,
    #[arg(long, default_value_t = 2000)]
    pop: usize,
    #[arg(long, default_value = "normal")]
    dist: String,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 50)]
    m1: usize,
    /// File with one target probability per line; softmax of logits spaced
    /// 0..2 when absent.
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output population file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "normal")]
    dist: String,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 10)]
    arms: usize,
    #[arg(long, default_value_t = 10_000)]
    pop: usize,
    /// csv (one row per arm) or binary (compact, lossless).
    #[arg(long, default_value = "csv")]
    format: String,
    /// File with one target probability per line; softmax of logits spaced
    /// 0..2 when absent.
    #[arg(long)]
    target: Option<PathBuf>,
}

fn main() {
    env_logger::init();
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Sweep(args) => sweep(args),
        Command::BnormalTable(args) => table(args),
        Command::GibbsDemo(args) => demo(args),
        Command::GenPopulation(args) => gen_population(args),
    }
}

fn open_out(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_target(path: &PathBuf) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading target file {}", path.display()))?;
    let mut values = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .with_context(|| format!("target file line {}: {line:?}", number + 1))?,
        );
    }
    if values.is_empty() {
        bail!("target file {} holds no probabilities", path.display());
    }
    Ok(values)
}

fn parse_dists(items: &[String]) -> anyhow::Result<Vec<RewardDist>> {
    if items.is_empty() {
        return Ok(RewardDist::ALL.to_vec());
    }
    items.iter().map(|s| Ok(s.parse()?)).collect()
}

fn parse_algos(items: &[String]) -> anyhow::Result<Vec<AlgoKind>> {
    if items.is_empty() {
        return Ok(AlgoKind::ALL.to_vec());
    }
    items.iter().map(|s| Ok(s.parse()?)).collect()
}

fn parse_variance(name: &str) -> anyhow::Result<VarianceMode> {
    match name.trim().to_ascii_lowercase().as_str() {
        "marginal" => Ok(VarianceMode::Marginal),
        "pairwise" => Ok(VarianceMode::Pairwise),
        "independent" => Ok(VarianceMode::Independent),
        other => bail!("unknown variance mode {other:?} (expected marginal, pairwise, or independent)"),
    }
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let config = SweepConfig {
        arms: args.arms,
        population: args.pop,
        trials: args.trials,
        seed: args.seed,
        dists: parse_dists(&args.dist)?,
        sigmas: if args.sigma.is_empty() { vec![1e-1, 1e-4, 1e-5] } else { args.sigma },
        deltas: if args.delta.is_empty() {
            vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
        } else {
            args.delta
        },
        algos: parse_algos(&args.algo)?,
        variance: parse_variance(&args.variance_mode)?,
        m1: args.m1,
        target: args.target.as_ref().map(read_target).transpose()?,
    };
    let rows = run_error_sweep(&config)?;
    write_csv(&rows, open_out(&args.out)?)?;
    Ok(())
}

fn table(args: TableArgs) -> anyhow::Result<()> {
    emit_bnormal_table(args.delta, args.pi, open_out(&args.out)?)?;
    Ok(())
}

fn demo(args: DemoArgs) -> anyhow::Result<()> {
    let config = DemoConfig {
        arms: args.arms,
        population: args.pop,
        dist: args.dist.parse()?,
        sigma: args.sigma,
        delta: args.delta,
        m1: args.m1,
        draws: args.draws,
        seed: args.seed,
        target: args.target.as_ref().map(read_target).transpose()?,
    };
    let report = gibbs_demo(&config)?;
    let mut out = open_out(&args.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn gen_population(args: GenArgs) -> anyhow::Result<()> {
    let target = match &args.target {
        Some(path) => read_target(path)?,
        None => bandit_bench::synth::default_target(args.arms),
    };
    let synth = synth_gen(&SyntheticSpec {
        arms: args.arms,
        population: args.pop,
        dist: args.dist.parse()?,
        target,
        sigma: args.sigma,
        seed: args.seed,
    })?;
    match args.format.trim().to_ascii_lowercase().as_str() {
        "csv" => synth.population.to_csv_path(&args.out)?,
        "binary" => synth.population.to_binary_path(&args.out)?,
        other => bail!("unknown format {other:?} (expected csv or binary)"),
    }
    eprintln!(
        "wrote {} arms x {} rewards ({}) to {}",
        args.arms,
        args.pop,
        args.dist,
        args.out.display()
    );
    Ok(())
}
