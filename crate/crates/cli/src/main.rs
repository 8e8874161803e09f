//! `bet` — dependence testing, screening, simulation, power studies and
//! region plots from the command line.
//!
//! Exit codes: 0 success, 2 flag/contract validation failure, 3 runtime
//! (I/O) failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bet_core::{
    binary_expand, emit_region_plot, empirical_copula, io as betio, known_cdf_copula, max_bet,
    power_curve, screen_all_pairs, two_stage_bet, BetResult, BexLevel, CopulaSet, DataGenerator,
    Error, InteractionIndex, PowerMethod, PowerRow, Provenance, PvalueMethod, SampleSet,
    Scenario, ScenarioSpec, ScreenConfig, ScreenTies, TiePolicy,
};

#[derive(Parser)]
#[command(
    name = "bet",
    about = "Binary expansion testing for nonparametric dependence detection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one pair of variables for dependence.
    Test(TestArgs),
    /// Screen all variable pairs of a matrix for dependence.
    Screen(ScreenArgs),
    /// Generate samples from a scenario, the null, or the fractal cross.
    Simulate(SimulateArgs),
    /// Monte-Carlo power/size grid over noise levels.
    Power(PowerArgs),
    /// Render copula scatter plots with interaction regions shaded.
    PlotRegion(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Normal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Marginals {
    /// Rank-transform both variables (empirical CDF).
    Empirical,
    /// Treat inputs as already uniform on (0, 1].
    KnownUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieMode {
    /// Refuse tied values (test) or drop the variable (screen).
    Error,
    /// Break ties at random, seeded by --seed.
    Random,
}

fn parse_depth_pair(s: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let err = || format!("expected `D1,D2`, got `{s}`");
    if parts.len() != 2 {
        return Err(err());
    }
    let d1: u32 = parts[0].trim().parse().map_err(|_| err())?;
    let d2: u32 = parts[1].trim().parse().map_err(|_| err())?;
    if d1 == 0 || d2 == 0 {
        return Err("depths must be at least 1".to_string());
    }
    Ok((d1, d2))
}

/// Noise levels given as `1,2,5` or `1-10`.
#[derive(Clone, Debug)]
struct LevelList(Vec<u32>);

fn parse_levels(s: &str) -> Result<LevelList, String> {
    let err = || format!("expected `LO-HI` or a comma list, got `{s}`");
    if let Some((lo, hi)) = s.split_once('-') {
        let lo: u32 = lo.trim().parse().map_err(|_| err())?;
        let hi: u32 = hi.trim().parse().map_err(|_| err())?;
        if lo == 0 || hi < lo {
            return Err(err());
        }
        return Ok(LevelList((lo..=hi).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| err()))
        .collect::<Result<_, _>>()
        .map(LevelList)
}

#[derive(Args)]
struct TestArgs {
    /// Two-column CSV of paired observations.
    #[arg(long)]
    input: PathBuf,
    /// Fixed depths `D1,D2`; omits the two-stage depth search.
    #[arg(long, value_parser = parse_depth_pair)]
    depth: Option<(u32, u32)>,
    /// Two-stage search depth bound (used when --depth is absent).
    #[arg(long, default_value_t = 4)]
    d_max: u32,
    #[arg(long, value_enum, default_value_t = Marginals::Empirical)]
    marginals: Marginals,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    /// Apply the continuity correction under --method normal.
    #[arg(long)]
    continuity: bool,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = TieMode::Error)]
    ties: TieMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-interaction table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ScreenArgs {
    /// Matrix CSV: one column per variable, optional header of names.
    #[arg(long)]
    input: PathBuf,
    /// Expansion depth for every pair.
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Method::Normal)]
    method: Method,
    #[arg(long)]
    continuity: bool,
    /// Worker threads (default: the BET_WORKERS variable, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = TieMode::Error)]
    ties: TieMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// linear | parabolic | circular | sine | checkerboard | local | null | bex
    #[arg(long)]
    scenario: String,
    /// Noise level 1..=10 for the named scenarios; expansion level for bex.
    #[arg(long, default_value_t = 1)]
    level: u32,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    /// Scenario name, or `null` for size calibration.
    #[arg(long)]
    scenario: String,
    /// Noise levels, e.g. `1-10` or `2,4,6`. Ignored for `null`.
    #[arg(long, value_parser = parse_levels, default_value = "1-10")]
    levels: LevelList,
    /// bet (two-stage) or chisq baseline.
    #[arg(long, value_enum, default_value_t = PowerTest::Bet)]
    method: PowerTest,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depth bound for bet, table depth for chisq.
    #[arg(long, default_value_t = 4)]
    d_max: u32,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum PowerTest {
    Bet,
    Chisq,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_depth_pair)]
    depth: (u32, u32),
    /// Interaction label such as A1A2B1; omit to render every non-trivial
    /// interaction into --out as a directory.
    #[arg(long)]
    interaction: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Marginals::Empirical)]
    marginals: Marginals,
    #[arg(long, value_enum, default_value_t = TieMode::Error)]
    ties: TieMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    /// Bad flags or violated data contracts.
    Validation(String),
    /// I/O and other environmental failures.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => run_test(args),
        Command::Screen(args) => run_screen(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Power(args) => run_power(args),
        Command::PlotRegion(args) => run_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn tie_policy(mode: TieMode, seed: u64) -> TiePolicy {
    match mode {
        TieMode::Error => TiePolicy::Error,
        TieMode::Random => TiePolicy::Random { seed },
    }
}

fn make_copula(
    samples: &SampleSet,
    marginals: Marginals,
    ties: TieMode,
    seed: u64,
) -> Result<(CopulaSet, Provenance), CliError> {
    match marginals {
        Marginals::Empirical => {
            let c = empirical_copula(samples, tie_policy(ties, seed))?;
            Ok((c, Provenance::EmpiricalRank))
        }
        Marginals::KnownUniform => {
            let c = known_cdf_copula(samples, |x| x, |y| y)?;
            Ok((c, Provenance::KnownCdf))
        }
    }
}

#[derive(Serialize)]
struct TestRow {
    interaction: String,
    s: i64,
    z: Option<f64>,
    p: f64,
    method: &'static str,
}

fn test_rows(result: &BetResult) -> Vec<TestRow> {
    result
        .per_interaction
        .iter()
        .map(|t| TestRow {
            interaction: t.index.label(),
            s: t.s,
            z: t.z,
            p: t.p,
            method: t.method.as_str(),
        })
        .collect()
}

fn write_rows<T: Serialize>(
    rows: &[T],
    csv_header: &str,
    csv_line: impl Fn(&T) -> String,
    out: &Path,
    format: Format,
) -> Result<(), CliError> {
    let file = File::create(out)?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Csv => {
            writeln!(w, "{csv_header}")?;
            for row in rows {
                writeln!(w, "{}", csv_line(row))?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn opt_to_string<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn run_test(args: TestArgs) -> Result<(), CliError> {
    let samples = betio::read_xy_csv(&args.input)?;
    let (copula, provenance) = make_copula(&samples, args.marginals, args.ties, args.seed)?;
    let method = match args.method {
        Method::Exact => PvalueMethod::Exact,
        Method::Normal => PvalueMethod::NormalApprox {
            continuity: args.continuity,
        },
    };
    let result = match args.depth {
        Some((d1, d2)) => {
            let (u, v) = binary_expand(&copula, d1.max(d2));
            max_bet(&u, &v, d1, d2, provenance, method)?
        }
        None => {
            let (u, v) = binary_expand(&copula, args.d_max);
            two_stage_bet(&u, &v, args.d_max, provenance, method)?
        }
    };

    let rows = test_rows(&result);
    println!("{:<12} {:>8} {:>10} {:>14} method", "interaction", "s", "z", "p");
    for row in &rows {
        println!(
            "{:<12} {:>8} {:>10} {:>14.6e} {}",
            row.interaction,
            row.s,
            row.z.map(|z| format!("{z:.3}")).unwrap_or_else(|| "-".into()),
            row.p,
            row.method
        );
    }
    let strongest = result
        .per_interaction
        .iter()
        .find(|t| t.index == result.strongest)
        .expect("strongest is among the tested interactions");
    println!(
        "strongest: {}  s = {}{}  n_tests = {}  p_adjusted = {:.6e}{}",
        result.strongest.label(),
        result.s_extreme,
        strongest
            .z
            .map(|z| format!("  z = {z:.3}"))
            .unwrap_or_default(),
        result.n_tests,
        result.p_adjusted,
        if result.p_adjusted <= args.alpha {
            format!("  (rejects independence at alpha = {})", args.alpha)
        } else {
            String::new()
        }
    );

    if let Some(out) = &args.out {
        write_rows(
            &rows,
            "interaction,s,z,p,method",
            |r| {
                format!(
                    "{},{},{},{},{}",
                    r.interaction,
                    r.s,
                    opt_to_string(&r.z),
                    r.p,
                    r.method
                )
            },
            out,
            args.format,
        )?;
    }
    Ok(())
}

fn workers_from(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("BET_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn run_screen(args: ScreenArgs) -> Result<(), CliError> {
    let (names, data) = betio::read_matrix_csv(&args.input)?;
    let config = ScreenConfig {
        depth: args.depth,
        alpha: args.alpha,
        method: match args.method {
            Method::Exact => PvalueMethod::Exact,
            Method::Normal => PvalueMethod::NormalApprox {
                continuity: args.continuity,
            },
        },
        ties: match args.ties {
            TieMode::Error => ScreenTies::Drop,
            TieMode::Random => ScreenTies::Random { seed: args.seed },
        },
        workers: workers_from(args.workers),
    };
    let report = screen_all_pairs(&names, &data, &config)?;
    for name in &report.dropped {
        eprintln!("dropped {name}: tied values");
    }
    println!(
        "screened {} pairs over {} variables; {} significant at alpha = {}",
        report.n_pairs,
        report.variables.len(),
        report.significant().count(),
        report.alpha
    );
    for pair in report.significant() {
        println!(
            "{} ~ {}: {} s = {} p_adjusted = {:.3e}",
            pair.var_a, pair.var_b, pair.interaction, pair.s, pair.p_adjusted
        );
    }
    if let Some(out) = &args.out {
        match args.format {
            Format::Csv => {
                let file = File::create(out)?;
                report.write_csv(BufWriter::new(file))?;
            }
            Format::Json => {
                let file = File::create(out)?;
                serde_json::to_writer_pretty(BufWriter::new(file), &report)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn generator_from(name: &str, level: u32) -> Result<DataGenerator, CliError> {
    match name.to_lowercase().as_str() {
        "null" => Ok(DataGenerator::Null),
        "bex" => Ok(DataGenerator::Bex(BexLevel::new(level)?)),
        other => {
            let scenario = Scenario::from_str(other)?;
            Ok(DataGenerator::Scenario(ScenarioSpec::new(scenario, level)?))
        }
    }
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let generator = generator_from(&args.scenario, args.level)?;
    let samples = generator.sample(args.n, args.seed);
    match &args.out {
        Some(path) => {
            let file = File::create(path)?;
            betio::write_xy_csv(BufWriter::new(file), &samples)?;
        }
        None => betio::write_xy_csv(std::io::stdout().lock(), &samples)?,
    }
    Ok(())
}

fn run_power(args: PowerArgs) -> Result<(), CliError> {
    let method = match args.method {
        PowerTest::Bet => PowerMethod::BetTwoStage { d_max: args.d_max },
        PowerTest::Chisq => PowerMethod::Chisq { d: args.d_max },
    };
    let levels: Vec<u32> = if args.scenario.to_lowercase() == "null" {
        vec![1] // level is unused for the null
    } else {
        args.levels.0.clone()
    };
    let workers = workers_from(args.workers);
    let run_all = || -> Result<Vec<PowerRow>, CliError> {
        levels
            .iter()
            .map(|&level| {
                let generator = generator_from(&args.scenario, level)?;
                Ok(power_curve(
                    &generator, method, args.n, args.alpha, args.reps, args.seed,
                )?)
            })
            .collect()
    };
    let rows = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Validation(format!("--workers: {e}")))?;
        pool.install(run_all)?
    } else {
        run_all()?
    };
    for row in &rows {
        println!(
            "{} {} level {}: power = {:.4} (se {:.4})",
            row.scenario, row.method, row.level, row.power, row.se
        );
    }
    if let Some(out) = &args.out {
        write_rows(
            &rows,
            PowerRow::CSV_HEADER,
            |r| r.csv_line(),
            out,
            args.format,
        )?;
    }
    Ok(())
}

fn run_plot(args: PlotArgs) -> Result<(), CliError> {
    let samples = betio::read_xy_csv(&args.input)?;
    let (copula, _) = make_copula(&samples, args.marginals, args.ties, args.seed)?;
    let (d1, d2) = args.depth;
    match &args.interaction {
        Some(label) => {
            let idx = InteractionIndex::from_label(d1, d2, label)?;
            emit_region_plot(&copula, &idx, &args.out)?;
            println!("wrote {}", args.out.display());
        }
        None => {
            std::fs::create_dir_all(&args.out)?;
            let mut written = 0;
            for m in 1..(1u32 << (d1 + d2)) {
                let idx = InteractionIndex::from_packed(d1, d2, m);
                let path = args.out.join(format!("region_{}.svg", idx.label()));
                emit_region_plot(&copula, &idx, &path)?;
                written += 1;
            }
            println!("wrote {written} region plots to {}", args.out.display());
        }
    }
    Ok(())
}
