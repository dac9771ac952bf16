//! Command implementations behind the `detbb84` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use detbb84::adversary::AttackStrategy;
use detbb84::config::{parse_attack_kind, AppConfig, ConfigError};
use detbb84::protocol::{run_session, write_transcript, Variant};
use detbb84::rates::{
    crossover_distance, distance_grid, optimized_ratio, sweep, write_curves, RateCurve, RateVariant,
};

#[derive(Debug, Parser)]
#[command(
    name = "detbb84",
    version,
    about = "Deterministic BB84 simulator and rate calculator"
)]
pub struct Cli {
    /// Configuration file (flat key=value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override `run.output_dir`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Extra `key=value` settings applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimized secure rates per pulse.
    Rates(RatesArgs),
    /// Run one protocol session and write its transcript.
    Simulate(SimulateArgs),
    /// Distance where the deterministic protocol stops beating BB84.
    Crossover(CrossoverArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Both,
    Bb84,
    Det,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Single distance in km.
    #[arg(long, conflicts_with = "sweep")]
    pub distance: Option<f64>,
    /// Distance range `lo:hi:step` in km.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantChoice,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// bb84, det_basic or det_practical (alias det).
    #[arg(long)]
    pub variant: Option<String>,
    /// Number of pulses W.
    #[arg(long)]
    pub pulses: Option<usize>,
    /// none, ir (intercept-resend) or delay (delay-for-basis).
    #[arg(long)]
    pub attack: Option<String>,
    /// Fraction of pulses attacked; defaults to 1 when --attack is given.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[arg(long, default_value_t = 0.5)]
    pub low: f64,
    #[arg(long, default_value_t = 20.0)]
    pub high: f64,
}

/// Failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration: exit 2.
    Usage(anyhow::Error),
    /// Anything else: exit 1.
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Internal(e) => e,
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

pub fn resolve_config(cli: &Cli) -> Result<AppConfig, ConfigError> {
    let mut text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    for item in &cli.overrides {
        text.push('\n');
        text.push_str(item);
    }
    let mut cfg = AppConfig::parse(&text)?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn prepare_output(cfg: &AppConfig) -> Result<&Path, Failure> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(internal)?;
    fs::write(dir.join("config.resolved"), cfg.to_text())
        .context("writing resolved config")
        .map_err(internal)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(internal)
}

/// Runs the parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = resolve_config(cli).map_err(usage)?;
    match &cli.command {
        Command::Rates(args) => cmd_rates(&cfg, args, out),
        Command::Simulate(args) => cmd_simulate(&cfg, args, out),
        Command::Crossover(args) => cmd_crossover(&cfg, args, out),
    }
}

fn parse_range(range: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        anyhow::bail!("sweep range must look like lo:hi:step, got `{range}`");
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number `{s}` in sweep range"))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    anyhow::ensure!(lo <= hi, "sweep range is empty: {lo} > {hi}");
    Ok(distance_grid(lo, hi, step)?)
}

fn cmd_rates(cfg: &AppConfig, args: &RatesArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let distances = match (args.distance, &args.sweep) {
        (Some(d), _) => {
            if !(d.is_finite() && d >= 0.0) {
                return Err(usage(anyhow::anyhow!("distance must be >= 0 km, got {d}")));
            }
            vec![d]
        }
        (None, Some(range)) => parse_range(range).map_err(usage)?,
        (None, None) => vec![2.0, 4.0, 8.0, 16.0],
    };
    let variants: &[RateVariant] = match args.variant {
        VariantChoice::Both => &[RateVariant::Det, RateVariant::Bb84],
        VariantChoice::Bb84 => &[RateVariant::Bb84],
        VariantChoice::Det => &[RateVariant::Det],
    };
    let params = cfg.rate_params();
    let curves: Vec<RateCurve> = variants
        .iter()
        .map(|&v| sweep(&params, &distances, v))
        .collect::<Result<_, _>>()
        .map_err(internal)?;

    let dir = prepare_output(cfg)?;
    let mut csv = create(&dir.join("rates.csv"))?;
    write_curves(&curves, &mut csv).map_err(internal)?;
    csv.flush().map_err(internal)?;

    let table = summary_table(&distances, &curves);
    fs::write(dir.join("rates_summary.csv"), &table).map_err(internal)?;
    out.write_all(table.as_bytes()).map_err(internal)?;
    for curve in &curves {
        if !curve.omitted.is_empty() {
            writeln!(
                out,
                "# {}: no secure rate at {:?} km",
                curve.variant, curve.omitted
            )
            .map_err(internal)?;
        }
    }
    Ok(())
}

/// One row per distance: μ_opt and rate per variant, and the ratio when both
/// variants are present.
fn summary_table(distances: &[f64], curves: &[RateCurve]) -> String {
    let mut header = vec!["distance_km".to_string()];
    for c in curves {
        header.push(format!("mu_opt_{}", c.variant));
        header.push(format!("rate_{}", c.variant));
    }
    let both = curves.len() == 2;
    if both {
        header.push("ratio".into());
    }
    let mut text = header.join(",") + "\n";
    for &d in distances {
        let mut row = vec![format!("{d}")];
        let mut rates = Vec::new();
        for c in curves {
            match c.points.iter().find(|p| p.distance_km == d) {
                Some(p) => {
                    row.push(format!("{:.5}", p.mu_opt));
                    row.push(format!("{:.4e}", p.rate));
                    rates.push(p.rate);
                }
                None => {
                    row.push(String::new());
                    row.push("0".into());
                    rates.push(0.0);
                }
            }
        }
        if both {
            row.push(if rates[1] > 0.0 {
                format!("{:.4}", rates[0] / rates[1])
            } else {
                String::new()
            });
        }
        text += &row.join(",");
        text.push('\n');
    }
    text
}

fn cmd_simulate(cfg: &AppConfig, args: &SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut session = cfg.session();
    if let Some(v) = &args.variant {
        session.variant = v
            .parse::<Variant>()
            .map_err(|e| usage(anyhow::anyhow!(e)))?;
    }
    if let Some(w) = args.pulses {
        session.pulses = Some(w);
    }
    let mut attack = cfg.attack;
    if let Some(a) = &args.attack {
        let kind = parse_attack_kind(a).map_err(|e| usage(anyhow::anyhow!(e)))?;
        attack = AttackStrategy {
            kind,
            fraction: 1.0,
            ..attack
        };
    }
    if let Some(f) = args.fraction {
        attack.fraction = f;
    }
    let seed = args.seed.unwrap_or(cfg.master_seed);

    let mut resolved = cfg.clone();
    resolved.session = session;
    resolved.attack = attack;
    resolved.master_seed = seed;
    resolved.validate().map_err(usage)?;

    let transcript = run_session(
        &resolved.session(),
        &resolved.fiber,
        &resolved.detector(),
        &resolved.timing(),
        &resolved.source,
        &resolved.attack,
        seed,
    )
    .map_err(usage)?;

    let dir = prepare_output(&resolved)?;
    let mut file = create(&dir.join("transcript.csv"))?;
    write_transcript(&transcript, &mut file).map_err(internal)?;
    let summary = transcript.summary();
    fs::write(dir.join("summary.txt"), &summary).map_err(internal)?;
    out.write_all(summary.as_bytes()).map_err(internal)?;
    Ok(())
}

fn cmd_crossover(
    cfg: &AppConfig,
    args: &CrossoverArgs,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if !(args.low >= 0.0 && args.low < args.high) {
        return Err(usage(anyhow::anyhow!(
            "bracket must satisfy 0 <= low < high, got {}..{}",
            args.low,
            args.high
        )));
    }
    let params = cfg.rate_params();
    let dir = prepare_output(cfg)?;

    let grid = distance_grid(args.low, args.high, 0.25).map_err(usage)?;
    let mut csv = create(&dir.join("crossover.csv"))?;
    writeln!(csv, "distance_km,ratio").map_err(internal)?;
    let mut ratios = Vec::with_capacity(grid.len());
    for &l in &grid {
        let r = optimized_ratio(&params, l).map_err(internal)?;
        ratios.push(r);
        let shown = if r.is_finite() {
            format!("{r:?}")
        } else {
            String::new()
        };
        writeln!(csv, "{l:?},{shown}").map_err(internal)?;
    }
    csv.flush().map_err(internal)?;

    match crossover_distance(&params, args.low, args.high) {
        Ok(x) => writeln!(out, "{x:.2} km"),
        Err(detbb84::Error::NoCrossover { .. }) => {
            if ratios.iter().all(|r| (r - 2.0).abs() < 1e-9) {
                writeln!(out, "no crossover (ratio constant 2)")
            } else {
                writeln!(out, "no crossover in [{}, {}] km", args.low, args.high)
            }
        }
        Err(e) => return Err(internal(e)),
    }
    .map_err(internal)
}
