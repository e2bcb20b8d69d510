use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use aokr_core::harness::{
    compare, run_single, run_sweep, write_csv, write_grating_csv, ComparisonReport, Engine,
    GratingChoice, RunSettings, SweepSpec,
};
use aokr_core::PhysicalConfig;

/// Survival of atoms in a pulsed absorptive standing-wave grating.
#[derive(Parser, Debug)]
#[command(name = "aokr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Survival at one parameter point for each engine.
    Single(CommonArgs),
    /// Sweep ε (default −0.2 to 0.2, 81 points).
    SweepEpsilon(SweepArgs),
    /// Sweep β over [0, 1) (default 101 points).
    SweepBeta(SweepArgs),
    /// Sweep the detuning Δ/Γ (default −2 to 2, 41 points).
    SweepDelta(SweepArgs),
    /// Run a sweep and report deviations between each pair of engines.
    Compare(CompareArgs),
    /// Write the sampled grating (amplitude, phase, mask, force) as CSV.
    DumpGrating(DumpArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Config file of `key = value` lines in SI units.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Engines to run: any of q, mc, rec, ana.
    #[arg(long, default_value = "q,mc,rec,ana")]
    engines: String,

    #[arg(long)]
    kicks: Option<usize>,

    #[arg(long)]
    ell: Option<u32>,

    /// Quasimomentum in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    beta: f64,

    /// Detuning in units of Γ.
    #[arg(long, conflicts_with = "detuning", allow_hyphen_values = true)]
    delta: Option<f64>,

    /// Detuning in rad/s.
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<f64>,

    /// Dimensionless ε, overriding the period offset.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,

    /// Offset of the pulse period from half the Talbot time, in s.
    #[arg(long, allow_hyphen_values = true)]
    period_offset: Option<f64>,

    /// Atomic mass in kg.
    #[arg(long)]
    mass: Option<f64>,

    /// Laser wavenumber in 1/m.
    #[arg(long)]
    k_l: Option<f64>,

    /// Rabi frequency in rad/s.
    #[arg(long)]
    omega_rabi: Option<f64>,

    /// Excited-state decay rate in 1/s.
    #[arg(long)]
    gamma: Option<f64>,

    /// Pulse duration in s.
    #[arg(long)]
    pulse_duration: Option<f64>,

    /// Monte Carlo ensemble size.
    #[arg(long, default_value_t = 200_000)]
    trajectories: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Drop the random diffraction kick from the Monte Carlo map.
    #[arg(long)]
    no_delta_j: bool,

    /// Use the harmonic grating approximation.
    #[arg(long, conflicts_with = "exact")]
    harmonic: bool,

    /// Use the exact grating amplitude even on resonance.
    #[arg(long)]
    exact: bool,

    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,

    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct RangeArgs {
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,

    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    range: RangeArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SweepKind {
    Epsilon,
    Beta,
    Delta,
}

#[derive(Args, Debug, Clone)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[command(flatten)]
    range: RangeArgs,

    /// Variable to sweep.
    #[arg(long, value_enum, default_value = "epsilon")]
    sweep: SweepKind,

    /// Fail if any pair's maximum deviation exceeds this.
    #[arg(long)]
    max_abs: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct DumpArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Number of θ samples.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
}

impl CommonArgs {
    fn physical(&self) -> Result<PhysicalConfig> {
        let mut phys = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                PhysicalConfig::from_config_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => PhysicalConfig::rubidium85(),
        };
        let overrides = [
            ("mass", self.mass),
            ("k_l", self.k_l),
            ("omega_rabi", self.omega_rabi),
            ("gamma", self.gamma),
            ("pulse_duration", self.pulse_duration),
            ("period_offset", self.period_offset),
            ("detuning", self.detuning),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                phys.set(key, &v.to_string()).map_err(anyhow::Error::msg)?;
            }
        }
        if let Some(delta) = self.delta {
            phys.detuning = delta * phys.gamma;
        }
        if let Some(kicks) = self.kicks {
            phys.kicks = kicks;
        }
        if let Some(ell) = self.ell {
            phys.ell = ell;
        }
        phys.validate()?;
        Ok(phys)
    }

    fn settings(&self) -> Result<RunSettings> {
        Ok(RunSettings {
            phys: self.physical()?,
            beta: self.beta,
            epsilon: self.epsilon,
            seed: self.seed,
            trajectories: self.trajectories,
            delta_j: !self.no_delta_j,
            grating: if self.harmonic {
                GratingChoice::Harmonic
            } else if self.exact {
                GratingChoice::Exact
            } else {
                GratingChoice::Auto
            },
        })
    }

    fn engines(&self) -> Result<Vec<Engine>> {
        Ok(Engine::parse_list(&self.engines)?)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn sweep_spec(kind: SweepKind, common: &CommonArgs, range: &RangeArgs) -> Result<SweepSpec> {
    let engines = common.engines()?;
    let settings = common.settings()?;
    let mut spec = match kind {
        SweepKind::Epsilon => SweepSpec::epsilon_default(engines, settings),
        SweepKind::Beta => SweepSpec::beta_default(engines, settings),
        SweepKind::Delta => SweepSpec::delta_default(engines, settings),
    };
    if let Some(start) = range.start {
        spec.start = start;
    }
    if let Some(stop) = range.stop {
        spec.stop = stop;
    }
    if let Some(points) = range.points {
        spec.points = points;
    }
    spec.validate()?;
    Ok(spec)
}

fn print_deviations(report: &ComparisonReport, out: &mut dyn Write) -> Result<f64> {
    let var = report.variable.name();
    let mut worst = 0.0f64;
    writeln!(out, "pair,sweep_var,points,max_abs,rms")?;
    for d in report.pair_deviations() {
        let (max_abs, rms) = compare(report, (d.a, d.b))?;
        writeln!(
            out,
            "{}-{},{var},{},{max_abs:.6e},{rms:.6e}",
            d.a, d.b, d.points
        )?;
        worst = worst.max(max_abs);
    }
    Ok(worst)
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Single(c) | Command::DumpGrating(DumpArgs { common: c, .. }) => c,
        Command::SweepEpsilon(s) | Command::SweepBeta(s) | Command::SweepDelta(s) => &s.common,
        Command::Compare(c) => &c.common,
    };
    if let Some(workers) = common.workers {
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("starting worker pool")?;
    }

    match &cli.command {
        Command::Single(args) => {
            let report = run_single(&args.engines()?, &args.settings()?)?;
            write_csv(&report, args.output()?)?;
        }
        Command::SweepEpsilon(args) | Command::SweepBeta(args) | Command::SweepDelta(args) => {
            let kind = match cli.command {
                Command::SweepEpsilon(_) => SweepKind::Epsilon,
                Command::SweepBeta(_) => SweepKind::Beta,
                _ => SweepKind::Delta,
            };
            let report = run_sweep(&sweep_spec(kind, &args.common, &args.range)?)?;
            write_csv(&report, args.common.output()?)?;
        }
        Command::Compare(args) => {
            let spec = sweep_spec(args.sweep, &args.common, &args.range)?;
            if spec.engines.len() < 2 {
                bail!("compare needs at least two engines");
            }
            let report = run_sweep(&spec)?;
            if args.common.out.is_some() {
                write_csv(&report, args.common.output()?)?;
            }
            if report.pair_deviations().is_empty() {
                bail!("no pair of engines shares a supported sweep point");
            }
            let worst = print_deviations(&report, &mut io::stdout().lock())?;
            if let Some(limit) = args.max_abs {
                if worst > limit {
                    bail!("maximum deviation {worst:.3e} exceeds {limit:.3e}");
                }
            }
        }
        Command::DumpGrating(args) => {
            let phys = args.common.physical()?;
            let settings = args.common.settings()?;
            let profile = settings.grating.model_for(&phys).build(&phys, args.grid)?;
            write_grating_csv(&profile, args.common.output()?)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
