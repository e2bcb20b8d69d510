//! Parameter sweeps across engines, CSV output and engine comparisons.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{run_analytic, run_recursion};
use crate::grating::{GratingModel, GratingProfile};
use crate::params::{derive_dimensionless, DimensionlessConfig, PhysicalConfig};
use crate::pseudoclassical::{MonteCarlo, DEFAULT_TRAJECTORIES};
use crate::quantum::QuantumEngine;

/// CSV header shared by every report.
pub const CSV_HEADER: &str = "sweep_var,value,engine,survival,std_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Quantum,
    MonteCarlo,
    Recursion,
    Analytic,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::Quantum,
        Engine::MonteCarlo,
        Engine::Recursion,
        Engine::Analytic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Quantum => "quantum",
            Engine::MonteCarlo => "mc",
            Engine::Recursion => "recursion",
            Engine::Analytic => "analytic",
        }
    }

    /// Parse a comma-separated list such as `q,mc,rec,ana`.
    pub fn parse_list(list: &str) -> Result<Vec<Engine>> {
        let mut engines = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let engine: Engine = item.parse()?;
            if !engines.contains(&engine) {
                engines.push(engine);
            }
        }
        if engines.is_empty() {
            return Err(Error::InvalidConfig("no engines selected".into()));
        }
        Ok(engines)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q" | "quantum" => Ok(Engine::Quantum),
            "mc" | "montecarlo" | "monte-carlo" => Ok(Engine::MonteCarlo),
            "rec" | "recursion" | "gaussian" => Ok(Engine::Recursion),
            "ana" | "analytic" => Ok(Engine::Analytic),
            other => Err(Error::InvalidConfig(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Epsilon,
    Beta,
    /// Detuning in units of Γ.
    Delta,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Epsilon => "epsilon",
            SweepVar::Beta => "beta",
            SweepVar::Delta => "delta",
        }
    }
}

/// Which grating amplitude the quantum and Monte Carlo engines use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GratingChoice {
    /// Harmonic on resonance, exact otherwise.
    #[default]
    Auto,
    Harmonic,
    Exact,
}

impl GratingChoice {
    pub fn model_for(self, phys: &PhysicalConfig) -> GratingModel {
        match self {
            GratingChoice::Auto if phys.is_resonant() => GratingModel::Harmonic,
            GratingChoice::Auto | GratingChoice::Exact => GratingModel::Exact,
            GratingChoice::Harmonic => GratingModel::Harmonic,
        }
    }
}

/// Everything held fixed during a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Laboratory parameters; `kicks` and `ell` are taken from here.
    pub phys: PhysicalConfig,
    pub beta: f64,
    /// Overrides the ε implied by `phys.period_offset`.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub trajectories: usize,
    pub delta_j: bool,
    pub grating: GratingChoice,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            phys: PhysicalConfig::rubidium85(),
            beta: 0.0,
            epsilon: None,
            seed: 0,
            trajectories: DEFAULT_TRAJECTORIES,
            delta_j: true,
            grating: GratingChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub engines: Vec<Engine>,
    pub variable: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Whether `stop` itself is the last point.
    pub include_stop: bool,
    pub settings: RunSettings,
}

impl SweepSpec {
    /// ε from −0.2 to 0.2 in 81 points.
    pub fn epsilon_default(engines: Vec<Engine>, settings: RunSettings) -> Self {
        Self {
            engines,
            variable: SweepVar::Epsilon,
            start: -0.2,
            stop: 0.2,
            points: 81,
            include_stop: true,
            settings,
        }
    }

    /// β over `[0, 1)` in 101 points.
    pub fn beta_default(engines: Vec<Engine>, settings: RunSettings) -> Self {
        Self {
            engines,
            variable: SweepVar::Beta,
            start: 0.0,
            stop: 1.0,
            points: 101,
            include_stop: false,
            settings,
        }
    }

    /// Δ/Γ from −2 to 2 in 41 points.
    pub fn delta_default(engines: Vec<Engine>, settings: RunSettings) -> Self {
        Self {
            engines,
            variable: SweepVar::Delta,
            start: -2.0,
            stop: 2.0,
            points: 41,
            include_stop: true,
            settings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidConfig(
                "a sweep needs at least 2 points".into(),
            ));
        }
        if self.start.is_nan() || self.stop.is_nan() || self.start >= self.stop {
            return Err(Error::InvalidConfig(format!(
                "sweep start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        if self.engines.is_empty() {
            return Err(Error::InvalidConfig("no engines selected".into()));
        }
        if self.settings.trajectories == 0 && self.engines.contains(&Engine::MonteCarlo) {
            return Err(Error::InvalidConfig(
                "Monte Carlo needs at least one trajectory".into(),
            ));
        }
        self.settings.phys.validate()
    }

    /// Sweep values in increasing order.
    pub fn values(&self) -> Vec<f64> {
        let intervals = if self.include_stop {
            self.points - 1
        } else {
            self.points
        };
        let n = intervals as f64;
        (0..self.points)
            .map(|i| {
                let i = i as f64;
                (self.start * (n - i) + self.stop * i) / n
            })
            .collect()
    }
}

/// One engine's answer at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value { survival: f64, std_error: f64 },
    Unsupported(String),
}

impl Cell {
    pub fn survival(&self) -> Option<f64> {
        match self {
            Cell::Value { survival, .. } => Some(*survival),
            Cell::Unsupported(_) => None,
        }
    }

    pub fn std_error(&self) -> Option<f64> {
        match self {
            Cell::Value { std_error, .. } => Some(*std_error),
            Cell::Unsupported(_) => None,
        }
    }
}

/// Deviation statistics for one pair of engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDeviation {
    pub a: Engine,
    pub b: Engine,
    pub max_abs: f64,
    pub rms: f64,
    pub points: usize,
}

/// Survivals after the last pulse for every engine at every sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub engines: Vec<Engine>,
    /// `cells[point][engine]`, aligned with `values` and `engines`.
    pub cells: Vec<Vec<Cell>>,
}

impl ComparisonReport {
    pub fn cell(&self, point: usize, engine: Engine) -> Option<&Cell> {
        let idx = self.engines.iter().position(|&e| e == engine)?;
        self.cells.get(point).map(|row| &row[idx])
    }

    /// Survival column for one engine, `None` where unsupported.
    pub fn column(&self, engine: Engine) -> Vec<Option<f64>> {
        (0..self.values.len())
            .map(|p| self.cell(p, engine).and_then(Cell::survival))
            .collect()
    }

    /// Deviations for every pair of engines with shared support.
    pub fn pair_deviations(&self) -> Vec<PairDeviation> {
        let mut out = Vec::new();
        for (i, &a) in self.engines.iter().enumerate() {
            for &b in &self.engines[i + 1..] {
                if let Ok((max_abs, rms, points)) = deviation(self, a, b, |_| true) {
                    out.push(PairDeviation {
                        a,
                        b,
                        max_abs,
                        rms,
                        points,
                    });
                }
            }
        }
        out
    }
}

fn deviation(
    report: &ComparisonReport,
    a: Engine,
    b: Engine,
    keep: impl Fn(f64) -> bool,
) -> Result<(f64, f64, usize)> {
    for e in [a, b] {
        if !report.engines.contains(&e) {
            return Err(Error::Comparison(format!(
                "engine {e} is not in the report"
            )));
        }
    }
    let (ca, cb) = (report.column(a), report.column(b));
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0;
    let mut points = 0;
    for ((&value, sa), sb) in report.values.iter().zip(&ca).zip(&cb) {
        if let (Some(sa), Some(sb), true) = (sa, sb, keep(value)) {
            let d = (sa - sb).abs();
            max_abs = max_abs.max(d);
            sum_sq += d * d;
            points += 1;
        }
    }
    if points == 0 {
        return Err(Error::Comparison(format!(
            "{a} and {b} share no supported points"
        )));
    }
    Ok((max_abs, (sum_sq / points as f64).sqrt(), points))
}

/// Max and RMS of `|S_a − S_b|` over the points where both are defined.
pub fn compare(report: &ComparisonReport, pair: (Engine, Engine)) -> Result<(f64, f64)> {
    compare_where(report, pair, |_| true)
}

/// As [`compare`], restricted to sweep values accepted by `keep`.
pub fn compare_where(
    report: &ComparisonReport,
    pair: (Engine, Engine),
    keep: impl Fn(f64) -> bool,
) -> Result<(f64, f64)> {
    deviation(report, pair.0, pair.1, keep).map(|(max_abs, rms, _)| (max_abs, rms))
}

/// Per-point inputs shared by all engines.
struct PointModels<'a> {
    dcfg: DimensionlessConfig,
    quantum: Option<&'a Result<QuantumEngine>>,
}

fn build_models(
    phys: &PhysicalConfig,
    settings: &RunSettings,
    engines: &[Engine],
) -> Option<Result<QuantumEngine>> {
    let needs_profile = engines
        .iter()
        .any(|e| matches!(e, Engine::Quantum | Engine::MonteCarlo));
    needs_profile.then(|| QuantumEngine::new(*phys, settings.grating.model_for(phys)))
}

fn evaluate(engine: Engine, models: &PointModels, settings: &RunSettings) -> Result<Cell> {
    let dcfg = &models.dcfg;
    let kicks = dcfg.kicks;
    let quantum = || match &models.quantum {
        Some(Ok(q)) => Ok(q),
        Some(Err(e)) => Err(e.clone()),
        None => unreachable!("profile is built whenever quantum or mc is selected"),
    };
    let series = match engine {
        Engine::Quantum => quantum()?.run(dcfg)?.series,
        Engine::MonteCarlo => {
            let profile = quantum()?.base_profile()?;
            MonteCarlo {
                trajectories: settings.trajectories,
                seed: settings.seed,
                j0: 0.0,
                delta_j: settings.delta_j,
            }
            .run(profile, dcfg, kicks)?
        }
        Engine::Recursion => run_recursion(dcfg, kicks)?,
        Engine::Analytic => run_analytic(dcfg, kicks)?,
    };
    Ok(Cell::Value {
        survival: series.final_survival(),
        std_error: series.final_std_error(),
    })
}

fn evaluate_row(
    engines: &[Engine],
    models: &PointModels,
    settings: &RunSettings,
) -> Result<Vec<Cell>> {
    engines
        .iter()
        .map(|&engine| match evaluate(engine, models, settings) {
            Ok(cell) => Ok(cell),
            Err(err @ (Error::Unsupported(_) | Error::Aliasing { .. })) => {
                log::info!("{engine} unsupported at this point: {err}");
                Ok(Cell::Unsupported(err.to_string()))
            }
            Err(err) => Err(err),
        })
        .collect()
}

fn point_dcfg(
    phys: &PhysicalConfig,
    settings: &RunSettings,
    beta: f64,
) -> Result<DimensionlessConfig> {
    let dcfg = derive_dimensionless(phys, beta)?;
    Ok(match settings.epsilon {
        Some(eps) => dcfg.with_epsilon(eps),
        None => dcfg,
    })
}

/// Evaluate every selected engine at every sweep point. Points run in
/// parallel; rows come back in sweep order.
pub fn run_sweep(spec: &SweepSpec) -> Result<ComparisonReport> {
    spec.validate()?;
    let settings = &spec.settings;
    let values = spec.values();

    // ε and β sweeps share one set of grating profiles.
    let shared = match spec.variable {
        SweepVar::Delta => None,
        _ => build_models(&settings.phys, settings, &spec.engines),
    };

    let cells = values
        .par_iter()
        .map(|&value| match spec.variable {
            SweepVar::Epsilon => {
                let dcfg = point_dcfg(&settings.phys, settings, settings.beta)?.with_epsilon(value);
                evaluate_row(
                    &spec.engines,
                    &PointModels {
                        dcfg,
                        quantum: shared.as_ref(),
                    },
                    settings,
                )
            }
            SweepVar::Beta => {
                let dcfg = point_dcfg(&settings.phys, settings, value)?;
                evaluate_row(
                    &spec.engines,
                    &PointModels {
                        dcfg,
                        quantum: shared.as_ref(),
                    },
                    settings,
                )
            }
            SweepVar::Delta => {
                let phys = PhysicalConfig {
                    detuning: value * settings.phys.gamma,
                    ..settings.phys
                };
                let dcfg = point_dcfg(&phys, settings, settings.beta)?;
                let local = build_models(&phys, settings, &spec.engines);
                evaluate_row(
                    &spec.engines,
                    &PointModels {
                        dcfg,
                        quantum: local.as_ref(),
                    },
                    settings,
                )
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        variable: spec.variable,
        values,
        engines: spec.engines.clone(),
        cells,
    })
}

/// Evaluate the engines at the single point described by `settings`.
pub fn run_single(engines: &[Engine], settings: &RunSettings) -> Result<ComparisonReport> {
    if engines.is_empty() {
        return Err(Error::InvalidConfig("no engines selected".into()));
    }
    let dcfg = point_dcfg(&settings.phys, settings, settings.beta)?;
    let quantum = build_models(&settings.phys, settings, engines);
    let models = PointModels {
        dcfg,
        quantum: quantum.as_ref(),
    };
    let row = evaluate_row(engines, &models, settings)?;
    Ok(ComparisonReport {
        variable: SweepVar::Epsilon,
        values: vec![dcfg.epsilon],
        engines: engines.to_vec(),
        cells: vec![row],
    })
}

fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write the report as CSV, one row per (point, engine).
pub fn write_csv<W: Write>(report: &ComparisonReport, mut out: W) -> Result<()> {
    if report.values.is_empty() || report.engines.is_empty() {
        return Err(Error::InvalidConfig("cannot write an empty report".into()));
    }
    writeln!(out, "{CSV_HEADER}")?;
    let var = report.variable.name();
    for (value, row) in report.values.iter().zip(&report.cells) {
        for (engine, cell) in report.engines.iter().zip(row) {
            match cell {
                Cell::Value {
                    survival,
                    std_error,
                } => writeln!(
                    out,
                    "{var},{},{engine},{},{}",
                    format_value(*value),
                    format_value(*survival),
                    format_value(*std_error)
                )?,
                Cell::Unsupported(_) => writeln!(
                    out,
                    "{var},{},{engine},unsupported,unsupported",
                    format_value(*value)
                )?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Write the report as CSV to `path`.
pub fn emit_csv(report: &ComparisonReport, path: &Path) -> Result<()> {
    write_csv(report, BufWriter::new(File::create(path)?))
}

/// CSV header for [`write_grating_csv`].
pub const GRATING_CSV_HEADER: &str =
    "theta,reA,imG_unused,amplitude,phase_unwrapped,mask,phase_gradient";

/// One row per grid point with the amplitude `A`, unwrapped phase `Θ`, mask
/// `A²` and `Θ'`. The `imG_unused` column is always zero.
pub fn write_grating_csv<W: Write>(profile: &GratingProfile, mut out: W) -> Result<()> {
    writeln!(out, "{GRATING_CSV_HEADER}")?;
    for j in 0..profile.grid_size() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_value(profile.theta_grid()[j]),
            format_value(profile.amplitude()[j]),
            format_value(0.0),
            format_value(profile.amplitude()[j]),
            format_value(profile.phase_unwrapped()[j]),
            format_value(profile.mask()[j]),
            format_value(profile.phase_gradient()[j]),
        )?;
    }
    out.flush()?;
    Ok(())
}
