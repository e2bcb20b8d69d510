//! Survival of atoms in an absorptive standing-wave grating kicked near the
//! quantum resonances of the delta-kicked rotor.
//!
//! Four engines compute the survival probability after N pulses:
//! an exact quantum Floquet evolution ([`quantum`]), a Monte Carlo
//! pseudoclassical map ([`pseudoclassical`]), a Gaussian moment recursion
//! ([`gaussian`]) and, at exact resonance, a closed form.

pub mod error;
pub mod gaussian;
pub mod grating;
pub mod harness;
pub mod params;
pub mod pseudoclassical;
pub mod quantum;
pub mod series;

pub use error::{Error, Result};
pub use gaussian::{run_recursion, survival_analytic_eps0, EllipseState};
pub use grating::{GratingModel, GratingProfile, KickDistribution};
pub use harness::{
    compare, emit_csv, run_single, run_sweep, ComparisonReport, Engine, GratingChoice, RunSettings,
    SweepSpec, SweepVar,
};
pub use params::{derive_dimensionless, DimensionlessConfig, PhysicalConfig};
pub use pseudoclassical::{init_ensemble, run_map, Ensemble, MonteCarlo, SurvivalEstimate};
pub use quantum::{QuantumEngine, QuantumRun, QuantumState};
pub use series::SurvivalSeries;
