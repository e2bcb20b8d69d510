//! Shared fixtures for the engine benchmarks.

use aokr_core::{derive_dimensionless, DimensionlessConfig, PhysicalConfig};

/// Rubidium defaults on resonance, or detuned by `delta` linewidths.
pub fn physical(delta: f64) -> PhysicalConfig {
    let phys = PhysicalConfig::rubidium85();
    PhysicalConfig {
        detuning: delta * phys.gamma,
        ..phys
    }
}

/// Dimensionless parameters at the given ε and β = 0.
pub fn dimensionless(phys: &PhysicalConfig, epsilon: f64) -> DimensionlessConfig {
    derive_dimensionless(phys, 0.0)
        .expect("default parameters are valid")
        .with_epsilon(epsilon)
}
