//! Gaussian phase-space recursion for the resonant harmonic grating.
//!
//! After the first pulse the pseudoclassical density is a Gaussian ellipse
//! described by five numbers: survival `S`, mean momentum `⟨J⟩`, inverse axis
//! slope `α`, width `σ_H` along θ and axis intercept `φ`. A grating pulse
//! followed by one free flight maps an ellipse to another ellipse.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::params::{wrapped_drift, DimensionlessConfig};
use crate::series::SurvivalSeries;

/// Survivals below this are reported as exactly zero.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// Five-parameter Gaussian ellipse after `pulses_applied` pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseState {
    survival: f64,
    j_mean: f64,
    alpha: f64,
    sigma_h: f64,
    phi: f64,
    pulses_applied: usize,
    clamped: bool,
}

impl EllipseState {
    pub fn survival(&self) -> f64 {
        self.survival
    }

    pub fn j_mean(&self) -> f64 {
        self.j_mean
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    /// Axis intercept reduced to `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        self.phi.rem_euclid(TAU)
    }

    /// Axis intercept without reduction. Only differs from [`Self::phi`]
    /// once the ellipse has drifted a full period away from the node, where
    /// the survival is already negligible.
    pub fn phi_unreduced(&self) -> f64 {
        self.phi
    }

    pub fn pulses_applied(&self) -> usize {
        self.pulses_applied
    }

    /// True once the survival has underflowed and been set to zero.
    pub fn clamped(&self) -> bool {
        self.clamped
    }
}

fn require_resonant(dcfg: &DimensionlessConfig) -> Result<()> {
    if dcfg.resonant {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "the ellipse recursion needs a resonant (Δ = 0) grating".into(),
        ))
    }
}

/// Ellipse after the first pulse and free flight, starting from a plane
/// wave (uniform in θ, sharp momentum).
pub fn first_pulse(dcfg: &DimensionlessConfig) -> Result<EllipseState> {
    require_resonant(dcfg)?;
    let sigma = dcfg.sigma_theta;
    Ok(EllipseState {
        survival: sigma / (2.0 * PI.sqrt()),
        j_mean: 0.0,
        alpha: 1.0,
        sigma_h: sigma,
        phi: PI + dcfg.drift(),
        pulses_applied: 1,
        clamped: false,
    })
}

/// Apply one more grating pulse and free flight.
pub fn recurse(state: &EllipseState, dcfg: &DimensionlessConfig) -> Result<EllipseState> {
    require_resonant(dcfg)?;
    let st2 = dcfg.sigma_theta * dcfg.sigma_theta;
    let eps2 = dcfg.epsilon * dcfg.epsilon;
    let sh2 = state.sigma_h * state.sigma_h;
    let a = state.alpha;
    let phi = state.phi;
    let j = state.j_mean;

    let shear = a * a * eps2;
    let den = sh2 * sh2 + shear + sh2 * st2;
    let offset = phi + a * j - PI;
    let factor = (sh2 * st2 / den).sqrt() * (-sh2 * offset * offset / den).exp();
    let mut survival = state.survival * factor;
    let mut clamped = state.clamped;
    if survival < UNDERFLOW_THRESHOLD {
        survival = 0.0;
        clamped = true;
    }

    let sh2_next =
        st2 * (sh2 * st2 + sh2 * sh2 + shear) / (2.0 * sh2 * st2 + st2 * st2 + sh2 * sh2 + shear);
    let phi_a = sh2_next * ((phi * (st2 + sh2) + j * a * sh2) / den + PI / st2);
    let alpha_a = a * sh2_next * st2 / den;
    let j_next = eps2 * alpha_a * phi_a / (sh2_next * sh2_next)
        + sh2 * st2 * (sh2 * j - eps2 * a * phi / sh2) / (sh2_next * den);

    Ok(EllipseState {
        survival,
        j_mean: j_next,
        alpha: alpha_a + 1.0,
        sigma_h: sh2_next.sqrt(),
        phi: phi_a + dcfg.drift(),
        pulses_applied: state.pulses_applied + 1,
        clamped,
    })
}

/// Survival after `kicks` pulses, starting with `S₀ = 1`.
pub fn run_recursion(dcfg: &DimensionlessConfig, kicks: usize) -> Result<SurvivalSeries> {
    require_resonant(dcfg)?;
    let mut series = SurvivalSeries::new(1.0);
    if kicks == 0 {
        return Ok(series);
    }
    let mut state = first_pulse(dcfg)?;
    series.push(state.survival, 0.0);
    for _ in 1..kicks {
        state = recurse(&state, dcfg)?;
        series.push(state.survival, 0.0);
    }
    if state.clamped {
        log::debug!(
            "recursion survival underflowed at ε = {}, β = {}",
            dcfg.epsilon,
            dcfg.beta
        );
    }
    Ok(series)
}

/// Closed-form survival at ε = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSurvival {
    pub value: f64,
    /// Set when the exact value is below [`UNDERFLOW_THRESHOLD`].
    pub clamped: bool,
}

/// `S_N = σ_θ/(2√(πN)) · exp(−Δφ²(N−1)N(N+1)/(12σ_θ²))` with the wrapped
/// drift `Δφ`.
pub fn survival_analytic_eps0(
    n: usize,
    beta: f64,
    ell: u32,
    sigma_theta: f64,
) -> Result<AnalyticSurvival> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "closed form needs at least one pulse".into(),
        ));
    }
    if !(sigma_theta.is_finite() && sigma_theta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "σ_θ must be positive, got {sigma_theta}"
        )));
    }
    let drift = wrapped_drift(ell, beta);
    let nf = n as f64;
    let log_s = (sigma_theta / (2.0 * (PI * nf).sqrt())).ln()
        - drift * drift * (nf - 1.0) * nf * (nf + 1.0) / (12.0 * sigma_theta * sigma_theta);
    if log_s < UNDERFLOW_THRESHOLD.ln() {
        Ok(AnalyticSurvival {
            value: 0.0,
            clamped: true,
        })
    } else {
        Ok(AnalyticSurvival {
            value: log_s.exp(),
            clamped: false,
        })
    }
}

/// Closed-form survival series `[1, S₁, …, S_kicks]` at ε = 0.
pub fn run_analytic(dcfg: &DimensionlessConfig, kicks: usize) -> Result<SurvivalSeries> {
    require_resonant(dcfg)?;
    if dcfg.epsilon != 0.0 {
        return Err(Error::Unsupported(
            "the closed form holds only at ε = 0".into(),
        ));
    }
    let mut series = SurvivalSeries::new(1.0);
    for n in 1..=kicks {
        let s = survival_analytic_eps0(n, dcfg.beta, dcfg.ell, dcfg.sigma_theta)?;
        series.push(s.value, 0.0);
    }
    Ok(series)
}
