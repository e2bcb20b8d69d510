//! Laboratory-frame parameters and their kicked-rotor (dimensionless) form.
//!
//! Scaled variables: `θ = 2 k_l x`, `J = ε p / (2ħ k_l)`, and the detuning of
//! the pulse period from `ℓ T_T / 2` enters only through
//! `ε = 4 ħ k_l² ΔT / M`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a ⁸⁵Rb atom (kg).
pub const RB85_MASS: f64 = 84.911_789_738 * ATOMIC_MASS_UNIT;

/// Above this value of `(4ħk_l²/M)·t` the pulse is no longer short compared
/// to the recoil time scale and the instantaneous-kick picture degrades.
pub const RAMAN_NATH_LIMIT: f64 = 0.1;

/// Default half-Talbot multiple: the full Talbot time.
pub const DEFAULT_ELL: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Atomic mass (kg).
    pub mass: f64,
    /// Laser wavenumber (rad/m).
    pub k_l: f64,
    /// Rabi frequency Ω (rad/s).
    pub omega_rabi: f64,
    /// Detuning Δ = ω − ω_eg (rad/s).
    pub detuning: f64,
    /// Decay rate Γ of the upper state (rad/s).
    pub gamma: f64,
    /// Pulse duration t (s).
    pub pulse_duration: f64,
    /// Deviation ΔT of the pulse period from ℓ T_T / 2 (s).
    pub period_offset: f64,
    /// Multiple ℓ of the half Talbot time.
    pub ell: u32,
    /// Number of pulses N.
    pub kicks: usize,
}

impl PhysicalConfig {
    /// ⁸⁵Rb on the 780 nm line: Γ = 2π·6 MHz, Ω = 2Γ, t = 500 ns, resonant
    /// light, pulses exactly at the Talbot time and N = 7.
    pub fn rubidium85() -> Self {
        let gamma = 2.0 * PI * 6.0e6;
        Self {
            mass: RB85_MASS,
            k_l: 2.0 * PI / 780.0e-9,
            omega_rabi: 2.0 * gamma,
            detuning: 0.0,
            gamma,
            pulse_duration: 500.0e-9,
            period_offset: 0.0,
            ell: DEFAULT_ELL,
            kicks: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("k_l", self.k_l),
            ("omega_rabi", self.omega_rabi),
            ("gamma", self.gamma),
            ("pulse_duration", self.pulse_duration),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("detuning", self.detuning),
            ("period_offset", self.period_offset),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite, got {value}"
                )));
            }
        }
        if self.ell < 1 {
            return Err(Error::InvalidConfig("ell must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        self.detuning == 0.0
    }

    /// `4ħk_l²/M`, the factor converting ΔT (s) into ε.
    pub fn epsilon_per_second(&self) -> f64 {
        4.0 * HBAR * self.k_l * self.k_l / self.mass
    }

    /// Period offset ΔT that produces the given ε.
    pub fn period_offset_for(&self, epsilon: f64) -> f64 {
        epsilon / self.epsilon_per_second()
    }

    /// Pulse duration in units of the recoil time; small values mean the
    /// atoms barely move during a pulse.
    pub fn raman_nath_parameter(&self) -> f64 {
        self.epsilon_per_second() * self.pulse_duration
    }

    /// Width σ_θ of the resonant Gaussian mask, `σ_θ² = 4Γ/(Ω²t)`.
    pub fn sigma_theta(&self) -> f64 {
        (4.0 * self.gamma / (self.omega_rabi * self.omega_rabi * self.pulse_duration)).sqrt()
    }

    /// Parse a flat `key = value` file (SI units, `#` comments) on top of
    /// [`PhysicalConfig::rubidium85`].
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::rubidium85();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|message| Error::Parse {
                    line: idx + 1,
                    message,
                })?;
        }
        Ok(cfg)
    }

    /// Set one parameter by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn float(key: &str, value: &str) -> Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|e| format!("{key}: cannot parse `{value}` as a number ({e})"))
        }
        match key {
            "mass" => self.mass = float(key, value)?,
            "k_l" => self.k_l = float(key, value)?,
            "omega_rabi" => self.omega_rabi = float(key, value)?,
            "detuning" => self.detuning = float(key, value)?,
            "gamma" => self.gamma = float(key, value)?,
            "pulse_duration" => self.pulse_duration = float(key, value)?,
            "period_offset" => self.period_offset = float(key, value)?,
            "ell" => {
                self.ell = value
                    .parse()
                    .map_err(|e| format!("ell: cannot parse `{value}` as an integer ({e})"))?
            }
            "kicks" => {
                self.kicks = value
                    .parse()
                    .map_err(|e| format!("kicks: cannot parse `{value}` as an integer ({e})"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self::rubidium85()
    }
}

/// Kicked-rotor parameters consumed by every engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessConfig {
    pub epsilon: f64,
    pub ell: u32,
    /// Quasimomentum, in `[0, 1)`.
    pub beta: f64,
    pub sigma_theta: f64,
    /// Standard deviation of the resonant diffraction kick, `|ε| / (√2 σ_θ)`.
    pub sigma_j: f64,
    pub kicks: usize,
    /// Whether the light is exactly on resonance (Δ = 0).
    pub resonant: bool,
}

impl DimensionlessConfig {
    /// Replace ε, keeping σ_J consistent with it.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.sigma_j = sigma_j_for(epsilon, self.sigma_theta);
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        self.beta = beta;
        Ok(self)
    }

    pub fn with_kicks(mut self, kicks: usize) -> Self {
        self.kicks = kicks;
        self
    }

    /// Free-flight drift per period, `Δφ = πℓ(1 + 2β)` wrapped to `(−π, π]`.
    pub fn drift(&self) -> f64 {
        wrapped_drift(self.ell, self.beta)
    }
}

/// `πℓ(1 + 2β)` reduced to `(−π, π]`.
///
/// The reduction is carried out on `ℓ(1 + 2β)` modulo 2 before multiplying
/// by π, so β and β + 1/ℓ give bit-identical results whenever both are
/// exactly representable.
pub fn wrapped_drift(ell: u32, beta: f64) -> f64 {
    let mut turns = (f64::from(ell) * (1.0 + 2.0 * beta)).rem_euclid(2.0);
    if turns > 1.0 {
        turns -= 2.0;
    }
    PI * turns
}

fn sigma_j_for(epsilon: f64, sigma_theta: f64) -> f64 {
    epsilon.abs() / (std::f64::consts::SQRT_2 * sigma_theta)
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "beta must lie in [0, 1), got {beta}"
        )))
    }
}

/// Convert laboratory parameters into ε, σ_θ and σ_J at quasimomentum β.
pub fn derive_dimensionless(phys: &PhysicalConfig, beta: f64) -> Result<DimensionlessConfig> {
    phys.validate()?;
    check_beta(beta)?;

    let rn = phys.raman_nath_parameter();
    if rn > RAMAN_NATH_LIMIT {
        log::warn!(
            "pulse duration is {rn:.3} recoil times (limit {RAMAN_NATH_LIMIT}); the instantaneous-kick model may be inaccurate"
        );
    }

    let epsilon = phys.epsilon_per_second() * phys.period_offset;
    let sigma_theta = phys.sigma_theta();
    // Same quantity as |ε|/(√2 σ_θ), written in laboratory units.
    let sigma_j =
        (phys.pulse_duration / (8.0 * phys.gamma)).sqrt() * phys.omega_rabi * epsilon.abs();

    for (name, value) in [
        ("epsilon", epsilon),
        ("sigma_theta", sigma_theta),
        ("sigma_j", sigma_j),
    ] {
        if !value.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "{name} is not finite ({value})"
            )));
        }
    }
    if sigma_theta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sigma_theta underflowed to {sigma_theta}"
        )));
    }

    Ok(DimensionlessConfig {
        epsilon,
        ell: phys.ell,
        beta,
        sigma_theta,
        sigma_j,
        kicks: phys.kicks,
        resonant: phys.is_resonant(),
    })
}

/// Talbot time `T_T = πM/(ħk_l²)`, for which the free phase over `T_T/2`
/// is `exp(−iπn²)` on the momentum ladder.
pub fn talbot_time(phys: &PhysicalConfig) -> Result<f64> {
    phys.validate()?;
    Ok(PI * phys.mass / (HBAR * phys.k_l * phys.k_l))
}
