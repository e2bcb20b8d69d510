//! Single-pulse grating operator `G = A e^{iΘ}` of a near-resonant
//! absorptive standing wave, sampled on the scaled angle `θ = 2 k_l x`.
//!
//! Two constructions are provided: the exact two-level ground-state
//! amplitude for any detuning ([`build_profile`]) and the resonant
//! harmonic (Gaussian) approximation around the standing-wave nodes
//! ([`harmonic_profile`]). Both carry the survival mask `s = A²`, the
//! phase gradient that acts as a force on classical trajectories, and the
//! distribution of random diffraction kicks.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::params::{PhysicalConfig, HBAR};

/// Eigenvalues closer than this (relative to their size) are treated as
/// degenerate and the propagator is evaluated in its confluent form.
const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Smallest accepted sampling grid.
pub const MIN_GRID_SIZE: usize = 64;

/// Minimum number of samples within one mask width of the node.
const MIN_POINTS_PER_WIDTH: usize = 8;

/// Half-width of the tabulated kick distribution, in standard deviations.
const KICK_TABLE_SPAN: f64 = 8.0;

/// Number of bins of the tabulated kick distribution.
pub const KICK_TABLE_BINS: usize = 8192;

/// Complex eigenvalues (J) of the pulse Hamiltonian at one position.
///
/// `lambda2` is the long-lived branch: `|Im λ₂| ≤ |Im λ₁|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// Mean and half-splitting (rad/s) of the two eigenfrequencies at a
/// position, with the branch of the square root fixed so that `m + d` is
/// the long-lived eigenvalue.
struct Splitting {
    mean: Complex64,
    half_gap: Complex64,
    coupling_sq: Complex64,
}

fn splitting(x: f64, cfg: &PhysicalConfig) -> Splitting {
    let a = Complex64::new(cfg.detuning, cfg.gamma / 2.0);
    let c = (cfg.k_l * x).cos();
    let coupling_sq = Complex64::from(cfg.omega_rabi * cfg.omega_rabi * c * c / 4.0);
    let mut half_gap = 0.5 * (a * a + 4.0 * coupling_sq).sqrt();
    if half_gap.im < 0.0 || (half_gap.im == 0.0 && half_gap.re < 0.0) {
        half_gap = -half_gap;
    }
    Splitting {
        mean: -0.5 * a,
        half_gap,
        coupling_sq,
    }
}

/// Eigenvalues λ₁, λ₂ of the two-level pulse Hamiltonian (kinetic term
/// dropped) at position `x` (m).
pub fn eigenvalues(x: f64, cfg: &PhysicalConfig) -> EigenPair {
    let Splitting {
        mean,
        half_gap,
        coupling_sq,
    } = splitting(x, cfg);
    // λ₁λ₂ = −(Ωcos/2)²: take the larger root directly and the smaller one
    // from the product, which avoids cancellation far off resonance.
    let plus = mean + half_gap;
    let minus = mean - half_gap;
    let (l1, l2) = if plus.norm() >= minus.norm() {
        let l2 = plus;
        let l1 = if l2 == Complex64::new(0.0, 0.0) {
            minus
        } else {
            -coupling_sq / l2
        };
        (l1, l2)
    } else {
        let l1 = minus;
        (l1, -coupling_sq / l1)
    };
    EigenPair {
        lambda1: HBAR * l1,
        lambda2: HBAR * l2,
    }
}

/// Ground-state amplitude after one pulse, `G(x, t)`.
pub fn grating_amplitude(x: f64, cfg: &PhysicalConfig) -> Complex64 {
    grating_amplitude_diag(x, cfg).0
}

/// Like [`grating_amplitude`], also reporting whether the confluent
/// (degenerate-eigenvalue) form was used.
pub fn grating_amplitude_diag(x: f64, cfg: &PhysicalConfig) -> (Complex64, bool) {
    let s = splitting(x, cfg);
    propagate(s.mean, s.half_gap, cfg.pulse_duration)
}

/// `⟨g|e^{−iHt}|g⟩` for eigenfrequencies `m ± d`.
///
/// Algebraically this is `(λ₁e^{−iλ₂t} − λ₂e^{−iλ₁t})/(λ₁ − λ₂)`; it is
/// even in `d`, so the square-root branch does not affect it.
fn propagate(m: Complex64, d: Complex64, t: f64) -> (Complex64, bool) {
    let i = Complex64::i();
    let l1 = m - d;
    let l2 = m + d;
    let dt = d * t;
    if 2.0 * d.norm() < DEGENERACY_TOLERANCE * (l1.norm() + l2.norm()) {
        // Confluent limit e^{−iλt}(1 + iλt), with the next order in (dt)².
        let z = dt * dt;
        let g = (-i * m * t).exp() * ((1.0 - z / 2.0) + i * m * t * (1.0 - z / 6.0));
        return (g, true);
    }
    if dt.norm() < 1.0 {
        let sinc = dt.sin() / dt;
        ((-i * m * t).exp() * (dt.cos() + i * m * t * sinc), false)
    } else {
        let ratio = m / d;
        let g = 0.5 * ((1.0 + ratio) * (-i * l1 * t).exp() + (1.0 - ratio) * (-i * l2 * t).exp());
        (g, false)
    }
}

/// Which single-pulse operator a profile was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GratingModel {
    /// Full two-level amplitude for any detuning.
    Exact,
    /// Gaussian mask around the nodes; resonant light only.
    Harmonic,
}

impl GratingModel {
    pub fn build(self, cfg: &PhysicalConfig, grid_size: usize) -> Result<GratingProfile> {
        match self {
            GratingModel::Exact => build_profile(cfg, grid_size),
            GratingModel::Harmonic => harmonic_profile(cfg, grid_size),
        }
    }
}

/// Distribution of the random momentum kick δJ imparted by one pulse.
///
/// Stored in units of `δJ/ε` so one table serves every ε.
#[derive(Debug, Clone, PartialEq)]
pub enum KickDistribution {
    /// Normal distribution with standard deviation `|ε|·sigma_per_epsilon`.
    Gaussian { sigma_per_epsilon: f64 },
    /// Piecewise-linear CDF over an even grid of `δJ/ε` values.
    Tabulated { wavenumber: Vec<f64>, cdf: Vec<f64> },
}

impl KickDistribution {
    /// δJ ≡ 0.
    pub fn degenerate() -> Self {
        KickDistribution::Gaussian {
            sigma_per_epsilon: 0.0,
        }
    }

    /// Tabulate `|∫A(θ) e^{−ik(θ−π)} dθ|²` over `k = δJ/ε`.
    pub fn tabulate(theta: &[f64], amplitude: &[f64], bins: usize) -> Self {
        let n = amplitude.len();
        let h = TAU / n as f64;
        let sigma_k = amplitude_wavenumber_spread(amplitude, h);
        if sigma_k.is_nan() || sigma_k <= 0.0 {
            return Self::degenerate();
        }

        let half = bins / 2;
        let dk = KICK_TABLE_SPAN * sigma_k / half as f64;
        let density_at = |k: f64| {
            let step = Complex64::from_polar(1.0, -k * h);
            let mut phasor = Complex64::from_polar(1.0, -k * (theta[0] - PI));
            let mut acc = Complex64::new(0.0, 0.0);
            for &a in amplitude {
                acc += a * phasor;
                phasor *= step;
            }
            (acc * h).norm_sqr()
        };
        let positive: Vec<f64> = (0..=half).map(|i| density_at(i as f64 * dk)).collect();

        let mut wavenumber = Vec::with_capacity(2 * half + 1);
        let mut density = Vec::with_capacity(2 * half + 1);
        for i in (1..=half).rev() {
            wavenumber.push(-(i as f64) * dk);
            density.push(positive[i]);
        }
        for (i, &p) in positive.iter().enumerate() {
            wavenumber.push(i as f64 * dk);
            density.push(p);
        }

        let mut cdf = Vec::with_capacity(density.len());
        cdf.push(0.0);
        for w in density.windows(2) {
            let last = *cdf.last().unwrap();
            cdf.push(last + 0.5 * (w[0] + w[1]) * dk);
        }
        let total = *cdf.last().unwrap();
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        KickDistribution::Tabulated { wavenumber, cdf }
    }

    /// Standard deviation of δJ at the given ε.
    pub fn sigma_j(&self, epsilon: f64) -> f64 {
        match self {
            KickDistribution::Gaussian { sigma_per_epsilon } => epsilon.abs() * sigma_per_epsilon,
            KickDistribution::Tabulated { wavenumber, cdf } => {
                // Piecewise-uniform density between grid nodes.
                let mut second = 0.0;
                for i in 1..wavenumber.len() {
                    let (a, b) = (wavenumber[i - 1], wavenumber[i]);
                    second += (cdf[i] - cdf[i - 1]) * (a * a + a * b + b * b) / 3.0;
                }
                epsilon.abs() * second.sqrt()
            }
        }
    }

    /// CDF of δJ at `dj` for the given ε (a step at 0 when ε = 0).
    pub fn cdf(&self, dj: f64, epsilon: f64) -> f64 {
        let sigma = self.sigma_j(epsilon);
        if sigma == 0.0 {
            return if dj >= 0.0 { 1.0 } else { 0.0 };
        }
        let k = dj / epsilon.abs();
        match self {
            KickDistribution::Gaussian { sigma_per_epsilon } => {
                0.5 * erfc(-k / (sigma_per_epsilon * SQRT_2))
            }
            KickDistribution::Tabulated { wavenumber, cdf } => {
                if k <= wavenumber[0] {
                    return 0.0;
                }
                if k >= *wavenumber.last().unwrap() {
                    return 1.0;
                }
                let i = wavenumber.partition_point(|&w| w <= k);
                let f = (k - wavenumber[i - 1]) / (wavenumber[i] - wavenumber[i - 1]);
                cdf[i - 1] + f * (cdf[i] - cdf[i - 1])
            }
        }
    }

    /// Draw δJ for the given ε.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, epsilon: f64) -> f64 {
        match self {
            KickDistribution::Gaussian { sigma_per_epsilon } => {
                let scale = epsilon.abs() * sigma_per_epsilon;
                if scale == 0.0 {
                    return 0.0;
                }
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
            KickDistribution::Tabulated { wavenumber, cdf } => {
                if epsilon == 0.0 {
                    return 0.0;
                }
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let span = cdf[i] - cdf[i - 1];
                let f = if span > 0.0 {
                    (u - cdf[i - 1]) / span
                } else {
                    0.5
                };
                epsilon.abs() * (wavenumber[i - 1] + f * (wavenumber[i] - wavenumber[i - 1]))
            }
        }
    }
}

/// `sqrt(∫A'² / ∫A²)`, the RMS wavenumber of `A` on a periodic grid.
fn amplitude_wavenumber_spread(amplitude: &[f64], h: f64) -> f64 {
    let n = amplitude.len();
    let mut grad_sq = 0.0;
    let mut norm = 0.0;
    for j in 0..n {
        let d = (amplitude[(j + 1) % n] - amplitude[(j + n - 1) % n]) / (2.0 * h);
        grad_sq += d * d;
        norm += amplitude[j] * amplitude[j];
    }
    if norm == 0.0 {
        0.0
    } else {
        (grad_sq / norm).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MaskShape {
    Sampled,
    Gaussian { sigma_theta: f64 },
}

/// Sampled grating operator on a uniform grid over `[0, 2π)`.
///
/// Immutable once built; safe to share between worker threads.
#[derive(Debug, Clone)]
pub struct GratingProfile {
    theta: Vec<f64>,
    g_values: Vec<Complex64>,
    amplitude: Vec<f64>,
    phase_unwrapped: Vec<f64>,
    mask: Vec<f64>,
    phase_gradient: Vec<f64>,
    kick_table: KickDistribution,
    shape: MaskShape,
    confluent_points: usize,
}

impl GratingProfile {
    /// Build a profile from samples of `G` at `θ_j = 2πj/n`.
    pub fn from_samples(g_values: Vec<Complex64>, kick_table: KickDistribution) -> Result<Self> {
        let n = g_values.len();
        if n < MIN_GRID_SIZE {
            return Err(Error::InvalidConfig(format!(
                "grid size {n} is below the minimum of {MIN_GRID_SIZE}"
            )));
        }
        let h = TAU / n as f64;
        let theta: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let amplitude: Vec<f64> = g_values.iter().map(|g| g.norm()).collect();
        let mask: Vec<f64> = g_values.iter().map(|g| g.norm_sqr()).collect();

        let mut phase_unwrapped = Vec::with_capacity(n);
        phase_unwrapped.push(g_values[0].arg());
        for j in 1..n {
            let step = (g_values[j] * g_values[j - 1].conj()).arg();
            phase_unwrapped.push(phase_unwrapped[j - 1] + step);
        }

        // Im(G'Ḡ)/|G|² with a central difference for G'. Unlike differencing
        // Θ itself, this stays zero where a real G changes sign.
        let phase_gradient = (0..n)
            .map(|j| {
                let norm = mask[j];
                if norm < f64::MIN_POSITIVE {
                    return 0.0;
                }
                let dg = g_values[(j + 1) % n] - g_values[(j + n - 1) % n];
                (dg * g_values[j].conj()).im / (2.0 * h * norm)
            })
            .collect();

        Ok(Self {
            theta,
            g_values,
            amplitude,
            phase_unwrapped,
            mask,
            phase_gradient,
            kick_table,
            shape: MaskShape::Sampled,
            confluent_points: 0,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.theta.len()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.theta.len() as f64
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta
    }

    pub fn g_values(&self) -> &[Complex64] {
        &self.g_values
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase_unwrapped(&self) -> &[f64] {
        &self.phase_unwrapped
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn phase_gradient(&self) -> &[f64] {
        &self.phase_gradient
    }

    pub fn kick_table(&self) -> &KickDistribution {
        &self.kick_table
    }

    /// Grid points where the degenerate-eigenvalue form of `G` was used.
    pub fn confluent_points(&self) -> usize {
        self.confluent_points
    }

    /// Whether the profile is the analytic resonant Gaussian.
    pub fn is_harmonic(&self) -> bool {
        matches!(self.shape, MaskShape::Gaussian { .. })
    }

    /// Single-pulse survival probability at an arbitrary angle.
    ///
    /// Exact for the harmonic profile, linearly interpolated otherwise.
    pub fn mask_at(&self, theta: f64) -> f64 {
        match self.shape {
            MaskShape::Gaussian { sigma_theta } => {
                let x = theta.rem_euclid(TAU) - PI;
                (-(x * x) / (sigma_theta * sigma_theta)).exp()
            }
            MaskShape::Sampled => self.interpolate(&self.mask, theta),
        }
    }

    /// `dΘ/dθ` at an arbitrary angle.
    pub fn phase_gradient_at(&self, theta: f64) -> f64 {
        match self.shape {
            MaskShape::Gaussian { .. } => 0.0,
            MaskShape::Sampled => self.interpolate(&self.phase_gradient, theta),
        }
    }

    fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        let n = values.len();
        let u = theta.rem_euclid(TAU) / self.spacing();
        let base = u.floor();
        let frac = u - base;
        let i = (base as usize) % n;
        values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
    }
}

/// Require at least [`MIN_POINTS_PER_WIDTH`] samples within one mask width
/// of the node.
pub fn check_resolution(cfg: &PhysicalConfig, grid_size: usize) -> Result<()> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidConfig(format!(
            "grid size {grid_size} is below the minimum of {MIN_GRID_SIZE}"
        )));
    }
    let sigma = cfg.sigma_theta();
    let h = TAU / grid_size as f64;
    let points = (0..grid_size)
        .filter(|&j| (j as f64 * h - PI).abs() <= sigma)
        .count();
    if points < MIN_POINTS_PER_WIDTH {
        return Err(Error::Resolution { grid_size, points });
    }
    Ok(())
}

/// Sample the exact grating operator on `grid_size` points of `θ ∈ [0, 2π)`.
///
/// On resonance the kick distribution is the analytic Gaussian; otherwise
/// it is tabulated from the Fourier transform of the sampled amplitude.
pub fn build_profile(cfg: &PhysicalConfig, grid_size: usize) -> Result<GratingProfile> {
    cfg.validate()?;
    check_resolution(cfg, grid_size)?;

    let h = TAU / grid_size as f64;
    let mut confluent = 0;
    let g_values: Vec<Complex64> = (0..grid_size)
        .map(|j| {
            let x = j as f64 * h / (2.0 * cfg.k_l);
            let (g, degenerate) = grating_amplitude_diag(x, cfg);
            confluent += usize::from(degenerate);
            g
        })
        .collect();
    if let Some(bad) = g_values
        .iter()
        .find(|g| !(g.re.is_finite() && g.im.is_finite()))
    {
        return Err(Error::InvalidConfig(format!(
            "grating amplitude is not finite ({bad})"
        )));
    }
    if confluent > 0 {
        log::debug!("grating: {confluent} grid points evaluated at degenerate eigenvalues");
    }

    let mut profile = GratingProfile::from_samples(g_values, KickDistribution::degenerate())?;
    profile.kick_table = if cfg.is_resonant() {
        KickDistribution::Gaussian {
            sigma_per_epsilon: 1.0 / (SQRT_2 * cfg.sigma_theta()),
        }
    } else {
        KickDistribution::tabulate(&profile.theta, &profile.amplitude, KICK_TABLE_BINS)
    };
    profile.confluent_points = confluent;
    Ok(profile)
}

/// Resonant harmonic approximation: `A(θ) = exp(−(θ−π)²/(2σ_θ²))`, no phase.
pub fn harmonic_profile(cfg: &PhysicalConfig, grid_size: usize) -> Result<GratingProfile> {
    cfg.validate()?;
    if !cfg.is_resonant() {
        return Err(Error::Unsupported(
            "the harmonic grating requires resonant light (detuning = 0)".into(),
        ));
    }
    check_resolution(cfg, grid_size)?;

    let sigma_theta = cfg.sigma_theta();
    let h = TAU / grid_size as f64;
    let g_values = (0..grid_size)
        .map(|j| {
            let x = j as f64 * h - PI;
            Complex64::from((-(x * x) / (2.0 * sigma_theta * sigma_theta)).exp())
        })
        .collect();
    let mut profile = GratingProfile::from_samples(
        g_values,
        KickDistribution::Gaussian {
            sigma_per_epsilon: 1.0 / (SQRT_2 * sigma_theta),
        },
    )?;
    profile.shape = MaskShape::Gaussian { sigma_theta };
    Ok(profile)
}
