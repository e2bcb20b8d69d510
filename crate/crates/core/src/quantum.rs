//! Exact one-period Floquet evolution on a truncated integer momentum
//! ladder at fixed quasimomentum β.
//!
//! A period is the grating (applied pointwise in position space, reached by
//! FFT) followed by free flight (a diagonal phase in momentum space). The
//! squared norm of the state is the survival probability.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grating::{check_resolution, GratingModel, GratingProfile};
use crate::params::{wrapped_drift, DimensionlessConfig, PhysicalConfig};
use crate::series::SurvivalSeries;

/// Default ladder half-width.
pub const DEFAULT_N_MAX: usize = 128;
/// Largest ladder half-width tried by [`QuantumEngine`].
pub const MAX_N_MAX: usize = 1024;
/// Probability allowed on the outer tenth of the ladder after a kick.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Smallest power of two with 8× headroom over the ladder size.
pub fn grid_size_for(n_max: usize) -> usize {
    (8 * (2 * n_max + 1)).next_power_of_two()
}

/// Wavefunction `Σ c_n e^{inθ}` for `n ∈ [−n_max, n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    beta: f64,
    n_max: usize,
    amplitudes: Vec<Complex64>,
}

/// Plane wave with integer momentum 0 at quasimomentum `beta`.
pub fn init_plane_wave(beta: f64, n_max: usize) -> QuantumState {
    assert!(n_max >= 1, "ladder needs n_max >= 1");
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
    amplitudes[n_max] = Complex64::new(1.0, 0.0);
    QuantumState {
        beta,
        n_max,
        amplitudes,
    }
}

impl QuantumState {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Amplitudes ordered from `n = −n_max` to `n = n_max`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        let idx = n + self.n_max as i64;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[idx as usize]
        }
    }

    /// Squared norm, i.e. the survival probability.
    pub fn survival(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|c_n|²` from `n = −n_max` to `n = n_max`.
    pub fn momentum_distribution(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Probability on the outer tenth of the ladder (at least one rung on
    /// each side).
    pub fn tail_mass(&self) -> f64 {
        let outer = (self.n_max / 10).max(1);
        let len = self.amplitudes.len();
        self.amplitudes[..outer]
            .iter()
            .chain(&self.amplitudes[len - outer..])
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Free flight over one period: `c_n ← c_n e^{−i(εn²/2 + πℓn(1+2β))}`.
    pub fn apply_free(&mut self, dcfg: &DimensionlessConfig) {
        let drift = wrapped_drift(dcfg.ell, self.beta);
        let n_max = self.n_max as i64;
        for (idx, c) in self.amplitudes.iter_mut().enumerate() {
            let n = (idx as i64 - n_max) as f64;
            let phase = dcfg.epsilon * n * n / 2.0 + drift * n;
            *c *= Complex64::from_polar(1.0, -phase);
        }
    }
}

/// Free function form of [`QuantumState::apply_free`].
pub fn apply_free(mut state: QuantumState, dcfg: &DimensionlessConfig) -> QuantumState {
    state.apply_free(dcfg);
    state
}

/// FFT plans for one position grid.
pub struct FloquetPropagator {
    grid_size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FloquetPropagator {
    pub fn new(grid_size: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid_size);
        let inverse = planner.plan_fft_inverse(grid_size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid_size,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); grid_size],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Multiply the wavefunction by `G(θ)` and project back onto the ladder.
    ///
    /// Leaves the state untouched and returns [`Error::GridTooSmall`] if the
    /// profile grid lacks 8× headroom over the ladder. Truncation is not
    /// checked here; see [`QuantumState::tail_mass`].
    pub fn apply_kick(&mut self, state: &mut QuantumState, profile: &GratingProfile) -> Result<()> {
        let required = 8 * (2 * state.n_max + 1);
        if profile.grid_size() < required {
            return Err(Error::GridTooSmall {
                grid_size: profile.grid_size(),
                n_max: state.n_max,
                required,
            });
        }
        if profile.grid_size() != self.grid_size {
            *self = Self::new(profile.grid_size());
        }
        let m = self.grid_size;
        let n_max = state.n_max as i64;

        self.buffer.fill(Complex64::new(0.0, 0.0));
        for (idx, &c) in state.amplitudes.iter().enumerate() {
            let n = idx as i64 - n_max;
            self.buffer[n.rem_euclid(m as i64) as usize] = c;
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (psi, g) in self.buffer.iter_mut().zip(profile.g_values()) {
            *psi *= g;
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let norm = 1.0 / m as f64;
        for (idx, c) in state.amplitudes.iter_mut().enumerate() {
            let n = idx as i64 - n_max;
            *c = self.buffer[n.rem_euclid(m as i64) as usize] * norm;
        }
        Ok(())
    }

    /// Alternate grating and free flight for `kicks` periods, recording the
    /// survival after each grating.
    pub fn evolve(
        &mut self,
        state: &mut QuantumState,
        profile: &GratingProfile,
        dcfg: &DimensionlessConfig,
        kicks: usize,
    ) -> Result<SurvivalSeries> {
        let mut series = SurvivalSeries::new(state.survival());
        for kick in 1..=kicks {
            self.apply_kick(state, profile)?;
            let tail_mass = state.tail_mass();
            if tail_mass >= TAIL_TOLERANCE {
                return Err(Error::Aliasing {
                    n_max: state.n_max,
                    tail_mass,
                    kick,
                });
            }
            series.push(state.survival(), 0.0);
            state.apply_free(dcfg);
        }
        Ok(series)
    }
}

/// One grating application with a freshly planned FFT.
pub fn apply_kick(mut state: QuantumState, profile: &GratingProfile) -> Result<QuantumState> {
    FloquetPropagator::new(profile.grid_size()).apply_kick(&mut state, profile)?;
    Ok(state)
}

/// Evolve `state` through `kicks` periods and return the survival series.
pub fn evolve(
    state: &mut QuantumState,
    profile: &GratingProfile,
    dcfg: &DimensionlessConfig,
    kicks: usize,
) -> Result<SurvivalSeries> {
    FloquetPropagator::new(profile.grid_size()).evolve(state, profile, dcfg, kicks)
}

/// Outcome of a converged quantum run.
#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub series: SurvivalSeries,
    pub n_max: usize,
    /// `|c_n|²` after the last period, from `n = −n_max` to `n_max`.
    pub momentum_distribution: Vec<f64>,
}

/// Quantum engine for one physical configuration.
///
/// Starts on a ladder of [`DEFAULT_N_MAX`] and doubles it (up to
/// [`MAX_N_MAX`]) whenever the tail check fails. Profiles for each ladder
/// size are built once and shared by all runs.
pub struct QuantumEngine {
    phys: PhysicalConfig,
    model: GratingModel,
    n_max: usize,
    profiles: Vec<OnceLock<Result<GratingProfile>>>,
}

impl QuantumEngine {
    pub fn new(phys: PhysicalConfig, model: GratingModel) -> Result<Self> {
        Self::with_n_max(phys, model, DEFAULT_N_MAX)
    }

    pub fn with_n_max(phys: PhysicalConfig, model: GratingModel, n_max: usize) -> Result<Self> {
        phys.validate()?;
        if n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        let mut levels = 1;
        let mut n = n_max;
        while n < MAX_N_MAX {
            n *= 2;
            levels += 1;
        }
        let engine = Self {
            phys,
            model,
            n_max,
            profiles: (0..levels).map(|_| OnceLock::new()).collect(),
        };
        // Fail early on configurations the model cannot represent.
        engine.profile(0)?;
        Ok(engine)
    }

    pub fn model(&self) -> GratingModel {
        self.model
    }

    /// Profile on the grid of the starting ladder.
    pub fn base_profile(&self) -> Result<&GratingProfile> {
        self.profile(0)
    }

    fn profile(&self, level: usize) -> Result<&GratingProfile> {
        let n_max = self.n_max << level;
        self.profiles[level]
            .get_or_init(|| {
                let mut grid = grid_size_for(n_max);
                while check_resolution(&self.phys, grid).is_err() && grid < 1 << 24 {
                    grid *= 2;
                }
                self.model.build(&self.phys, grid)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Survival after each of `dcfg.kicks` periods for a plane wave at
    /// `dcfg.beta`.
    pub fn run(&self, dcfg: &DimensionlessConfig) -> Result<QuantumRun> {
        let mut last_err = None;
        for level in 0..self.profiles.len() {
            let n_max = self.n_max << level;
            let profile = self.profile(level)?;
            let mut state = init_plane_wave(dcfg.beta, n_max);
            match evolve(&mut state, profile, dcfg, dcfg.kicks) {
                Ok(series) => {
                    return Ok(QuantumRun {
                        series,
                        n_max,
                        momentum_distribution: state.momentum_distribution(),
                    })
                }
                Err(err @ Error::Aliasing { .. }) => {
                    log::debug!("quantum: {err}; enlarging the ladder");
                    last_err = Some(err);
                }
                Err(err) => return Err(err),
            }
        }
        Err(last_err.expect("at least one ladder size is tried"))
    }
}
