//! Pseudoclassical map for the absorptive kicked rotor.
//!
//! Each trajectory carries an angle θ, a scaled momentum J and a survival
//! weight S. One period is
//!
//! ```text
//! S ← s(θ) S
//! J ← J + δJ + ε Θ'(θ)
//! θ ← θ + J + πℓ(1 + 2β)   (mod 2π)
//! ```
//!
//! where `s` is the grating mask, `Θ` its phase and `δJ` a random diffraction
//! kick. Random numbers come from a ChaCha stream keyed by the trajectory
//! index and positioned by the kick index, so results do not depend on how
//! trajectories are split across threads.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grating::GratingProfile;
use crate::params::{wrapped_drift, DimensionlessConfig};
use crate::series::SurvivalSeries;

/// Default ensemble size.
pub const DEFAULT_TRAJECTORIES: usize = 200_000;

// 32-bit words reserved per kick in each trajectory's stream.
const WORDS_PER_KICK: u128 = 16;
// Trajectories handed to a worker at a time.
const CHUNK: usize = 4096;

fn trajectory_rng(base: &ChaCha8Rng, trajectory: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trajectory as u64);
    rng.set_word_pos(WORDS_PER_KICK * u128::from(slot));
    rng
}

/// Weighted trajectory ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    theta: Vec<f64>,
    j: Vec<f64>,
    s: Vec<f64>,
    master_seed: u64,
    kick_index: usize,
}

/// Mean survival with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trajectories: usize,
}

/// Plane-wave ensemble: θ stratified over `[0, 2π)` with one jittered point
/// per stratum, `J ≡ j0`, `S ≡ 1`.
pub fn init_ensemble(count: usize, j0: f64, seed: u64) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    let width = TAU / count as f64;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; count];
    theta
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (k, t) in chunk.iter_mut().enumerate() {
                let i = c * CHUNK + k;
                let u: f64 = trajectory_rng(&base, i, 0).random();
                *t = ((i as f64 + u) * width).min(TAU.next_down());
            }
        });
    Ok(Ensemble {
        theta,
        j: vec![j0; count],
        s: vec![1.0; count],
        master_seed: seed,
        kick_index: 0,
    })
}

impl Ensemble {
    /// Ensemble with given angles and momenta and unit weights.
    pub fn from_parts(theta: Vec<f64>, j: Vec<f64>, seed: u64) -> Result<Self> {
        if theta.is_empty() || theta.len() != j.len() {
            return Err(Error::InvalidConfig(
                "θ and J must be nonempty and of equal length".into(),
            ));
        }
        let theta = theta.into_iter().map(|t| t.rem_euclid(TAU)).collect();
        let s = vec![1.0; j.len()];
        Ok(Self {
            theta,
            j,
            s,
            master_seed: seed,
            kick_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn j(&self) -> &[f64] {
        &self.j
    }

    pub fn weights(&self) -> &[f64] {
        &self.s
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn kick_index(&self) -> usize {
        self.kick_index
    }

    /// One grating pulse and free flight. With `delta_j` false the random
    /// diffraction kick is dropped.
    pub fn step(&mut self, profile: &GratingProfile, dcfg: &DimensionlessConfig, delta_j: bool) {
        let drift = wrapped_drift(dcfg.ell, dcfg.beta);
        let eps = dcfg.epsilon;
        let base = ChaCha8Rng::seed_from_u64(self.master_seed);
        let slot = self.kick_index as u64 + 1;
        let kicks = profile.kick_table();
        let random_kicks = delta_j && kicks.sigma_j(eps) > 0.0;

        self.theta
            .par_chunks_mut(CHUNK)
            .zip(self.j.par_chunks_mut(CHUNK))
            .zip(self.s.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, ((theta, j), s))| {
                for k in 0..theta.len() {
                    let t = theta[k];
                    s[k] *= profile.mask_at(t);
                    let dj = if random_kicks {
                        kicks.sample(&mut trajectory_rng(&base, c * CHUNK + k, slot), eps)
                    } else {
                        0.0
                    };
                    j[k] += dj + eps * profile.phase_gradient_at(t);
                    let mut next = (t + j[k] + drift).rem_euclid(TAU);
                    if next >= TAU {
                        next = 0.0;
                    }
                    theta[k] = next;
                }
            });
        self.kick_index += 1;
    }

    /// Mean weight and its standard error, summed in index order.
    pub fn survival_estimate(&self) -> SurvivalEstimate {
        let n = self.s.len();
        let mean = self.s.iter().sum::<f64>() / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let var = self.s.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        SurvivalEstimate {
            mean,
            std_error,
            trajectories: n,
        }
    }
}

/// Ensemble settings for one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub trajectories: usize,
    pub seed: u64,
    pub j0: f64,
    pub delta_j: bool,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            trajectories: DEFAULT_TRAJECTORIES,
            seed: 0,
            j0: 0.0,
            delta_j: true,
        }
    }
}

impl MonteCarlo {
    /// Mean survival after each of `kicks` periods.
    pub fn run(
        &self,
        profile: &GratingProfile,
        dcfg: &DimensionlessConfig,
        kicks: usize,
    ) -> Result<SurvivalSeries> {
        let mut ens = init_ensemble(self.trajectories, self.j0, self.seed)?;
        let mut series = SurvivalSeries::new(1.0);
        for _ in 0..kicks {
            ens.step(profile, dcfg, self.delta_j);
            let est = ens.survival_estimate();
            series.push(est.mean, est.std_error);
        }
        Ok(series)
    }
}

/// Free function form of [`MonteCarlo::run`] with the random kick enabled.
pub fn run_map(
    count: usize,
    j0: f64,
    seed: u64,
    profile: &GratingProfile,
    dcfg: &DimensionlessConfig,
    kicks: usize,
) -> Result<SurvivalSeries> {
    MonteCarlo {
        trajectories: count,
        seed,
        j0,
        delta_j: true,
    }
    .run(profile, dcfg, kicks)
}
