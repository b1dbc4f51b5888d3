//! Seeded Monte Carlo over quasi-static channel realizations.
//!
//! Trial `t` draws its channel from ChaCha stream `t` of the configured seed,
//! so any trial can be reproduced on its own and the statistics do not depend
//! on how trials are scheduled. Per-trial results are gathered in trial order
//! and reduced sequentially with compensated summation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate, AllocationMode};
use crate::cache::SpectrumCache;
use crate::decomp::{channel_singular_values, combine, ChannelMatrix, SingularSpectrum};
use crate::error::{Error, Result};
use crate::mccr::{rate_point, CapacityBound, CapacityBoundEvaluator, DispersionNorm, RatePoint, DEFAULT_SYMBOL_GRID};
use crate::pulse::{basis_coefficients, PulseCoeffs, PulseSpec, DEFAULT_SYMBOL_PERIOD, DEFAULT_TRUNCATION};

/// Seed used by the figure presets.
pub const DEFAULT_SEED: u64 = 0xF7A57E2;
pub const DEFAULT_TRIALS: usize = 1000;

/// How the `snr_db` setting maps onto the transmit budget `P` (with `σ0² = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrReference {
    /// SNR is the energy per Nyquist interval over the noise power,
    /// `P·T/σ0²`, so `P = SNR·σ0²/T`.
    #[default]
    NyquistSymbol,
    /// `P = SNR·σ0²` taken literally in watts.
    Literal,
}

impl std::str::FromStr for SnrReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbol" | "nyquist-symbol" => Ok(SnrReference::NyquistSymbol),
            "literal" => Ok(SnrReference::Literal),
            other => Err(Error::Config(format!("unknown SNR reference `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Transmit antennas `K`.
    pub transmit: usize,
    /// Receive antennas `M`.
    pub receive: usize,
    pub block_length: usize,
    pub truncation: usize,
    pub delta: f64,
    pub beta: f64,
    pub symbol_period: f64,
    pub snr_db: f64,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    pub allocation: AllocationMode,
    pub dispersion: DispersionNorm,
    pub snr_reference: SnrReference,
    /// Also evaluate the infinite-blocklength capacity per trial.
    pub capacity_bound: bool,
    pub symbol_grid: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            transmit: 2,
            receive: 2,
            block_length: 100,
            truncation: DEFAULT_TRUNCATION,
            delta: 0.67,
            beta: 0.5,
            symbol_period: DEFAULT_SYMBOL_PERIOD,
            snr_db: 20.0,
            eps: 1e-6,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            allocation: AllocationMode::Optimal,
            dispersion: DispersionNorm::AsPrinted,
            snr_reference: SnrReference::NyquistSymbol,
            capacity_bound: false,
            symbol_grid: DEFAULT_SYMBOL_GRID,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.pulse()?;
        if self.transmit == 0 || self.receive == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if self.block_length == 0 {
            return Err(Error::Config("block length N must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("ε must lie in (0, 1), got {}", self.eps)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config(format!("SNR must be finite, got {}", self.snr_db)));
        }
        Ok(())
    }

    pub fn pulse(&self) -> Result<PulseSpec> {
        PulseSpec::new(self.symbol_period, self.delta, self.beta, self.truncation)
    }

    /// `σ0²`, fixed to one.
    pub fn noise_power(&self) -> f64 {
        1.0
    }

    /// Transmit budget `P` in watts.
    pub fn power(&self) -> f64 {
        let snr = 10f64.powf(self.snr_db / 10.0) * self.noise_power();
        match self.snr_reference {
            SnrReference::NyquistSymbol => snr / self.symbol_period,
            SnrReference::Literal => snr,
        }
    }
}

/// Statistics of one ensemble run. Spectral efficiencies are in bits/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub config: TrialConfig,
    /// Mean `C(N, ε)` in bits per channel use.
    pub mean_mccr: f64,
    pub mean_spectral_efficiency: f64,
    /// Standard error of the mean spectral efficiency.
    pub std_error: f64,
    pub trials_used: usize,
    pub cache_hit: bool,
    /// Trials whose rate was clamped at zero.
    pub clamped_trials: usize,
    /// Mean infinite-blocklength capacity in bits/s/Hz, when requested.
    pub mean_capacity_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub rate: RatePoint,
    pub capacity: Option<CapacityBound>,
}

/// Sequential or data-parallel trial execution. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
}

/// The random stream of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Pulse-level quantities shared by every trial of a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: TrialConfig,
    pub pulse: PulseSpec,
    pub coeffs: PulseCoeffs,
    pub sigma_p: std::sync::Arc<Vec<f64>>,
    pub cache_hit: bool,
    pub bound: Option<CapacityBoundEvaluator>,
}

impl Prepared {
    pub fn new(config: &TrialConfig, cache: &SpectrumCache) -> Result<Self> {
        config.validate()?;
        let pulse = config.pulse()?;
        let coeffs = basis_coefficients(&pulse)?;
        let spectrum = cache.sigma_p(&coeffs, config.block_length)?;
        let bound = if config.capacity_bound {
            Some(CapacityBoundEvaluator::new(&coeffs, config.symbol_grid)?)
        } else {
            None
        };
        Ok(Self {
            config: *config,
            pulse,
            coeffs,
            sigma_p: spectrum.sigma_p,
            cache_hit: spectrum.hit,
            bound,
        })
    }

    /// Runs trial `trial` end to end.
    pub fn trial(&self, trial: usize) -> Result<TrialOutcome> {
        let config = &self.config;
        let mut rng = trial_rng(config.seed, trial);
        let channel = ChannelMatrix::random(config.transmit, config.receive, &mut rng)?;
        let sigma_h = channel_singular_values(&channel)?;
        let spectrum = SingularSpectrum {
            sigma_h,
            sigma_p: self.sigma_p.to_vec(),
        };
        let channels = combine(&spectrum, &self.pulse, config.block_length, config.noise_power())?;
        let alloc = allocate(&channels, config.power(), config.allocation)?;
        let rate = rate_point(&channels, &alloc, &self.pulse, config.eps, config.dispersion)?;
        let capacity = match &self.bound {
            Some(bound) => Some(bound.evaluate(&spectrum.sigma_h, config.power(), config.noise_power())?),
            None => None,
        };
        Ok(TrialOutcome { rate, capacity })
    }
}

/// Runs every trial and returns the outcomes in trial order.
pub fn run_trials(config: &TrialConfig, cache: &SpectrumCache, execution: Execution) -> Result<Vec<TrialOutcome>> {
    let prepared = Prepared::new(config, cache)?;
    run_prepared(&prepared, execution)
}

fn run_prepared(prepared: &Prepared, execution: Execution) -> Result<Vec<TrialOutcome>> {
    let trials = prepared.config.trials;
    let outcomes: Vec<Result<TrialOutcome>> = match execution {
        Execution::Sequential => (0..trials).map(|t| prepared.trial(t)).collect(),
        Execution::Parallel => parallel_map(trials, |t| prepared.trial(t)),
    };
    outcomes
        .into_iter()
        .enumerate()
        .map(|(trial, r)| {
            r.map_err(|e| Error::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync + Send>(count: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F: Fn(usize) -> T>(count: usize, f: F) -> Vec<T> {
    (0..count).map(f).collect()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn summarize(prepared_config: &TrialConfig, cache_hit: bool, outcomes: &[TrialOutcome]) -> EnsembleResult {
    let n = outcomes.len() as f64;
    let mean_mccr = compensated_sum(outcomes.iter().map(|o| o.rate.mccr)) / n;
    let mean_se = compensated_sum(outcomes.iter().map(|o| o.rate.spectral_efficiency)) / n;
    let std_error = if outcomes.len() > 1 {
        let ss = compensated_sum(outcomes.iter().map(|o| (o.rate.spectral_efficiency - mean_se).powi(2)));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    let mean_capacity_bound = if outcomes.iter().all(|o| o.capacity.is_some()) && !outcomes.is_empty() {
        Some(compensated_sum(outcomes.iter().filter_map(|o| o.capacity).map(|c| c.bits_per_s_hz)) / n)
    } else {
        None
    };
    EnsembleResult {
        config: *prepared_config,
        mean_mccr,
        mean_spectral_efficiency: mean_se,
        std_error,
        trials_used: outcomes.len(),
        cache_hit,
        clamped_trials: outcomes.iter().filter(|o| o.rate.clamped).count(),
        mean_capacity_bound,
    }
}

pub fn run_ensemble_with(config: &TrialConfig, cache: &SpectrumCache, execution: Execution) -> Result<EnsembleResult> {
    let prepared = Prepared::new(config, cache)?;
    let outcomes = run_prepared(&prepared, execution)?;
    let clamped = outcomes.iter().filter(|o| o.rate.clamped).count();
    if clamped > 0 {
        log::info!("{clamped} of {} trials had a negative normal approximation, clamped to 0", outcomes.len());
    }
    Ok(summarize(config, prepared.cache_hit, &outcomes))
}

pub fn run_ensemble(config: &TrialConfig, cache: &SpectrumCache) -> Result<EnsembleResult> {
    run_ensemble_with(config, cache, Execution::default())
}
