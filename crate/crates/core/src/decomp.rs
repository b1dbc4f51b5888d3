//! Random MIMO channels, singular spectra of `H` and `P`, and their combination
//! into `DN` parallel complex Gaussian subchannels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::banded;
use crate::error::{Error, Result};
use crate::pulse::{IsiMatrix, PulseSpec};

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Relative threshold below which a temporal singular value counts as zero.
pub const ZERO_SINGULAR_VALUE: f64 = 1e-12;

/// `M × K` quasi-static channel, `entries[(m, k)] = h_{mk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidParameter("channel matrix needs K, M ≥ 1".into()));
        }
        if entries.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
            return Err(Error::InvalidParameter("channel matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            entries: DMatrix::identity(size, size),
        }
    }

    /// Draws i.i.d. `CN(0, 1/K)` entries from `rng`.
    pub fn random<R: Rng + ?Sized>(transmit: usize, receive: usize, rng: &mut R) -> Result<Self> {
        if transmit == 0 || receive == 0 {
            return Err(Error::InvalidParameter("antenna counts must be at least 1".into()));
        }
        let scale = (0.5 / transmit as f64).sqrt();
        // Column-major fill order keeps the draw sequence stable for a given seed.
        let entries = DMatrix::from_fn(receive, transmit, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        });
        Ok(Self { entries })
    }

    pub fn transmit(&self) -> usize {
        self.entries.ncols()
    }

    pub fn receive(&self) -> usize {
        self.entries.nrows()
    }

    /// `D = min(K, M)`.
    pub fn rank_bound(&self) -> usize {
        self.transmit().min(self.receive())
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }
}

/// Draws a channel from a ChaCha stream seeded with `seed`.
pub fn generate_channel(transmit: usize, receive: usize, seed: u64) -> Result<ChannelMatrix> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ChannelMatrix::random(transmit, receive, &mut rng)
}

/// Singular values of `H` and `P`, both sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub sigma_h: Vec<f64>,
    pub sigma_p: Vec<f64>,
}

fn sort_descending(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

/// The `D` singular values of the channel, descending.
pub fn channel_singular_values(channel: &ChannelMatrix) -> Result<Vec<f64>> {
    let svd = channel
        .entries
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::NotConverged("channel SVD"))?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|s| s.max(0.0)).collect();
    sort_descending(&mut values);
    values.truncate(channel.rank_bound());
    Ok(values)
}

/// The `N` singular values of the ISI matrix, descending.
///
/// Computed as square roots of the eigenvalues of the banded Toeplitz Gram
/// matrix `P†P` (half-bandwidth `2L`); the unitary factors are never formed.
pub fn isi_singular_values(isi: &IsiMatrix) -> Result<Vec<f64>> {
    let taps = isi.taps();
    let r: Vec<f64> = (0..taps.len())
        .map(|k| (0..taps.len() - k).map(|i| taps[i] * taps[i + k]).sum())
        .collect();
    let bandwidth = (taps.len() - 1).min(isi.cols().saturating_sub(1));
    let eigen = banded::band_eigenvalues(isi.cols(), bandwidth, |i, j| r[i.abs_diff(j)])?;
    let mut values: Vec<f64> = eigen.into_iter().map(|lambda| lambda.max(0.0).sqrt()).collect();
    sort_descending(&mut values);
    Ok(values)
}

pub fn singular_spectrum(channel: &ChannelMatrix, isi: &IsiMatrix) -> Result<SingularSpectrum> {
    Ok(SingularSpectrum {
        sigma_h: channel_singular_values(channel)?,
        sigma_p: isi_singular_values(isi)?,
    })
}

/// `DN` parallel subchannels with index maps `d = ⌊i/N⌋`, `n = i - N⌊i/N⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelChannels {
    pub sigma_h: Vec<f64>,
    pub sigma_p: Vec<f64>,
    /// Power gains `g_i = (σ_h[d]·σ_p[n])²`.
    pub gain: Vec<f64>,
    /// Power-cost weights `w_i = σ_p[n]²/(NδT)`.
    pub cost: Vec<f64>,
    /// Noise variance `σ0²`.
    pub noise_power: f64,
    /// Block length `N`.
    pub block_length: usize,
    /// Signalling interval `δT` in seconds.
    pub interval: f64,
}

impl ParallelChannels {
    pub fn count(&self) -> usize {
        self.gain.len()
    }

    /// Number of spatial modes `D`.
    pub fn spatial_modes(&self) -> usize {
        self.sigma_h.len()
    }

    pub fn spatial_index(&self, i: usize) -> usize {
        i / self.block_length
    }

    pub fn temporal_index(&self, i: usize) -> usize {
        i - self.block_length * (i / self.block_length)
    }

    /// Per temporal index: whether `σ_p[n]` is above the zero threshold.
    pub fn usable_temporal(&self) -> Vec<bool> {
        let max = self.sigma_p.iter().copied().fold(0.0, f64::max);
        self.sigma_p.iter().map(|&s| s > ZERO_SINGULAR_VALUE * max).collect()
    }

    /// `NδT`, the cost normalization.
    pub fn cost_scale(&self) -> f64 {
        self.block_length as f64 * self.interval
    }
}

/// Combines the two spectra into parallel subchannels.
pub fn combine(
    spectrum: &SingularSpectrum,
    pulse: &PulseSpec,
    block_length: usize,
    noise_power: f64,
) -> Result<ParallelChannels> {
    if block_length == 0 || spectrum.sigma_p.len() != block_length {
        return Err(Error::InvalidParameter(format!(
            "σ_p has {} values but N = {block_length}",
            spectrum.sigma_p.len()
        )));
    }
    if spectrum.sigma_h.is_empty() {
        return Err(Error::InvalidParameter("σ_h is empty".into()));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise power must be positive, got {noise_power}")));
    }
    pulse.validate()?;
    let interval = pulse.interval();
    let cost_scale = block_length as f64 * interval;
    let count = spectrum.sigma_h.len() * block_length;
    let mut gain = Vec::with_capacity(count);
    let mut cost = Vec::with_capacity(count);
    for &sh in &spectrum.sigma_h {
        for &sp in &spectrum.sigma_p {
            gain.push((sh * sp).powi(2));
            cost.push(sp * sp / cost_scale);
        }
    }
    Ok(ParallelChannels {
        sigma_h: spectrum.sigma_h.clone(),
        sigma_p: spectrum.sigma_p.clone(),
        gain,
        cost,
        noise_power,
        block_length,
        interval,
    })
}
