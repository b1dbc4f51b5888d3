//! Finite-blocklength rate: `C_DN`, dispersion `V_DN`, the normal
//! approximation of the maximum coding rate, and the large-`N` capacity limit.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::allocation::{waterfill, PowerAllocation};
use crate::decomp::{combine, ParallelChannels, SingularSpectrum};
use crate::error::{Error, Result};
use crate::pulse::{PulseCoeffs, PulseSpec};
use crate::qfunc::q_inv;

/// Default number of samples of the Toeplitz symbol.
pub const DEFAULT_SYMBOL_GRID: usize = 4096;
const MIN_SYMBOL_GRID: usize = 256;
const GRID_CONVERGENCE_TOL: f64 = 1e-4;

/// Which block length divides `V_DN` inside the square-root penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionNorm {
    /// `√(V_DN/(DN))`, as the rate theorem is stated.
    #[default]
    AsPrinted,
    /// `√(V_DN/N)`: total information-density variance `N·V_DN` over `N` uses.
    PerBlock,
}

impl std::str::FromStr for DispersionNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" | "printed" => Ok(DispersionNorm::AsPrinted),
            "per-block" => Ok(DispersionNorm::PerBlock),
            other => Err(Error::Config(format!("unknown dispersion normalization `{other}`"))),
        }
    }
}

fn snr_terms<'a>(channels: &'a ParallelChannels, alloc: &'a PowerAllocation) -> impl Iterator<Item = f64> + 'a {
    channels
        .gain
        .iter()
        .zip(&alloc.q)
        .map(move |(g, q)| g * q / channels.noise_power)
}

/// `C_DN = (1/N) Σ log₂(1 + g_i q_i/σ0²)`.
pub fn c_dn(channels: &ParallelChannels, alloc: &PowerAllocation) -> f64 {
    snr_terms(channels, alloc).map(f64::ln_1p).sum::<f64>() * LOG2_E / channels.block_length as f64
}

/// `V_DN = ((log₂e)²/N) Σ (1 − (1 + SNR_i)⁻²)`.
pub fn v_dn(channels: &ParallelChannels, alloc: &PowerAllocation) -> f64 {
    let sum: f64 = snr_terms(channels, alloc)
        .map(|snr| {
            // 1 - (1+s)^-2 = s(2+s)/(1+s)², exact for small s.
            snr * (2.0 + snr) / (1.0 + snr).powi(2)
        })
        .sum();
    LOG2_E * LOG2_E * sum / channels.block_length as f64
}

/// Coding rate in bits per channel use, with the negative-rate clamp flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mccr {
    pub value: f64,
    pub clamped: bool,
}

/// `(N/(N+2L))·(C_DN − √(V_DN/(DN))·Q⁻¹(ε) + log₂(DN)/(2DN))`.
pub fn mccr(
    c: f64,
    v: f64,
    block_length: usize,
    modes: usize,
    truncation: usize,
    eps: f64,
    norm: DispersionNorm,
) -> Result<Mccr> {
    if block_length == 0 || modes == 0 {
        return Err(Error::InvalidParameter("N and D must be at least 1".into()));
    }
    if !(c.is_finite() && v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter(format!("non-finite rate inputs C={c}, V={v}")));
    }
    let n = block_length as f64;
    let dn = (modes * block_length) as f64;
    let divisor = match norm {
        DispersionNorm::AsPrinted => dn,
        DispersionNorm::PerBlock => n,
    };
    let penalty = if v == 0.0 { 0.0 } else { (v / divisor).sqrt() * q_inv(eps)? };
    let value = n / (n + 2.0 * truncation as f64) * (c - penalty + dn.log2() / (2.0 * dn));
    Ok(if value < 0.0 {
        Mccr {
            value: 0.0,
            clamped: true,
        }
    } else {
        Mccr { value, clamped: false }
    })
}

/// `C / (δ(1+β))`, bits/s/Hz.
pub fn spectral_efficiency(rate: f64, delta: f64, beta: f64) -> f64 {
    rate / (delta * (1.0 + beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub block_length: usize,
    pub modes: usize,
    pub truncation: usize,
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
}

/// Rate quantities for one channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub c_dn: f64,
    pub v_dn: f64,
    /// `C(N, ε)` in bits per channel use.
    pub mccr: f64,
    /// `C̄(N, ε)` in bits/s/Hz.
    pub spectral_efficiency: f64,
    /// Set when the normal approximation went negative and was clamped to zero.
    pub clamped: bool,
    pub params: RateParams,
}

pub fn rate_point(
    channels: &ParallelChannels,
    alloc: &PowerAllocation,
    pulse: &PulseSpec,
    eps: f64,
    norm: DispersionNorm,
) -> Result<RatePoint> {
    let c = c_dn(channels, alloc);
    let v = v_dn(channels, alloc);
    let params = RateParams {
        block_length: channels.block_length,
        modes: channels.spatial_modes(),
        truncation: pulse.truncation,
        eps,
        delta: pulse.delta,
        beta: pulse.beta,
    };
    let rate = mccr(c, v, params.block_length, params.modes, params.truncation, eps, norm)?;
    Ok(RatePoint {
        c_dn: c,
        v_dn: v,
        mccr: rate.value,
        spectral_efficiency: spectral_efficiency(rate.value, pulse.delta, pulse.beta),
        clamped: rate.clamped,
        params,
    })
}

/// Infinite-blocklength capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBound {
    pub bits_per_channel_use: f64,
    pub bits_per_s_hz: f64,
    /// Grid actually used (the finer of the two compared).
    pub grid: usize,
}

/// Large-`N` limit of `C_DN`: the `σ_p²` spectrum is replaced by samples of
/// the Toeplitz symbol of `P†P`, whose empirical distribution the finite
/// spectra approach as `N` grows.
#[derive(Debug, Clone)]
pub struct CapacityBoundEvaluator {
    pulse: PulseSpec,
    coarse: Vec<f64>,
    fine: Vec<f64>,
}

fn symbol_magnitudes(coeffs: &PulseCoeffs, grid: usize) -> Vec<f64> {
    let mut values: Vec<f64> = coeffs.toeplitz_symbol(grid).into_iter().map(f64::sqrt).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

impl CapacityBoundEvaluator {
    pub fn new(coeffs: &PulseCoeffs, grid: usize) -> Result<Self> {
        if grid < MIN_SYMBOL_GRID {
            return Err(Error::InvalidParameter(format!(
                "symbol grid must have at least {MIN_SYMBOL_GRID} points, got {grid}"
            )));
        }
        Ok(Self {
            pulse: coeffs.spec,
            coarse: symbol_magnitudes(coeffs, grid),
            fine: symbol_magnitudes(coeffs, 2 * grid),
        })
    }

    fn on_grid(&self, samples: &[f64], sigma_h: &[f64], power: f64, noise_power: f64) -> Result<f64> {
        let spectrum = SingularSpectrum {
            sigma_h: sigma_h.to_vec(),
            sigma_p: samples.to_vec(),
        };
        let channels = combine(&spectrum, &self.pulse, samples.len(), noise_power)?;
        let alloc = waterfill(&channels, power)?;
        Ok(c_dn(&channels, &alloc))
    }

    pub fn evaluate(&self, sigma_h: &[f64], power: f64, noise_power: f64) -> Result<CapacityBound> {
        let coarse = self.on_grid(&self.coarse, sigma_h, power, noise_power)?;
        let fine = self.on_grid(&self.fine, sigma_h, power, noise_power)?;
        if (fine - coarse).abs() >= GRID_CONVERGENCE_TOL {
            return Err(Error::NotConverged("Toeplitz symbol grid"));
        }
        Ok(CapacityBound {
            bits_per_channel_use: fine,
            bits_per_s_hz: spectral_efficiency(fine, self.pulse.delta, self.pulse.beta),
            grid: self.fine.len(),
        })
    }
}

pub fn capacity_infinite_n(
    coeffs: &PulseCoeffs,
    sigma_h: &[f64],
    power: f64,
    noise_power: f64,
    grid: usize,
) -> Result<CapacityBound> {
    CapacityBoundEvaluator::new(coeffs, grid)?.evaluate(sigma_h, power, noise_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::uniform_allocation;
    use crate::pulse::{basis_coefficients, PulseSpec};

    fn single(gain: f64, block_length: usize) -> ParallelChannels {
        ParallelChannels {
            sigma_h: vec![1.0],
            sigma_p: vec![gain.sqrt(); block_length],
            gain: vec![gain; block_length],
            cost: vec![1.0; block_length],
            noise_power: 1.0,
            block_length,
            interval: 0.01,
        }
    }

    fn alloc(q: Vec<f64>) -> PowerAllocation {
        PowerAllocation {
            active: q.iter().map(|&v| v > 0.0).collect(),
            spent_power: q.iter().sum(),
            q,
            water_level: f64::NAN,
        }
    }

    #[test]
    fn zero_power_zero_rate() {
        let ch = single(2.0, 3);
        let a = alloc(vec![0.0; 3]);
        assert_eq!(c_dn(&ch, &a), 0.0);
        assert_eq!(v_dn(&ch, &a), 0.0);
    }

    #[test]
    fn snr_three_is_two_bits() {
        let ch = single(1.0, 1);
        assert!((c_dn(&ch, &alloc(vec![3.0])) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dispersion_at_unit_snr() {
        let ch = single(1.0, 1);
        let v = v_dn(&ch, &alloc(vec![1.0]));
        assert!((v - 0.75 * LOG2_E * LOG2_E).abs() < 1e-14);
        assert!((v - 1.5610).abs() < 1e-4);
    }

    #[test]
    fn dispersion_saturates() {
        let ch = single(1.0, 4);
        let v = v_dn(&ch, &alloc(vec![1e12; 4]));
        assert!((v - LOG2_E * LOG2_E).abs() < 1e-9);
    }

    #[test]
    fn median_error_drops_penalty() {
        let m = mccr(1.3, 0.9, 50, 2, 10, 0.5, DispersionNorm::AsPrinted).unwrap();
        let dn = 100.0f64;
        let expect = 50.0 / 70.0 * (1.3 + dn.log2() / (2.0 * dn));
        assert!((m.value - expect).abs() < 1e-15);
        let m0 = mccr(1.3, 0.0, 50, 2, 10, 1e-6, DispersionNorm::AsPrinted).unwrap();
        assert!((m0.value - expect).abs() < 1e-15);
    }

    #[test]
    fn negative_rate_is_clamped() {
        let m = mccr(0.01, 2.0, 2, 1, 10, 1e-9, DispersionNorm::AsPrinted).unwrap();
        assert!(m.clamped);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn per_block_norm_penalizes_more() {
        let a = mccr(3.0, 1.5, 100, 2, 10, 1e-6, DispersionNorm::AsPrinted).unwrap();
        let b = mccr(3.0, 1.5, 100, 2, 10, 1e-6, DispersionNorm::PerBlock).unwrap();
        assert!(b.value < a.value);
        assert!("per-block".parse::<DispersionNorm>().is_ok());
    }

    #[test]
    fn normalization() {
        assert_eq!(spectral_efficiency(1.7, 1.0, 0.0), 1.7);
        assert!((spectral_efficiency(1.0, 0.67, 0.5) - 1.0 / 1.005).abs() < 1e-15);
        assert_eq!(spectral_efficiency(2.0, 0.5, 1.0), 2.0);
    }

    #[test]
    fn nyquist_bound_is_classical_mimo() {
        let coeffs = basis_coefficients(&PulseSpec::with_defaults(1.0, 0.0).unwrap()).unwrap();
        let sigma_h = [1.3, 0.5];
        let power = 1000.0;
        let bound = capacity_infinite_n(&coeffs, &sigma_h, power, 1.0, 512).unwrap();
        // Classical water-filling over two eigenmodes at per-symbol SNR P·T.
        let snr = power * 0.01;
        let gains = [1.69, 0.25];
        let level = (snr + 1.0 / gains[0] + 1.0 / gains[1]) / 2.0;
        assert!(level > 1.0 / gains[1]);
        let expect: f64 = gains.iter().map(|g| (g * level).log2()).sum();
        assert!((bound.bits_per_channel_use - expect).abs() < 1e-9, "{} vs {expect}", bound.bits_per_channel_use);
    }

    #[test]
    fn small_grid_rejected() {
        let coeffs = basis_coefficients(&PulseSpec::with_defaults(1.0, 0.0).unwrap()).unwrap();
        assert!(capacity_infinite_n(&coeffs, &[1.0], 1.0, 1.0, 100).is_err());
    }

    #[test]
    fn rate_point_bounds() {
        let pulse = PulseSpec::with_defaults(0.67, 0.5).unwrap();
        let spectrum = SingularSpectrum {
            sigma_h: vec![1.2, 0.4],
            sigma_p: vec![1.3, 1.1, 0.8, 0.2],
        };
        let ch = combine(&spectrum, &pulse, 4, 1.0).unwrap();
        let a = uniform_allocation(&ch, 2000.0).unwrap();
        let p = rate_point(&ch, &a, &pulse, 1e-3, DispersionNorm::AsPrinted).unwrap();
        assert!(p.v_dn >= 0.0 && p.v_dn <= 2.0 * LOG2_E * LOG2_E);
        let dn = 8.0f64;
        assert!(p.mccr <= 4.0 / 24.0 * (p.c_dn + dn.log2() / (2.0 * dn)));
    }
}
