//! Raised-cosine transmit pulse, its projection onto the δT-spaced sinc basis,
//! and the banded ISI matrix built from the projection taps.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Symbol period used by all figure presets, in seconds.
pub const DEFAULT_SYMBOL_PERIOD: f64 = 0.01;
/// One-sided number of projection taps kept by default.
pub const DEFAULT_TRUNCATION: usize = 10;

const PROJECTION_REL_TOL: f64 = 1e-10;

/// Pulse and basis parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Nyquist symbol period `T` in seconds.
    pub symbol_period: f64,
    /// Acceleration factor `δ ∈ (0, 1]`; symbols are sent every `δT`.
    pub delta: f64,
    /// Raised-cosine roll-off `β ∈ [0, 1]`.
    pub beta: f64,
    /// Number of one-sided taps `L` kept after truncation.
    pub truncation: usize,
}

impl PulseSpec {
    pub fn new(symbol_period: f64, delta: f64, beta: f64, truncation: usize) -> Result<Self> {
        let spec = Self {
            symbol_period,
            delta,
            beta,
            truncation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pulse with the default `T = 0.01` and `L = 10`.
    pub fn with_defaults(delta: f64, beta: f64) -> Result<Self> {
        Self::new(DEFAULT_SYMBOL_PERIOD, delta, beta, DEFAULT_TRUNCATION)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_period.is_finite() && self.symbol_period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "symbol period must be positive, got {}",
                self.symbol_period
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "acceleration factor must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "roll-off must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.truncation == 0 {
            return Err(Error::InvalidParameter("truncation L must be at least 1".into()));
        }
        Ok(())
    }

    /// Signalling interval `δT`.
    pub fn interval(&self) -> f64 {
        self.delta * self.symbol_period
    }

    /// Energy of the un-normalized raised cosine, `T(1 - β/4)`.
    fn raw_energy(&self) -> f64 {
        self.symbol_period * (1.0 - self.beta / 4.0)
    }

    /// One-sided edge of the flat basis spectrum, `1/(2δT)`.
    pub fn basis_band_edge(&self) -> f64 {
        0.5 / self.interval()
    }
}

/// `sin(x)/x` with the removable singularity filled in.
fn sin_over(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    sin_over(PI * x)
}

/// Unit-energy raised-cosine pulse `p(t)`.
pub fn raised_cosine(t: f64, spec: &PulseSpec) -> f64 {
    let x = t / spec.symbol_period;
    // cos(πu/2)/(1-u²) rewritten as (π/2)·sin(z)/z/(1+u) with z = π(1-u)/2,
    // which is regular at u = 1 (t = ±T/(2β)).
    let u = (2.0 * spec.beta * x).abs();
    let shaping = 0.5 * PI * sin_over(0.5 * PI * (1.0 - u)) / (1.0 + u);
    sinc(x) * shaping / spec.raw_energy().sqrt()
}

/// Fourier transform of [`raised_cosine`] at frequency `f` (Hz).
pub fn raised_cosine_spectrum(f: f64, spec: &PulseSpec) -> f64 {
    let t = spec.symbol_period;
    let beta = spec.beta;
    let f = f.abs();
    let flat_edge = (1.0 - beta) / (2.0 * t);
    let stop_edge = (1.0 + beta) / (2.0 * t);
    let amplitude = if f <= flat_edge {
        t
    } else if f <= stop_edge {
        0.5 * t * (1.0 + (PI * t / beta * (f - flat_edge)).cos())
    } else {
        0.0
    };
    amplitude / spec.raw_energy().sqrt()
}

/// Projection taps `p_{-L..L}` of the pulse onto the sinc basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseCoeffs {
    pub spec: PulseSpec,
    /// Dense taps, `taps[l + L] = p_l`.
    pub taps: Vec<f64>,
    /// `Σ_{|l|≤L} p_l²`.
    pub captured_energy: f64,
    /// Energy of the pulse inside the basis band, `Σ_{l∈ℤ} p_l²`.
    pub band_energy: f64,
    /// Fraction of the in-band energy lost to truncation.
    pub discarded_energy: f64,
}

impl PulseCoeffs {
    pub fn truncation(&self) -> usize {
        self.spec.truncation
    }

    /// Tap `p_l`, zero outside `|l| ≤ L`.
    pub fn tap(&self, l: i64) -> f64 {
        let half = self.spec.truncation as i64;
        if l.abs() > half {
            0.0
        } else {
            self.taps[(l + half) as usize]
        }
    }

    /// Autocorrelation `r[k] = Σ_l p_l p_{l+k}` for `k = 0..=2L`.
    pub fn autocorrelation(&self) -> Vec<f64> {
        let len = self.taps.len();
        (0..len)
            .map(|k| (0..len - k).map(|i| self.taps[i] * self.taps[i + k]).sum())
            .collect()
    }

    /// Toeplitz symbol `f(ω) = Σ_k r[k] e^{jkω}` of `P†P`, sampled at
    /// `ω_j = 2πj/grid`. Evaluated as `|Σ_l p_l e^{jlω}|²`, which is the same
    /// trigonometric polynomial and is nonnegative by construction.
    pub fn toeplitz_symbol(&self, grid: usize) -> Vec<f64> {
        let half = self.spec.truncation as f64;
        (0..grid)
            .map(|j| {
                let omega = 2.0 * PI * j as f64 / grid as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (idx, p) in self.taps.iter().enumerate() {
                    let phase = (idx as f64 - half) * omega;
                    re += p * phase.cos();
                    im += p * phase.sin();
                }
                re * re + im * im
            })
            .collect()
    }
}

/// Computes `p_l = √(δT) ∫_{-B}^{B} P̂(f) e^{j2πflδT} df`, `B = 1/(2δT)`.
pub fn basis_coefficients(spec: &PulseSpec) -> Result<PulseCoeffs> {
    spec.validate()?;
    let band = spec.basis_band_edge();
    let interval = spec.interval();
    let t = spec.symbol_period;

    let mut breaks = vec![0.0];
    for edge in [(1.0 - spec.beta) / (2.0 * t), (1.0 + spec.beta) / (2.0 * t)] {
        if edge > 0.0 && edge < band {
            breaks.push(edge);
        }
    }
    breaks.push(band);
    breaks.dedup();

    let half = spec.truncation;
    let mut one_sided = Vec::with_capacity(half + 1);
    for l in 0..=half {
        let freq = 2.0 * PI * l as f64 * interval;
        let integrand = |f: f64| raised_cosine_spectrum(f, spec) * (freq * f).cos();
        let est = quadrature::integrate_pieces(&integrand, &breaks, PROJECTION_REL_TOL, 1e-300)?;
        one_sided.push(2.0 * interval.sqrt() * est.value);
    }

    let mut taps = Vec::with_capacity(2 * half + 1);
    taps.extend(one_sided.iter().rev());
    taps.extend(one_sided.iter().skip(1));

    let energy_integrand = |f: f64| raised_cosine_spectrum(f, spec).powi(2);
    let band_energy = 2.0 * quadrature::integrate_pieces(&energy_integrand, &breaks, 1e-13, 1e-300)?.value;
    let captured_energy: f64 = taps.iter().map(|p| p * p).sum();
    let discarded_energy = ((band_energy - captured_energy) / band_energy).max(0.0);

    Ok(PulseCoeffs {
        spec: *spec,
        taps,
        captured_energy,
        band_energy,
        discarded_energy,
    })
}

/// The `(N+2L) × N` banded convolution matrix `(P)_{i,j} = p_{i-j-L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsiMatrix {
    cols: usize,
    taps: Vec<f64>,
}

impl IsiMatrix {
    pub fn rows(&self) -> usize {
        self.cols + self.taps.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn truncation(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows() && col < self.cols, "index out of bounds");
        row.checked_sub(col)
            .and_then(|offset| self.taps.get(offset))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.cols, |i, j| self.get(i, j))
    }

    /// `P†P` assembled from the autocorrelation; Toeplitz with bandwidth `2L`.
    pub fn gram(&self) -> DMatrix<f64> {
        let len = self.taps.len();
        let r: Vec<f64> = (0..len)
            .map(|k| (0..len - k).map(|i| self.taps[i] * self.taps[i + k]).sum())
            .collect();
        DMatrix::from_fn(self.cols, self.cols, |i, j| {
            r.get(i.abs_diff(j)).copied().unwrap_or(0.0)
        })
    }

    /// `trace(P†P) = N·r[0]`.
    pub fn gram_trace(&self) -> f64 {
        self.cols as f64 * self.taps.iter().map(|p| p * p).sum::<f64>()
    }
}

pub fn build_isi_matrix(coeffs: &PulseCoeffs, n: usize) -> Result<IsiMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length N must be at least 1".into()));
    }
    Ok(IsiMatrix {
        cols: n,
        taps: coeffs.taps.clone(),
    })
}
