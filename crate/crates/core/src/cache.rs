//! Memoization of the ISI singular spectrum `σ_p`, in memory and on disk.
//!
//! `σ_p` depends on `(N, δ, β, L)` only (`T` cancels out of the projection
//! taps), so one spectrum serves every Monte Carlo trial and every SNR point.
//! Files are plain text with a key header, the trace `N·r[0]`, and an FNV-1a
//! checksum over the value bits; they are written to a temporary name and
//! renamed into place, so concurrent writers of the same key are idempotent.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::decomp::isi_singular_values;
use crate::error::{Error, Result};
use crate::pulse::{build_isi_matrix, PulseCoeffs};

/// Environment variable naming the on-disk cache directory.
pub const CACHE_DIR_ENV: &str = "FTN_MCCR_CACHE_DIR";

const HEADER: &str = "# ftn-mccr sigma_p v1";
const TRACE_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectrumKey {
    pub block_length: usize,
    pub truncation: usize,
    delta_bits: u64,
    beta_bits: u64,
}

impl SpectrumKey {
    pub fn new(coeffs: &PulseCoeffs, block_length: usize) -> Self {
        Self {
            block_length,
            truncation: coeffs.spec.truncation,
            delta_bits: coeffs.spec.delta.to_bits(),
            beta_bits: coeffs.spec.beta.to_bits(),
        }
    }

    pub fn delta(&self) -> f64 {
        f64::from_bits(self.delta_bits)
    }

    pub fn beta(&self) -> f64 {
        f64::from_bits(self.beta_bits)
    }

    pub fn file_name(&self) -> String {
        format!(
            "sigma_p_n{}_l{}_d{:016x}_b{:016x}.txt",
            self.block_length, self.truncation, self.delta_bits, self.beta_bits
        )
    }
}

/// A spectrum handed out by the cache.
#[derive(Debug, Clone)]
pub struct CachedSpectrum {
    pub sigma_p: Arc<Vec<f64>>,
    /// True when the values came from memory or disk rather than a fresh solve.
    pub hit: bool,
}

#[derive(Debug, Default)]
pub struct SpectrumCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<SpectrumKey, Arc<Vec<f64>>>>,
}

fn fnv1a(values: &[f64]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl SpectrumCache {
    /// Process-local cache with no disk persistence.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Cache persisted under `dir`.
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            memory: Mutex::default(),
        }
    }

    /// Cache under `$FTN_MCCR_CACHE_DIR`, or `<tmp>/ftn-mccr-cache`.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::at(dir),
            _ => Self::at(std::env::temp_dir().join("ftn-mccr-cache")),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, key: &SpectrumKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(key.file_name()))
    }

    /// Returns `σ_p` for `N` and the pulse of `coeffs`, computing and
    /// persisting it on a miss.
    pub fn sigma_p(&self, coeffs: &PulseCoeffs, block_length: usize) -> Result<CachedSpectrum> {
        let key = SpectrumKey::new(coeffs, block_length);
        let mut memory = self.memory.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        if let Some(values) = memory.get(&key) {
            return Ok(CachedSpectrum {
                sigma_p: Arc::clone(values),
                hit: true,
            });
        }
        let trace = block_length as f64 * coeffs.captured_energy;

        if let Some(path) = self.path_for(&key) {
            if path.exists() {
                match read_spectrum(&path, &key, trace) {
                    Ok(values) => {
                        let values = Arc::new(values);
                        memory.insert(key, Arc::clone(&values));
                        return Ok(CachedSpectrum {
                            sigma_p: values,
                            hit: true,
                        });
                    }
                    Err(reason) => {
                        log::warn!("discarding cache entry {}: {reason}; recomputing", path.display());
                    }
                }
            }
        }

        let isi = build_isi_matrix(coeffs, block_length)?;
        let values = isi_singular_values(&isi)?;
        if let Some(path) = self.path_for(&key) {
            write_spectrum(&path, &key, trace, &values)?;
        }
        let values = Arc::new(values);
        memory.insert(key, Arc::clone(&values));
        Ok(CachedSpectrum {
            sigma_p: values,
            hit: false,
        })
    }
}

fn write_spectrum(path: &Path, key: &SpectrumKey, trace: f64, values: &[f64]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut body = String::with_capacity(32 * (values.len() + 8));
    let _ = writeln!(body, "{HEADER}");
    let _ = writeln!(body, "block_length={}", key.block_length);
    let _ = writeln!(body, "truncation={}", key.truncation);
    let _ = writeln!(body, "delta={:e}", key.delta());
    let _ = writeln!(body, "beta={:e}", key.beta());
    let _ = writeln!(body, "trace={trace:e}");
    let _ = writeln!(body, "checksum={:016x}", fnv1a(values));
    for v in values {
        let _ = writeln!(body, "{v:e}");
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parses and validates one cache file. The error is a human-readable reason.
fn read_spectrum(path: &Path, key: &SpectrumKey, expected_trace: f64) -> std::result::Result<Vec<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err("missing header".into());
    }
    let mut field = |name: &str| -> std::result::Result<String, String> {
        let line = lines.next().ok_or_else(|| format!("missing {name}"))?;
        line.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| format!("expected {name}, found `{line}`"))
    };
    let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| e.to_string());
    let block_length: usize = field("block_length")?.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    let truncation: usize = field("truncation")?.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    let delta = parse_f64(field("delta")?)?;
    let beta = parse_f64(field("beta")?)?;
    let trace = parse_f64(field("trace")?)?;
    let checksum = u64::from_str_radix(&field("checksum")?, 16).map_err(|e| e.to_string())?;
    if block_length != key.block_length
        || truncation != key.truncation
        || delta.to_bits() != key.delta_bits
        || beta.to_bits() != key.beta_bits
    {
        return Err("key mismatch".into());
    }
    let values = lines
        .map(|l| l.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if values.len() != key.block_length {
        return Err(format!("expected {} values, found {}", key.block_length, values.len()));
    }
    if fnv1a(&values) != checksum {
        return Err("checksum mismatch".into());
    }
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if relative_gap(sum_sq, expected_trace) > TRACE_REL_TOL || relative_gap(trace, expected_trace) > TRACE_REL_TOL {
        return Err(format!("trace {sum_sq:e} does not match N·r[0] = {expected_trace:e}"));
    }
    Ok(values)
}
