//! Parameter sweeps, figure presets, DoF slopes and table emission.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::allocation::AllocationMode;
use crate::cache::SpectrumCache;
use crate::ensemble::{run_ensemble_with, EnsembleResult, Execution, TrialConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepVar {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "eps")]
    Eps,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::N => "N",
            SweepVar::SnrDb => "snr_db",
            SweepVar::Delta => "delta",
            SweepVar::Eps => "eps",
        }
    }

    /// Overrides this variable in `base`.
    pub fn apply(&self, base: &TrialConfig, value: f64) -> Result<TrialConfig> {
        let mut config = *base;
        match self {
            SweepVar::N => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(Error::Config(format!("N must be a positive integer, got {value}")));
                }
                config.block_length = value as usize;
            }
            SweepVar::SnrDb => config.snr_db = value,
            SweepVar::Delta => config.delta = value,
            SweepVar::Eps => config.eps = value,
        }
        Ok(config)
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "block_length" => Ok(SweepVar::N),
            "snr_db" | "snr" => Ok(SweepVar::SnrDb),
            "delta" => Ok(SweepVar::Delta),
            "eps" => Ok(SweepVar::Eps),
            other => Err(Error::Config(format!("unknown sweep variable `{other}`"))),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One plotted series: a base configuration swept along the shared axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config: TrialConfig,
}

impl Curve {
    pub fn new(label: impl Into<String>, config: TrialConfig) -> Self {
        Self {
            label: label.into(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub curves: Vec<Curve>,
    /// Draw fresh channels per point instead of reusing the seed family.
    pub redraw: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            return Err(Error::Config("sweep has no curves".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config("sweep values must be strictly monotone".into()));
        }
        Ok(())
    }

    /// The configuration evaluated at `values[point]` on curve `curve`.
    pub fn point_config(&self, curve: usize, point: usize) -> Result<TrialConfig> {
        let mut config = self.variable.apply(&self.curves[curve].config, self.values[point])?;
        if self.redraw {
            config.seed = redraw_seed(config.seed, curve, point);
        }
        Ok(config)
    }

    pub fn curve(&self, label: &str) -> Option<usize> {
        self.curves.iter().position(|c| c.label == label)
    }
}

fn redraw_seed(seed: u64, curve: usize, point: usize) -> u64 {
    // splitmix64 finalizer over the point coordinates
    let mut z = seed ^ ((curve as u64) << 32 | point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub curve: String,
    pub sweep_value: f64,
    pub config: TrialConfig,
    /// `Err` carries the failure message reported in the status column.
    pub outcome: std::result::Result<EnsembleResult, String>,
}

impl SweepRow {
    pub fn ok(&self) -> Option<&EnsembleResult> {
        self.outcome.as_ref().ok()
    }

    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".to_string(),
            Err(msg) => format!("error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVar,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Rows of one curve, in sweep order.
    pub fn curve<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.curve == label)
    }

    /// The successful result of `label` at `value`.
    pub fn lookup<'a>(&'a self, label: &'a str, value: f64) -> Option<&'a EnsembleResult> {
        self.curve(label).find(|r| r.sweep_value == value).and_then(SweepRow::ok)
    }
}

/// Evaluates every curve at every sweep value. Point failures are recorded
/// in the row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec, cache: &SpectrumCache, execution: Execution) -> Result<SweepTable> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.curves.len() * spec.values.len());
    for (c, curve) in spec.curves.iter().enumerate() {
        for (p, &value) in spec.values.iter().enumerate() {
            let config = spec.point_config(c, p);
            let outcome = match &config {
                Ok(config) => run_ensemble_with(config, cache, execution).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            if let Err(msg) = &outcome {
                log::error!("{} {}={value}: {msg}", curve.label, spec.variable);
            } else {
                log::info!("{} {}={value} done", curve.label, spec.variable);
            }
            rows.push(SweepRow {
                curve: curve.label.clone(),
                sweep_value: value,
                config: config.unwrap_or(curve.config),
                outcome,
            });
        }
    }
    Ok(SweepTable {
        variable: spec.variable,
        rows,
    })
}

pub const PRESETS: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];

/// Block lengths of the first two presets.
pub const FIG1_BLOCK_LENGTHS: [f64; 8] = [10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0];
pub const FIG4_DELTAS: [f64; 10] = [0.6, 0.65, 0.67, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];
/// High-SNR window used for slopes in the third preset, in dB.
pub const FIG3_SLOPE_WINDOW: (f64, f64) = (20.0, 30.0);

fn mimo(k: usize, m: usize, delta: f64) -> TrialConfig {
    TrialConfig {
        transmit: k,
        receive: m,
        delta,
        beta: 0.5,
        snr_db: 20.0,
        eps: 1e-6,
        ..TrialConfig::default()
    }
}

/// The figure presets. Curves of one preset share the default seed.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let spec = match name {
        "fig1" => SweepSpec {
            variable: SweepVar::N,
            values: FIG1_BLOCK_LENGTHS.to_vec(),
            curves: vec![
                Curve::new("2x2 delta=0.67 optimal", mimo(2, 2, 0.67)),
                Curve::new(
                    "2x2 delta=0.67 uniform",
                    TrialConfig {
                        allocation: AllocationMode::Uniform,
                        ..mimo(2, 2, 0.67)
                    },
                ),
                Curve::new("2x2 delta=1 optimal", mimo(2, 2, 1.0)),
                Curve::new("1x1 delta=0.67 optimal", mimo(1, 1, 0.67)),
                Curve::new("1x1 delta=1 optimal", mimo(1, 1, 1.0)),
            ],
            redraw: false,
        },
        "fig2" => {
            let mut curves = Vec::new();
            for delta in [0.67, 1.0] {
                for eps in [1e-6, 1e-9] {
                    curves.push(Curve::new(
                        format!("2x2 delta={delta} eps={eps:e}"),
                        TrialConfig {
                            snr_db: 10.0,
                            eps,
                            ..mimo(2, 2, delta)
                        },
                    ));
                }
            }
            SweepSpec {
                variable: SweepVar::N,
                values: FIG1_BLOCK_LENGTHS.to_vec(),
                curves,
                redraw: false,
            }
        }
        "fig3" => {
            let base = |k: usize, delta: f64, beta: f64| TrialConfig {
                block_length: 100,
                beta,
                ..mimo(k, k, delta)
            };
            let mut curves = vec![Curve::new("1x1 nyquist", base(1, 1.0, 0.5))];
            for (delta, beta) in [(0.67, 0.5), (1.0, 0.5), (0.67, 0.6)] {
                for k in [1, 2] {
                    curves.push(Curve::new(format!("{k}x{k} delta={delta} beta={beta}"), base(k, delta, beta)));
                }
            }
            SweepSpec {
                variable: SweepVar::SnrDb,
                values: (0..=15).map(|i| 2.0 * i as f64).collect(),
                curves,
                redraw: false,
            }
        }
        "fig4" => SweepSpec {
            variable: SweepVar::Delta,
            values: FIG4_DELTAS.to_vec(),
            curves: [20usize, 200, 2000]
                .into_iter()
                .map(|n| {
                    Curve::new(
                        format!("2x2 N={n}"),
                        TrialConfig {
                            block_length: n,
                            capacity_bound: true,
                            ..mimo(2, 2, 0.67)
                        },
                    )
                })
                .collect(),
            redraw: false,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}

/// Least-squares slope of `se` against `snr_db` over the window
/// (default: the top 10 dB of the sweep), in bits/s/Hz per dB.
pub fn estimate_dof_slope(snr_db: &[f64], se: &[f64], window: Option<(f64, f64)>) -> Result<f64> {
    if snr_db.len() != se.len() {
        return Err(Error::InvalidParameter("SNR and efficiency lengths differ".into()));
    }
    let (lo, hi) = match window {
        Some(w) => w,
        None => {
            let top = snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (top - 10.0, top)
        }
    };
    let points: Vec<(f64, f64)> = snr_db
        .iter()
        .zip(se)
        .filter(|(s, _)| **s >= lo - 1e-9 && **s <= hi + 1e-9)
        .map(|(s, e)| (*s, *e))
        .collect();
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "slope needs at least 3 points in [{lo}, {hi}] dB, found {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope window has a single SNR value".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of curve `num` divided by slope of curve `den` within an SNR sweep.
pub fn slope_ratio(table: &SweepTable, num: &str, den: &str, window: Option<(f64, f64)>) -> Result<f64> {
    if table.variable != SweepVar::SnrDb {
        return Err(Error::InvalidParameter("slopes need an SNR sweep".into()));
    }
    let slope = |label: &str| -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = table
            .curve(label)
            .filter_map(|r| r.ok().map(|res| (r.sweep_value, res.mean_spectral_efficiency)))
            .unzip();
        if x.is_empty() {
            return Err(Error::InvalidParameter(format!("no successful rows for curve `{label}`")));
        }
        estimate_dof_slope(&x, &y, window)
    };
    Ok(slope(num)? / slope(den)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 18] = [
    "sweep_var",
    "sweep_value",
    "K",
    "M",
    "N",
    "L",
    "delta",
    "beta",
    "eps",
    "snr_db",
    "allocation_mode",
    "trials",
    "seed",
    "mean_mccr_bits_per_cu",
    "mean_se_bits_per_s_hz",
    "std_error",
    "capacity_bound_bits_per_s_hz",
    "status",
];

/// Row record shared by both output formats. Absent values are `None`.
#[derive(Debug, Clone, Serialize)]
struct Record {
    sweep_var: &'static str,
    sweep_value: f64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    l: usize,
    delta: f64,
    beta: f64,
    eps: f64,
    snr_db: f64,
    allocation_mode: &'static str,
    trials: usize,
    seed: u64,
    mean_mccr_bits_per_cu: Option<f64>,
    mean_se_bits_per_s_hz: Option<f64>,
    std_error: Option<f64>,
    capacity_bound_bits_per_s_hz: Option<f64>,
    status: String,
}

impl Record {
    fn new(variable: SweepVar, row: &SweepRow) -> Self {
        let c = &row.config;
        let ok = row.ok();
        Self {
            sweep_var: variable.as_str(),
            sweep_value: row.sweep_value,
            k: c.transmit,
            m: c.receive,
            n: c.block_length,
            l: c.truncation,
            delta: c.delta,
            beta: c.beta,
            eps: c.eps,
            snr_db: c.snr_db,
            allocation_mode: c.allocation.as_str(),
            trials: c.trials,
            seed: c.seed,
            mean_mccr_bits_per_cu: ok.map(|r| r.mean_mccr),
            mean_se_bits_per_s_hz: ok.map(|r| r.mean_spectral_efficiency),
            std_error: ok.map(|r| r.std_error),
            capacity_bound_bits_per_s_hz: ok.and_then(|r| r.mean_capacity_bound),
            status: row.status(),
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
        vec![
            self.sweep_var.to_string(),
            float(self.sweep_value),
            self.k.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.l.to_string(),
            float(self.delta),
            float(self.beta),
            float(self.eps),
            float(self.snr_db),
            self.allocation_mode.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            opt(self.mean_mccr_bits_per_cu),
            opt(self.mean_se_bits_per_s_hz),
            opt(self.std_error),
            opt(self.capacity_bound_bits_per_s_hz),
            self.status.clone(),
        ]
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in &table.rows {
        w.write_record(Record::new(table.variable, row).csv_fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let records: Vec<Record> = table.rows.iter().map(|r| Record::new(table.variable, r)).collect();
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &records)?;
    out.write_all(b"\n").map_err(|e| Error::Config(format!("write failed: {e}")))?;
    Ok(())
}

/// Writes `table` to `path` in the given format.
pub fn emit(table: &SweepTable, format: OutputFormat, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidParameter("nothing to emit: empty table".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(table, &mut out)?,
        OutputFormat::Json => write_json(table, &mut out)?,
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
