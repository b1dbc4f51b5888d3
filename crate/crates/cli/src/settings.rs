//! Run settings merged from flags, an optional key=value file and defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use ftn_mccr::allocation::AllocationMode;
use ftn_mccr::ensemble::{SnrReference, TrialConfig};
use ftn_mccr::mccr::DispersionNorm;
use ftn_mccr::sweep::OutputFormat;

/// Parameters that may come from the command line or the config file.
/// Every field is optional so that precedence can be resolved per key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Figure preset: fig1, fig2, fig3 or fig4.
    #[arg(long)]
    pub preset: Option<String>,
    /// Swept variable: N, snr_db, delta or eps.
    #[arg(long)]
    pub var: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; CSV goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// optimal, uniform or uniform-spatial.
    #[arg(long)]
    pub alloc: Option<String>,
    /// Also report the infinite-blocklength capacity.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub capacity_bound: Option<bool>,
    /// Draw fresh channels for every sweep point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub redraw: Option<bool>,
    /// Dispersion normalization: as-printed or per-block.
    #[arg(long)]
    pub dispersion: Option<String>,
    /// SNR reference: symbol (P·T/σ0²) or literal (P/σ0²).
    #[arg(long)]
    pub snr_ref: Option<String>,
    /// Transmit antennas.
    #[arg(short = 'k', long)]
    pub k: Option<usize>,
    /// Receive antennas.
    #[arg(short = 'm', long)]
    pub m: Option<usize>,
    /// Block length.
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    /// Tap truncation.
    #[arg(short = 'l', long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Symbol period T in seconds.
    #[arg(long)]
    pub symbol_period: Option<f64>,
    /// Samples of the Toeplitz symbol for the capacity bound.
    #[arg(long)]
    pub symbol_grid: Option<usize>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("config key `{key}`: cannot parse `{value}`: {e}"))
}

impl Overrides {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected key = value", path.display(), lineno + 1);
            };
            let key = key.trim().replace('-', "_");
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("{}:{}: duplicate key `{key}`", path.display(), lineno + 1);
            }
        }
        let mut o = Overrides::default();
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "preset" => o.preset = Some(v.into()),
                "var" => o.var = Some(v.into()),
                "values" => o.values = Some(v.into()),
                "trials" => o.trials = Some(parse(key, v)?),
                "seed" => o.seed = Some(parse_seed(v)?),
                "out" => o.out = Some(v.into()),
                "format" => o.format = Some(v.into()),
                "alloc" => o.alloc = Some(v.into()),
                "capacity_bound" => o.capacity_bound = Some(parse(key, v)?),
                "redraw" => o.redraw = Some(parse(key, v)?),
                "dispersion" => o.dispersion = Some(v.into()),
                "snr_ref" => o.snr_ref = Some(v.into()),
                "k" | "K" => o.k = Some(parse(key, v)?),
                "m" | "M" => o.m = Some(parse(key, v)?),
                "n" | "N" => o.n = Some(parse(key, v)?),
                "l" | "L" => o.l = Some(parse(key, v)?),
                "delta" => o.delta = Some(parse(key, v)?),
                "beta" => o.beta = Some(parse(key, v)?),
                "eps" => o.eps = Some(parse(key, v)?),
                "snr_db" => o.snr_db = Some(parse(key, v)?),
                "symbol_period" => o.symbol_period = Some(parse(key, v)?),
                "symbol_grid" => o.symbol_grid = Some(parse(key, v)?),
                other => bail!("{}: unknown config key `{other}`", path.display()),
            }
        }
        Ok(o)
    }

    /// Fields set here win over those of `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            preset: self.preset.or(fallback.preset),
            var: self.var.or(fallback.var),
            values: self.values.or(fallback.values),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            alloc: self.alloc.or(fallback.alloc),
            capacity_bound: self.capacity_bound.or(fallback.capacity_bound),
            redraw: self.redraw.or(fallback.redraw),
            dispersion: self.dispersion.or(fallback.dispersion),
            snr_ref: self.snr_ref.or(fallback.snr_ref),
            k: self.k.or(fallback.k),
            m: self.m.or(fallback.m),
            n: self.n.or(fallback.n),
            l: self.l.or(fallback.l),
            delta: self.delta.or(fallback.delta),
            beta: self.beta.or(fallback.beta),
            eps: self.eps.or(fallback.eps),
            snr_db: self.snr_db.or(fallback.snr_db),
            symbol_period: self.symbol_period.or(fallback.symbol_period),
            symbol_grid: self.symbol_grid.or(fallback.symbol_grid),
        }
    }

    /// Applies every set trial parameter to `config`.
    pub fn apply(&self, config: &mut TrialConfig) -> Result<()> {
        macro_rules! set {
            ($field:ident, $target:ident) => {
                if let Some(v) = self.$field {
                    config.$target = v;
                }
            };
        }
        set!(k, transmit);
        set!(m, receive);
        set!(n, block_length);
        set!(l, truncation);
        set!(delta, delta);
        set!(beta, beta);
        set!(eps, eps);
        set!(snr_db, snr_db);
        set!(symbol_period, symbol_period);
        set!(symbol_grid, symbol_grid);
        set!(trials, trials);
        set!(seed, seed);
        set!(capacity_bound, capacity_bound);
        if let Some(a) = &self.alloc {
            config.allocation = AllocationMode::from_str(a)?;
        }
        if let Some(d) = &self.dispersion {
            config.dispersion = DispersionNorm::from_str(d)?;
        }
        if let Some(r) = &self.snr_ref {
            config.snr_reference = SnrReference::from_str(r)?;
        }
        Ok(())
    }

    pub fn output_format(&self) -> Result<OutputFormat> {
        Ok(match &self.format {
            Some(f) => OutputFormat::from_str(f)?,
            None => OutputFormat::default(),
        })
    }

    pub fn sweep_values(&self) -> Result<Option<Vec<f64>>> {
        let Some(text) = &self.values else {
            return Ok(None);
        };
        let values = text
            .split(',')
            .map(|v| parse::<f64>("values", v.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(values))
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64> {
    let text = text.trim();
    let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => text.parse(),
    };
    parsed.map_err(|e| anyhow::anyhow!("invalid seed `{text}`: {e}"))
}
