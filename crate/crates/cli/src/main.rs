//! Command-line driver for MCCR sweeps.

mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Parser;
use ftn_mccr::cache::SpectrumCache;
use ftn_mccr::ensemble::{Execution, TrialConfig};
use ftn_mccr::sweep::{self, emit, preset, run_sweep, slope_ratio, Curve, SweepSpec, SweepTable, SweepVar};

use settings::Overrides;

#[derive(Debug, Parser)]
#[command(name = "ftn-mccr", version, about = "Finite-blocklength rate sweeps for MIMO faster-than-Nyquist links")]
struct Cli {
    #[command(flatten)]
    flags: Overrides,
    /// key = value file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print DoF slopes (SNR sweeps only), relative to the first curve.
    #[arg(long)]
    dof: bool,
    /// Slope window in dB, `lo,hi`; defaults to the top 10 dB.
    #[arg(long, requires = "dof")]
    dof_window: Option<String>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

fn build_spec(settings: &Overrides) -> Result<SweepSpec> {
    let mut spec = match &settings.preset {
        Some(name) => preset(name)?,
        None => {
            let Some(var) = &settings.var else {
                bail!("either --preset or --var with --values is required");
            };
            SweepSpec {
                variable: SweepVar::from_str(var)?,
                values: Vec::new(),
                curves: vec![Curve::new("custom", TrialConfig::default())],
                redraw: false,
            }
        }
    };
    if let Some(var) = &settings.var {
        spec.variable = SweepVar::from_str(var)?;
    }
    if let Some(values) = settings.sweep_values()? {
        spec.values = values;
    } else if settings.preset.is_none() {
        bail!("--values is required without a preset");
    }
    if let Some(redraw) = settings.redraw {
        spec.redraw = redraw;
    }
    for curve in &mut spec.curves {
        settings.apply(&mut curve.config)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn report_slopes(table: &SweepTable, spec: &SweepSpec, window: Option<(f64, f64)>) -> Result<()> {
    let reference = &spec.curves[0].label;
    for curve in &spec.curves {
        let ratio = slope_ratio(table, &curve.label, reference, window)?;
        eprintln!("dof slope ratio {:>28} / {reference}: {ratio:.4}", curve.label);
    }
    Ok(())
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text.split_once(',').context("window must be `lo,hi`")?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn run(cli: Cli) -> Result<usize> {
    let file = match &cli.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let settings = cli.flags.or(file);
    let spec = build_spec(&settings)?;
    if cli.dof && spec.variable != SweepVar::SnrDb {
        bail!("--dof needs an snr_db sweep");
    }
    let format = settings.output_format()?;
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    let cache = SpectrumCache::from_env();
    if let Some(dir) = cache.dir() {
        log::info!("σ_p cache at {}", dir.display());
    }
    let table = run_sweep(&spec, &cache, execution)?;

    match &settings.out {
        Some(path) => {
            emit(&table, format, path)?;
            log::info!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match format {
                sweep::OutputFormat::Csv => sweep::write_csv(&table, &mut lock)?,
                sweep::OutputFormat::Json => sweep::write_json(&table, &mut lock)?,
            }
            lock.flush()?;
        }
    }

    if cli.dof {
        let window = cli.dof_window.as_deref().map(parse_window).transpose()?;
        report_slopes(&table, &spec, window)?;
    }
    Ok(table.failures())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} sweep point(s) failed; see the status column");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
