//! Power allocation over the parallel subchannels.
//!
//! The optimum maximizes `Σ log₂(1 + g_i q_i/σ0²)` subject to `Σ w_i q_i ≤ P`
//! and `q_i ≥ 0`. Writing `x_i = w_i q_i` (the share of the transmit budget a
//! subchannel consumes) turns this into classical water-filling with effective
//! gains `a_i = g_i/(w_i σ0²) = σ_h[d]²·NδT/σ0²`, which depend on the spatial
//! mode only. Every usable temporal index of a mode therefore sits at the same
//! transformed water level and the active set is found by a pass over the `D`
//! spatial modes.

use serde::{Deserialize, Serialize};

use crate::decomp::ParallelChannels;
use crate::error::{Error, Result};

const BUDGET_REL_TOL: f64 = 1e-9;
const BISECTION_REL_TOL: f64 = 1e-12;

/// How the transmit budget is spread over the subchannels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationMode {
    /// Water-filling optimum.
    Optimal,
    /// Equal transformed-domain symbol power on every subchannel.
    Uniform,
    /// Equal budget per spatial eigenmode; within a mode every usable
    /// temporal subchannel consumes the same share of the budget.
    UniformSpatial,
}

impl AllocationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AllocationMode::Optimal => "optimal",
            AllocationMode::Uniform => "uniform",
            AllocationMode::UniformSpatial => "uniform-spatial",
        }
    }
}

impl std::str::FromStr for AllocationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(AllocationMode::Optimal),
            "uniform" => Ok(AllocationMode::Uniform),
            "uniform-spatial" => Ok(AllocationMode::UniformSpatial),
            other => Err(Error::Config(format!("unknown allocation mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-subchannel input powers `σ_a²[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub q: Vec<f64>,
    /// `NδT/μ`. Zero when nothing is active; `NaN` for non-water-filling modes.
    pub water_level: f64,
    pub active: Vec<bool>,
    /// `Σ w_i q_i`.
    pub spent_power: f64,
}

impl PowerAllocation {
    fn from_q(channels: &ParallelChannels, q: Vec<f64>, water_level: f64) -> Self {
        let active = q.iter().map(|&v| v > 0.0).collect();
        let spent_power = spent(channels, &q);
        Self {
            q,
            water_level,
            active,
            spent_power,
        }
    }

    fn zeros(count: usize) -> Self {
        Self {
            q: vec![0.0; count],
            water_level: 0.0,
            active: vec![false; count],
            spent_power: 0.0,
        }
    }
}

fn spent(channels: &ParallelChannels, q: &[f64]) -> f64 {
    channels.cost.iter().zip(q).map(|(w, q)| w * q).sum()
}

/// `Σ log₂(1 + g_i q_i/σ0²)` (no `1/N` factor).
pub fn objective(channels: &ParallelChannels, q: &[f64]) -> f64 {
    channels
        .gain
        .iter()
        .zip(q)
        .map(|(g, q)| (g * q / channels.noise_power).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

fn check_budget(power: f64) -> Result<()> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidParameter(format!("power budget must be positive, got {power}")));
    }
    Ok(())
}

/// Optimal allocation.
pub fn waterfill(channels: &ParallelChannels, power: f64) -> Result<PowerAllocation> {
    check_budget(power)?;
    let usable = channels.usable_temporal();
    let per_mode = usable.iter().filter(|&&u| u).count();
    let modes: Vec<usize> = (0..channels.spatial_modes())
        .filter(|&d| channels.sigma_h[d] > 0.0)
        .collect();
    if per_mode == 0 || modes.is_empty() {
        return Ok(PowerAllocation::zeros(channels.count()));
    }

    let scale = channels.cost_scale() / channels.noise_power;
    // Inverse effective gain 1/a_d, ascending (σ_h is stored descending).
    let mut floors: Vec<(usize, f64)> = modes
        .iter()
        .map(|&d| (d, 1.0 / (channels.sigma_h[d].powi(2) * scale)))
        .collect();
    floors.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    // Budget per temporal index: Σ_d (ν - 1/a_d)⁺ = P / |usable|.
    let share = power / per_mode as f64;
    let mut level = f64::NAN;
    let mut cumulative = 0.0;
    let mut candidates = Vec::with_capacity(floors.len());
    for (k, &(_, floor)) in floors.iter().enumerate() {
        cumulative += floor;
        candidates.push((share + cumulative) / (k + 1) as f64);
    }
    for k in (0..floors.len()).rev() {
        if candidates[k] > floors[k].1 {
            level = candidates[k];
            break;
        }
    }

    let allocation = if level.is_finite() {
        let mut q = vec![0.0; channels.count()];
        for &(d, floor) in &floors {
            let x = level - floor;
            if x <= 0.0 {
                continue;
            }
            for (n, &ok) in usable.iter().enumerate() {
                if ok {
                    let i = d * channels.block_length + n;
                    q[i] = x / channels.cost[i];
                }
            }
        }
        PowerAllocation::from_q(channels, q, level * scale)
    } else {
        PowerAllocation::zeros(channels.count())
    };

    let budget_ok = (allocation.spent_power - power).abs() <= BUDGET_REL_TOL * power;
    if budget_ok && allocation.q.iter().all(|v| v.is_finite()) {
        Ok(allocation)
    } else {
        log::debug!("active-set water-filling missed the budget; falling back to bisection");
        waterfill_bisection(channels, power)
    }
}

/// Water-filling by bisection on the level, one channel at a time. Used when
/// the spatial active-set pass fails its budget check.
pub fn waterfill_bisection(channels: &ParallelChannels, power: f64) -> Result<PowerAllocation> {
    check_budget(power)?;
    let usable = channels.usable_temporal();
    let floors: Vec<Option<f64>> = (0..channels.count())
        .map(|i| {
            let n = channels.temporal_index(i);
            let (g, w) = (channels.gain[i], channels.cost[i]);
            (usable[n] && g > 0.0 && w > 0.0).then(|| w * channels.noise_power / g)
        })
        .collect();
    let Some(min_floor) = floors.iter().flatten().copied().reduce(f64::min) else {
        return Ok(PowerAllocation::zeros(channels.count()));
    };
    let used = |level: f64| -> f64 {
        floors.iter().flatten().map(|&f| (level - f).max(0.0)).sum()
    };
    let (mut lo, mut hi) = (min_floor, min_floor + power);
    while used(hi) < power {
        hi = min_floor + 2.0 * (hi - min_floor);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if used(mid) < power {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_REL_TOL * hi {
            break;
        }
    }
    let level = 0.5 * (lo + hi);
    let q = floors
        .iter()
        .zip(&channels.cost)
        .map(|(f, w)| match f {
            Some(f) if level > *f => (level - f) / w,
            _ => 0.0,
        })
        .collect();
    Ok(PowerAllocation::from_q(
        channels,
        q,
        level * channels.cost_scale() / channels.noise_power,
    ))
}

/// Same symbol power `q = P / Σ w_i` on every subchannel with nonzero cost.
pub fn uniform_allocation(channels: &ParallelChannels, power: f64) -> Result<PowerAllocation> {
    check_budget(power)?;
    let total: f64 = channels.cost.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NoUsableChannels);
    }
    let level = power / total;
    let q = channels
        .cost
        .iter()
        .map(|&w| if w > 0.0 { level } else { 0.0 })
        .collect();
    Ok(PowerAllocation::from_q(channels, q, f64::NAN))
}

/// Budget split evenly over the `D` spatial modes; inside a mode, each usable
/// temporal subchannel consumes an equal share `x`, i.e. `q_i = x / w_i`.
pub fn uniform_spatial_allocation(channels: &ParallelChannels, power: f64) -> Result<PowerAllocation> {
    check_budget(power)?;
    let usable = channels.usable_temporal();
    let per_mode = usable.iter().filter(|&&u| u).count();
    if per_mode == 0 {
        return Err(Error::NoUsableChannels);
    }
    let x = power / (channels.spatial_modes() * per_mode) as f64;
    let q = (0..channels.count())
        .map(|i| {
            if usable[channels.temporal_index(i)] {
                x / channels.cost[i]
            } else {
                0.0
            }
        })
        .collect();
    Ok(PowerAllocation::from_q(channels, q, f64::NAN))
}

pub fn allocate(channels: &ParallelChannels, power: f64, mode: AllocationMode) -> Result<PowerAllocation> {
    match mode {
        AllocationMode::Optimal => waterfill(channels, power),
        AllocationMode::Uniform => uniform_allocation(channels, power),
        AllocationMode::UniformSpatial => uniform_spatial_allocation(channels, power),
    }
}
