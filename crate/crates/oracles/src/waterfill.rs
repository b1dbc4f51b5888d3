//! Water-filling by projected-gradient ascent plus pairwise exchange.
//!
//! Works on budget shares `x_i = w_i q_i` on the simplex `Σx = P` with
//! per-subchannel effective gains `a_i = g_i/(w_i σ0²)`; nothing about the
//! spatial/temporal structure is assumed. Gradient ascent with diminishing
//! steps gets close; exchange steps then move budget between pairs of
//! subchannels, each solved in closed form, until no pair improves.

use ftn_mccr::decomp::ParallelChannels;

use crate::{OracleError, Result};

const GRADIENT_ITERATIONS: usize = 4000;
const EXCHANGE_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAllocation {
    pub q: Vec<f64>,
    /// `Σ log₂(1 + g_i q_i/σ0²)`.
    pub objective: f64,
    pub exchange_sweeps: usize,
}

fn objective(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| (a * x).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
fn project_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - total) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Optimal split of `x_i + x_j` between two subchannels.
fn exchange(ai: f64, aj: f64, xi: f64, xj: f64) -> (f64, f64) {
    let total = xi + xj;
    // equal water level: 1/a_i + x_i = 1/a_j + x_j
    let target = 0.5 * (total + 1.0 / aj - 1.0 / ai);
    let new_i = target.clamp(0.0, total);
    (new_i, total - new_i)
}

pub fn waterfill_oracle(channels: &ParallelChannels, power: f64) -> Result<OracleAllocation> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(OracleError::Invalid(format!("power must be positive, got {power}")));
    }
    let count = channels.gain.len();
    let mut a = Vec::with_capacity(count);
    let mut live = Vec::new();
    for i in 0..count {
        let (g, w) = (channels.gain[i], channels.cost[i]);
        if g > 0.0 && w > 0.0 {
            a.push(g / (w * channels.noise_power));
            live.push(i);
        } else if g > 0.0 {
            return Err(OracleError::Invalid(format!("subchannel {i} has gain but no cost")));
        }
    }
    if live.is_empty() {
        return Err(OracleError::Invalid("no subchannel has positive gain".into()));
    }

    let n = live.len();
    let mut x = vec![power / n as f64; n];
    let a_max = a.iter().copied().fold(0.0, f64::max);
    for k in 0..GRADIENT_ITERATIONS {
        let step = power / (1.0 + k as f64).sqrt() / (1.0 + a_max * power);
        let y: Vec<f64> = x
            .iter()
            .zip(&a)
            .map(|(x, a)| x + step * power * a / (1.0 + a * x))
            .collect();
        x = project_simplex(&y, power);
    }

    let mut sweeps = 0;
    loop {
        if sweeps == EXCHANGE_SWEEPS {
            return Err(OracleError::IterationBudget(EXCHANGE_SWEEPS));
        }
        sweeps += 1;
        let mut moved = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let (xi, xj) = exchange(a[i], a[j], x[i], x[j]);
                moved = moved.max((xi - x[i]).abs());
                x[i] = xi;
                x[j] = xj;
            }
        }
        if moved <= 1e-15 * power {
            break;
        }
    }

    let mut q = vec![0.0; count];
    for (k, &i) in live.iter().enumerate() {
        q[i] = x[k] / channels.cost[i];
    }
    Ok(OracleAllocation {
        objective: objective(&a, &x),
        q,
        exchange_sweeps: sweeps,
    })
}
