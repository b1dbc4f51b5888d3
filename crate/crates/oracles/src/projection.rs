//! Time-domain projection of the raised-cosine pulse onto the sinc basis.
//!
//! `p_l = ∫ p(t)·φ(t - lδT) dt` with `φ(t) = sinc(t/δT)/√(δT)`. Writing
//! `u = t/T` removes `T`. The integrand is entire, so composite
//! Gauss–Legendre on subintervals shorter than the oscillation period is
//! accurate; convergence is checked by halving the subinterval width. The
//! window is chosen from the `C/u⁴` tail bound rather than fixed, because
//! for small `β` the pulse side lobes stay large far beyond a few dozen
//! symbol intervals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ftn_mccr::pulse::PulseSpec;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::{OracleError, Result};

/// Accuracy the projection is required to reach.
pub const PROJECTION_TOLERANCE: f64 = 1e-10;
const TAIL_BUDGET: f64 = 1e-11;
const ORDER: usize = 16;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

// cos(πβu)/(1 - 4β²u²), expanded near the removable singularity.
fn shaping(u: f64, beta: f64) -> f64 {
    let v = 2.0 * beta * u.abs();
    let s = 1.0 - v;
    if s.abs() < 1e-5 {
        let z = 0.5 * PI * s;
        0.5 * PI * (1.0 - z * z / 6.0) / (1.0 + v)
    } else {
        (0.5 * PI * v).cos() / ((1.0 - v) * (1.0 + v))
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] from the Jacobi matrix.
fn legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let jacobi = DMatrix::from_fn(ORDER, ORDER, |i, j| {
            let k = i.max(j) as f64;
            if i.abs_diff(j) == 1 {
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut rule: Vec<(f64, f64)> = (0..ORDER)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule.into_iter().unzip()
    })
}

fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, pieces: usize) -> f64 {
    let (nodes, weights) = legendre();
    let h = (b - a) / pieces as f64;
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for k in 0..pieces {
        let mid = a + (k as f64 + 0.5) * h;
        let piece: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum::<f64>()
            * 0.5
            * h;
        let t = sum + piece;
        carry += if sum.abs() >= piece.abs() {
            (sum - t) + piece
        } else {
            (piece - t) + sum
        };
        sum = t;
    }
    sum + carry
}

/// Half-width of the integration window in units of `T`.
fn window(delta: f64, beta: f64, l: i64) -> f64 {
    let constant = 4.0 * delta.sqrt() / (9.0 * PI * PI * beta * beta * 0.75f64.sqrt());
    let bound = (constant / TAIL_BUDGET).cbrt();
    bound.max(1.0 / beta).max(2.0 * (l.unsigned_abs() as f64) * delta) + 1.0
}

/// The `l`-th projection coefficient of the unit-energy pulse.
pub fn projection_oracle(spec: &PulseSpec, l: i64) -> Result<f64> {
    spec.validate()?;
    let (delta, beta) = (spec.delta, spec.beta);
    if beta == 0.0 {
        // The sinc pulse lies inside the basis band, so projecting is sampling:
        // p_l = √(δT)·p(lδT).
        return Ok(delta.sqrt() * sinc(l as f64 * delta));
    }
    let shift = l as f64 * delta;
    let integrand = |u: f64| sinc(u) * shaping(u, beta) * sinc((u - shift) / delta);
    let half = window(delta, beta, l);
    let scale = 1.0 / (delta * (1.0 - beta / 4.0)).sqrt();

    // subintervals no longer than half a basis period
    let mut pieces = (2.0 * half / (0.5 * delta)).ceil() as usize;
    let mut previous = scale * composite(&integrand, -half, half, pieces);
    let mut change = f64::INFINITY;
    for _ in 0..4 {
        pieces *= 2;
        let current = scale * composite(&integrand, -half, half, pieces);
        change = (current - previous).abs();
        if change < 0.1 * PROJECTION_TOLERANCE {
            return Ok(current);
        }
        previous = current;
    }
    Err(OracleError::NotConverged {
        what: "time-domain projection",
        change,
    })
}
