//! Adaptive Gauss–Kronrod (7/15) integration.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Integral of |f|, used to express tolerances relative to the integrand scale.
    pub abs_value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_value = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_value += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_value: abs_value * half.abs(),
    }
}

/// Integrates `f` over `[a, b]` by bisecting the worst subinterval until the
/// summed error estimate is below `max(abs_tol, rel_tol * ∫|f|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    integrate_pieces(&f, &[a, b], rel_tol, abs_tol)
}

/// Same as [`integrate`], but starts from the given breakpoints so that kinks
/// of a piecewise-smooth integrand fall on subinterval edges.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut segments: Vec<Segment> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            abs_value: 0.0,
        });
    }

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let abs_value: f64 = segments.iter().map(|s| s.abs_value).sum();
        let tol = abs_tol.max(rel_tol * abs_value);
        if error <= tol {
            return Ok(Estimate {
                value,
                error,
                abs_value,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if segments.len() >= MAX_INTERVALS || mid <= seg.a || mid >= seg.b {
            // Accept when what remains is pure roundoff.
            if error <= 50.0 * f64::EPSILON * abs_value.max(f64::MIN_POSITIVE) {
                return Ok(Estimate {
                    value,
                    error,
                    abs_value,
                });
            }
            return Err(Error::QuadratureNotConverged {
                a: breakpoints[0],
                b: breakpoints[breakpoints.len() - 1],
                error,
            });
        }
        segments[worst] = gk15(f, seg.a, mid);
        segments.push(gk15(f, mid, seg.b));
    }
}
