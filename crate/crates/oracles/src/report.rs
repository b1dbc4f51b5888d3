use std::fmt;

/// Side-by-side comparison of a main-path result and its oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub instance: String,
    pub main: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tolerance: f64,
    /// `max_abs <= tolerance`.
    pub pass: bool,
}

impl OracleReport {
    /// Compares elementwise. Length mismatches fail with infinite deviation.
    pub fn compare(
        name: impl Into<String>,
        instance: impl Into<String>,
        main: Vec<f64>,
        oracle: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
        if main.len() != oracle.len() {
            max_abs = f64::INFINITY;
            max_rel = f64::INFINITY;
        }
        for (a, b) in main.iter().zip(&oracle) {
            let d = (a - b).abs();
            if d.is_nan() {
                max_abs = f64::INFINITY;
                max_rel = f64::INFINITY;
                continue;
            }
            max_abs = max_abs.max(d);
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                max_rel = max_rel.max(d / scale);
            }
        }
        Self {
            name: name.into(),
            instance: instance.into(),
            main,
            oracle,
            max_abs,
            max_rel,
            tolerance,
            pass: max_abs <= tolerance,
        }
    }

    pub fn scalar(name: impl Into<String>, instance: impl Into<String>, main: f64, oracle: f64, tolerance: f64) -> Self {
        Self::compare(name, instance, vec![main], vec![oracle], tolerance)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: max abs {:.3e}, max rel {:.3e}, tol {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.instance,
            self.max_abs,
            self.max_rel,
            self.tolerance
        )
    }
}
