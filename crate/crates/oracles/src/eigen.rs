//! Cyclic Jacobi eigenvalues for small symmetric matrices.

use ftn_mccr::pulse::IsiMatrix;
use nalgebra::DMatrix;

use crate::{OracleError, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, descending.
pub fn jacobi_eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(OracleError::Invalid("matrix is not square".into()));
    }
    let mut a = matrix.clone();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            values.sort_by(|x, y| y.total_cmp(x));
            return Ok(values);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(OracleError::NotConverged {
        what: "Jacobi eigenvalues",
        change: f64::NAN,
    })
}

/// `σ_p` from the explicitly formed Gram matrix `PᵀP`, descending.
pub fn gram_eigen_oracle(isi: &IsiMatrix) -> Result<Vec<f64>> {
    let p = isi.to_dense();
    let gram = p.transpose() * &p;
    Ok(jacobi_eigenvalues(&gram)?.into_iter().map(|v| v.max(0.0).sqrt()).collect())
}
