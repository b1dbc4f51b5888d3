//! Singular values of `H ⊗ P` from the explicitly formed Kronecker product.

use ftn_mccr::decomp::ChannelMatrix;
use ftn_mccr::pulse::IsiMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{OracleError, Result};

/// Largest `K·N` accepted.
pub const KRON_MAX_COLUMNS: usize = 64;

/// All `min(M(N+2L), KN)` singular values, descending.
pub fn kron_svd_oracle(channel: &ChannelMatrix, isi: &IsiMatrix) -> Result<Vec<f64>> {
    let h = channel.entries();
    let p = isi.to_dense();
    let cols = h.ncols() * p.ncols();
    if cols > KRON_MAX_COLUMNS {
        return Err(OracleError::SizeGuard(format!("K·N = {cols} exceeds {KRON_MAX_COLUMNS}")));
    }
    let (pr, pc) = p.shape();
    let dense = DMatrix::from_fn(h.nrows() * pr, cols, |i, j| h[(i / pr, j / pc)] * Complex64::from(p[(i % pr, j % pc)]));
    let svd = dense
        .try_svd(false, false, 1e-15, 10_000)
        .ok_or(OracleError::NotConverged {
            what: "dense SVD",
            change: f64::NAN,
        })?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}
