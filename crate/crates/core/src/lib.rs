pub mod allocation;
pub mod banded;
pub mod cache;
pub mod decomp;
pub mod ensemble;
pub mod error;
pub mod mccr;
pub mod pulse;
pub mod qfunc;
pub mod quadrature;
pub mod sweep;
pub use error::{Error, Result};
