//! Heat-kernel (Seeley-deWitt) coefficients of the Dirac operator on
//! Robertson-Walker spacetimes, computed exactly from the pseudodifferential
//! parametrix of `D^2`.

pub mod assembly;
pub mod cache;
pub mod cli;
pub mod clifford;
pub mod engine;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod hopf_e;
pub mod oracle;
pub mod pipeline;
pub mod scalar;
pub mod verification;

pub use error::{Error, Result};
