//! Embedded Gaussian orthogonal ensembles with k-body interactions for
//! fermions (EGOE(k)) and bosons (BEGOE(k)), q-normal smooth densities with
//! q-Hermite corrections, and the level-fluctuation measures used to check
//! that what remains after removing the smooth part is GOE-like.

pub mod error;
pub mod fock;
pub mod matrix;
pub mod ensemble;
pub mod spectra;
pub mod quadrature;
pub mod qhermite;
pub mod decomposition;
pub mod analytic;
pub mod fluct;
pub mod periodogram;
pub mod analysis;
pub mod config;
pub mod archive;
pub mod commands;

pub use error::{Error, Result};
pub use fock::Statistics;
