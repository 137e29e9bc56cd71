//! Planning and verification toolkit for complementary-multiphase quantum search.
//!
//! A search over `N` items with `M` marked ones (`λ = M/N`) runs `k`
//! phase-matched iterations `G(φ, φ)`, where `k` is fixed by the band
//! `Λ_k` containing `λ` and `φ` by the segment `Λ_{k,m}` of that band.
//! The phases are chosen so that the success probability never drops below
//! a requested floor `P_cri`.
//!
//! - [`analytic`]: closed-form success probability, extrema and bands.
//! - [`optimizer`]: equal-level phase selection per band.
//! - [`planner`]: plan tables, range classification, baseline algorithms.
//! - [`simulator`]: two-level and full statevector oracles.
//! - [`cli`]: the command implementations behind the `mpsearch` binary.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod optimizer;
pub mod planner;
mod roots;
pub mod simulator;

pub use error::{Error, Result};
