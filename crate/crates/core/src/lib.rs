// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Orbit averaging for topological dynamical systems.
//!
//! The crate computes arithmetic (Cesàro), logarithmic (harmonic) and Weyl
//! windowed averages along orbits of concrete compact metric systems, builds
//! the corresponding empirical measures, compares them in a weak* metric and
//! estimates mean-equicontinuity and mean-sensitivity from finite orbits.
//!
//! Modules, bottom-up:
//!
//! * [`averaging`]: bounded real sequences, harmonic numbers, compensated
//!   sums, tail (limsup/liminf) estimates, Möbius sieve and Sarnak sums.
//! * [`systems`]: circle rotations, the doubling map, binary shifts and
//!   products, with orbit and distance-trace generation.
//! * [`measures`]: empirical measures, the test-family metric ρ, circle
//!   Wasserstein-1, invariance defects, Hausdorff distance and limit-set
//!   estimation.
//! * [`equicontinuity`]: pair gaps, moduli of mean equicontinuity,
//!   sensitivity estimates, the dichotomy classifier, the unique-ergodicity
//!   detector and the Oxtoby counterexample.
//! * [`cli`]: the `logerg` experiment runner.

pub mod averaging;
pub mod cli;
pub mod equicontinuity;
pub mod error;
pub mod measures;
pub mod systems;

pub use error::{Error, Result};
