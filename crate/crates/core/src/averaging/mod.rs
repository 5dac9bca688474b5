//! Arithmetic, harmonic and windowed averages of bounded real sequences.

mod harmonic;
mod mobius;
mod summation;
mod tail;
mod trace;

pub use harmonic::{harmonic, with_harmonic_table, HarmonicTable};
pub use mobius::{mobius_sieve, sarnak_sum, LogNormalization};
pub use summation::{compensated_sum, CompensatedSum};
pub use tail::{
    geometric_schedule, tail_estimates, ScheduleParams, TailEstimate, DEFAULT_N0, DEFAULT_RATIO,
    DEFAULT_WINDOW_FRACTION,
};
pub use trace::{PrefixAverages, RealTrace};

use crate::error::Result;

pub fn cesaro_avg(trace: &RealTrace, m: usize, n: usize) -> Result<f64> {
    trace.cesaro_avg(m, n)
}

pub fn log_avg(trace: &RealTrace, m: usize, n: usize) -> Result<f64> {
    trace.log_avg(m, n)
}

pub fn sbp_decompose(trace: &RealTrace, n: usize) -> Result<(f64, f64)> {
    trace.sbp_decompose(n)
}

/// Weights w_1..w_n with log_avg(0, n) = Σ w_k · cesaro_avg(0, k):
/// w_k = 1/((k+1) H_n) for k < n and w_n = 1/H_n.
pub fn convex_weights(n: usize) -> Result<Vec<f64>> {
    let h = harmonic(n)?;
    Ok((1..=n)
        .map(|k| {
            if k < n {
                1.0 / ((k + 1) as f64 * h)
            } else {
                1.0 / h
            }
        })
        .collect())
}
