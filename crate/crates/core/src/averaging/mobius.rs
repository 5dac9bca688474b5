//! Möbius function sieve and Möbius-weighted (Sarnak-type) orbit sums.

use serde::{Deserialize, Serialize};

use super::harmonic::harmonic;
use super::summation::CompensatedSum;
use super::trace::RealTrace;
use crate::error::{domain, Error, Result};

/// μ(1..=n) by a linear sieve; index 0 of the result is μ(1).
pub fn mobius_sieve(n: usize) -> Result<Vec<i8>> {
    if n == 0 {
        return Err(domain("mobius sieve needs N >= 1"));
    }
    let mut mu = vec![0_i8; n + 1];
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    mu[1] = 1;
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu.remove(0);
    Ok(mu)
}

/// Normalization of the logarithmic Sarnak sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogNormalization {
    /// Divide by log N.
    #[default]
    NaturalLog,
    /// Divide by H_N.
    Harmonic,
}

/// Möbius-weighted average of `trace`, where `trace[k]` (1-based) holds
/// f(T^k x).
///
/// Cesàro form: (1/N) Σ_{k≤N} f(T^k x) μ(k).
/// Logarithmic form: (1/log N) Σ_{k≤N} f(T^k x) μ(k) / k, or normalized by
/// H_N when requested.
pub fn sarnak_sum(
    trace: &RealTrace,
    n: usize,
    logarithmic: bool,
    normalization: LogNormalization,
) -> Result<f64> {
    if n == 0 || n > trace.len() {
        return Err(Error::Window {
            m: 0,
            n,
            len: trace.len(),
        });
    }
    if logarithmic && n < 2 && normalization == LogNormalization::NaturalLog {
        return Err(domain(
            "logarithmic Sarnak sum needs N >= 2 (log N must be positive)",
        ));
    }
    let mu = mobius_sieve(n)?;
    let mut acc = CompensatedSum::new();
    for (k, (&x, &m)) in trace.values()[..n].iter().zip(&mu).enumerate() {
        if m == 0 {
            continue;
        }
        let w = if logarithmic {
            1.0 / (k + 1) as f64
        } else {
            1.0
        };
        acc.add(f64::from(m) * w * x);
    }
    let denom = if !logarithmic {
        n as f64
    } else {
        match normalization {
            LogNormalization::NaturalLog => (n as f64).ln(),
            LogNormalization::Harmonic => harmonic(n)?,
        }
    };
    Ok(acc.value() / denom)
}
