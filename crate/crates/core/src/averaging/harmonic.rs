//! Harmonic numbers H_n = 1 + 1/2 + ... + 1/n.
//!
//! Values are produced by direct compensated summation and cached in a
//! process-wide table that grows on demand. Readers share the lock; a single
//! writer extends the table.

use std::sync::{OnceLock, RwLock};

use super::summation::CompensatedSum;
use crate::error::{domain, Result};

/// Memoized harmonic numbers, `h[n]` holds H_n (`h[0] = 0`).
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    h: Vec<f64>,
    acc: CompensatedSum,
}

impl Default for HarmonicTable {
    fn default() -> Self {
        Self::new()
    }
}

impl HarmonicTable {
    pub fn new() -> Self {
        Self {
            h: vec![0.0],
            acc: CompensatedSum::new(),
        }
    }

    /// Largest n for which H_n is already tabulated.
    pub fn len(&self) -> usize {
        self.h.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extends the table so that it covers `n`.
    pub fn extend_to(&mut self, n: usize) {
        self.h.reserve(n.saturating_sub(self.len()));
        for k in self.h.len()..=n {
            self.acc.add(1.0 / k as f64);
            self.h.push(self.acc.value());
        }
    }

    /// H_n, or `None` if the table does not reach `n` yet.
    pub fn get(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return None;
        }
        self.h.get(n).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.h
    }
}

fn table() -> &'static RwLock<HarmonicTable> {
    static TABLE: OnceLock<RwLock<HarmonicTable>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HarmonicTable::new()))
}

/// H_n for `n >= 1`.
pub fn harmonic(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("harmonic number H_0 is undefined (n must be >= 1)"));
    }
    if let Some(h) = table().read().expect("harmonic table poisoned").get(n) {
        return Ok(h);
    }
    let mut t = table().write().expect("harmonic table poisoned");
    t.extend_to(n);
    Ok(t.get(n).expect("table extended"))
}

/// Runs `f` with read access to a table covering at least `n`.
pub fn with_harmonic_table<R>(n: usize, f: impl FnOnce(&HarmonicTable) -> R) -> R {
    {
        let t = table().read().expect("harmonic table poisoned");
        if t.len() >= n {
            return f(&t);
        }
    }
    table()
        .write()
        .expect("harmonic table poisoned")
        .extend_to(n);
    let t = table().read().expect("harmonic table poisoned");
    f(&t)
}
