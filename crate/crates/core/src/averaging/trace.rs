//! Bounded real sequences and their Cesàro / logarithmic averages.

use serde::{Deserialize, Serialize};

use super::harmonic::{harmonic, with_harmonic_table};
use super::summation::CompensatedSum;
use crate::error::{Error, Result};

/// A finite real sequence x_1..x_n together with a bound on |x_k|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTrace {
    values: Vec<f64>,
    bound: f64,
}

impl RealTrace {
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("trace must have at least one value"));
        }
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::Domain(format!(
                "trace bound must be finite and >= 0, got {bound}"
            )));
        }
        if let Some(&v) = values.iter().find(|v| !(v.abs() <= bound)) {
            return Err(Error::Bound { value: v, bound });
        }
        Ok(Self { values, bound })
    }

    /// Builds a trace whose bound is the sup-norm of the values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().fold(0.0_f64, |b, v| b.max(v.abs()));
        Self::new(values, bound)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// x_k, 1-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    fn check_window(&self, m: usize, n: usize) -> Result<()> {
        if m >= n || n > self.len() {
            return Err(Error::Window {
                m,
                n,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// (1/(n-m)) Σ_{k=m+1}^{n} x_k
    pub fn cesaro_avg(&self, m: usize, n: usize) -> Result<f64> {
        self.check_window(m, n)?;
        let s: CompensatedSum = self.values[m..n].iter().sum();
        Ok(s.value() / (n - m) as f64)
    }

    /// (1/H_{n-m}) Σ_{k=m+1}^{n} x_k / (k-m)
    pub fn log_avg(&self, m: usize, n: usize) -> Result<f64> {
        self.check_window(m, n)?;
        let mut s = CompensatedSum::new();
        for (i, &x) in self.values[m..n].iter().enumerate() {
            s.add(x / (i + 1) as f64);
        }
        Ok(s.value() / harmonic(n - m)?)
    }

    /// Splits the logarithmic average over (0, n] into the Cesàro term and the
    /// weighted history of earlier Cesàro averages:
    ///
    /// ```text
    /// (1/H_n) Σ x_k/k = (1/H_n)·A_n + (1/H_n) Σ_{k<n} A_k/(k+1),   A_k = (1/k) Σ_{i≤k} x_i
    /// ```
    pub fn sbp_decompose(&self, n: usize) -> Result<(f64, f64)> {
        self.check_window(0, n)?;
        let h = harmonic(n)?;
        let mut prefix = CompensatedSum::new();
        let mut history = CompensatedSum::new();
        for k in 1..n {
            prefix.add(self.values[k - 1]);
            history.add(prefix.value() / k as f64 / (k + 1) as f64);
        }
        prefix.add(self.values[n - 1]);
        let term_cesaro = prefix.value() / n as f64 / h;
        Ok((term_cesaro, history.value() / h))
    }

    /// Prefix tables for O(1) evaluation of (0, n] averages at many n.
    pub fn prefix_averages(&self) -> PrefixAverages {
        PrefixAverages::new(&self.values)
    }
}

/// Cumulative plain and 1/k-weighted sums of a sequence, compensated.
#[derive(Debug, Clone)]
pub struct PrefixAverages {
    plain: Vec<f64>,
    weighted: Vec<f64>,
}

impl PrefixAverages {
    pub fn new(values: &[f64]) -> Self {
        let mut plain = Vec::with_capacity(values.len() + 1);
        let mut weighted = Vec::with_capacity(values.len() + 1);
        plain.push(0.0);
        weighted.push(0.0);
        let mut p = CompensatedSum::new();
        let mut w = CompensatedSum::new();
        for (i, &x) in values.iter().enumerate() {
            p.add(x);
            w.add(x / (i + 1) as f64);
            plain.push(p.value());
            weighted.push(w.value());
        }
        Self { plain, weighted }
    }

    pub fn len(&self) -> usize {
        self.plain.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::Window {
                m: 0,
                n,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// A_n = (1/n) Σ_{k≤n} x_k
    pub fn cesaro(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.plain[n] / n as f64)
    }

    /// Arithmetic average over the window (m, n].
    pub fn cesaro_window(&self, m: usize, n: usize) -> Result<f64> {
        if m >= n || n > self.len() {
            return Err(Error::Window {
                m,
                n,
                len: self.len(),
            });
        }
        Ok((self.plain[n] - self.plain[m]) / (n - m) as f64)
    }

    /// (1/H_n) Σ_{k≤n} x_k / k
    pub fn logarithmic(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.weighted[n] / harmonic(n)?)
    }

    /// Evaluates both averages at every schedule point.
    pub fn at_schedule(&self, schedule: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let max = schedule.iter().copied().max().unwrap_or(0);
        if let Some(&bad) = schedule.iter().find(|&&n| n == 0 || n > self.len()) {
            return Err(Error::Window {
                m: 0,
                n: bad,
                len: self.len(),
            });
        }
        with_harmonic_table(max, |h| {
            let ces = schedule.iter().map(|&n| self.plain[n] / n as f64).collect();
            let log = schedule
                .iter()
                .map(|&n| self.weighted[n] / h.get(n).expect("table covers schedule"))
                .collect();
            Ok((ces, log))
        })
    }
}
