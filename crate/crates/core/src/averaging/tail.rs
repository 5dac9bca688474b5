//! Finite-horizon stand-ins for limsup / liminf.
//!
//! An average is evaluated along an increasing schedule of horizons; the
//! upper and lower limits are approximated by the max and min over the
//! trailing fraction of that schedule.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const DEFAULT_N0: usize = 64;
pub const DEFAULT_RATIO: f64 = 1.25;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;

/// Geometric evaluation schedule n_i = ⌈n0 · r^i⌉, deduplicated, capped at
/// `n_max` (which is always the last entry).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub n0: usize,
    pub ratio: f64,
    pub window_fraction: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            n0: DEFAULT_N0,
            ratio: DEFAULT_RATIO,
            window_fraction: DEFAULT_WINDOW_FRACTION,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(domain("schedule n0 must be >= 1"));
        }
        if !(self.ratio > 1.0) || !self.ratio.is_finite() {
            return Err(domain(format!(
                "schedule ratio must be > 1, got {}",
                self.ratio
            )));
        }
        check_fraction(self.window_fraction)
    }

    pub fn schedule(&self, n_max: usize) -> Result<Vec<usize>> {
        geometric_schedule(self.n0, self.ratio, n_max)
    }
}

pub fn geometric_schedule(n0: usize, ratio: f64, n_max: usize) -> Result<Vec<usize>> {
    if n0 == 0 || n_max == 0 {
        return Err(domain("schedule endpoints must be >= 1"));
    }
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(domain(format!("schedule ratio must be > 1, got {ratio}")));
    }
    let mut out = Vec::new();
    let mut i = 0_i32;
    loop {
        let n = (n0 as f64 * ratio.powi(i)).ceil() as usize;
        if n >= n_max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        i += 1;
    }
    out.push(n_max);
    Ok(out)
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(domain(format!(
            "window fraction must lie in (0, 1], got {f}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub schedule: Vec<usize>,
    pub values: Vec<f64>,
    pub sup_est: f64,
    pub inf_est: f64,
    pub window_fraction: f64,
}

impl TailEstimate {
    pub fn spread(&self) -> f64 {
        self.sup_est - self.inf_est
    }
}

/// Max and min over the last ⌈fraction · len⌉ values.
///
/// `schedule` labels the values; pass an empty slice to label them 1..=len.
pub fn tail_estimates(
    schedule: &[usize],
    values: &[f64],
    window_fraction: f64,
) -> Result<TailEstimate> {
    if values.is_empty() {
        return Err(Error::Empty("tail estimate needs at least one value"));
    }
    check_fraction(window_fraction)?;
    let schedule = if schedule.is_empty() {
        (1..=values.len()).collect()
    } else if schedule.len() == values.len() {
        schedule.to_vec()
    } else {
        return Err(domain("schedule and values differ in length"));
    };
    let take = ((window_fraction * values.len() as f64).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - take..];
    let sup_est = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf_est = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TailEstimate {
        schedule,
        values: values.to_vec(),
        sup_est,
        inf_est,
        window_fraction,
    })
}
