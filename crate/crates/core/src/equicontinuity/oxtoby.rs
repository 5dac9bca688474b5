//! The open set U = ⋃_{j≥1} (jα − 2^{-(j+1)}, jα + 2^{-(j+1)}) on the
//! circle. Its indicator is discontinuous; the Cesàro averages of 1_U along
//! the orbit of 0 tend to 1, while the Lebesgue measure of U is strictly
//! smaller.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::systems::{arc, rotate, wrap};

/// Intervals j = 1..=64; later radii are below one ulp of the unit circle.
pub const OXTOBY_INTERVALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OxtobyReport {
    pub alpha: f64,
    pub n: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// (1/n) Σ_{k=1}^{n} 1_U((k−1)α)
    pub avg_at_zero: f64,
    pub m_of_u_estimate: f64,
    /// Binomial standard error of the Monte Carlo estimate.
    pub sigma: f64,
    /// Length of the union of the intervals, by sorting and merging.
    pub m_of_u_exact: f64,
    pub gap: f64,
}

struct Intervals {
    centers: Vec<f64>,
    radii: Vec<f64>,
}

impl Intervals {
    fn new(alpha: f64) -> Self {
        let centers = (1..=OXTOBY_INTERVALS as u64)
            .map(|j| rotate(0.0, j, alpha))
            .collect();
        let radii = (1..=OXTOBY_INTERVALS as i32)
            .map(|j| 0.5f64.powi(j + 1))
            .collect();
        Self { centers, radii }
    }

    fn contains(&self, t: f64) -> bool {
        self.centers
            .iter()
            .zip(&self.radii)
            .any(|(&c, &r)| arc(t, c) < r)
    }

    /// Total length of the union on R/Z.
    fn union_length(&self) -> f64 {
        let mut pieces = Vec::with_capacity(2 * self.centers.len());
        for (&c, &r) in self.centers.iter().zip(&self.radii) {
            let (a, b) = (c - r, c + r);
            if a < 0.0 {
                pieces.push((a + 1.0, 1.0));
                pieces.push((0.0, b));
            } else if b > 1.0 {
                pieces.push((a, 1.0));
                pieces.push((0.0, b - 1.0));
            } else {
                pieces.push((a, b));
            }
        }
        pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut total = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (a, b) in pieces {
            cur = match cur {
                Some((s, e)) if a <= e => Some((s, e.max(b))),
                Some((s, e)) => {
                    total += e - s;
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        total + cur.map_or(0.0, |(s, e)| e - s)
    }
}

/// Orbit points (k−1)α with k ≥ 2 are centers of intervals of U, so they
/// count as inside U even past the 64 intervals that are tested explicitly;
/// only the starting point 0 is tested.
pub fn oxtoby_experiment(
    alpha: f64,
    n: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<OxtobyReport> {
    if !alpha.is_finite() || wrap(alpha) == 0.0 {
        return Err(domain(format!(
            "rotation number must be a finite non-integer, got {alpha}"
        )));
    }
    if n < 10 {
        return Err(domain(format!("horizon must be >= 10, got {n}")));
    }
    if mc_samples == 0 {
        return Err(domain("Monte Carlo sample count must be >= 1"));
    }
    let u = Intervals::new(alpha);
    let hits_at_zero = (n - 1) + usize::from(u.contains(0.0));
    let avg_at_zero = hits_at_zero as f64 / n as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside = (0..mc_samples)
        .filter(|_| u.contains(rng.gen::<f64>()))
        .count();
    let p = inside as f64 / mc_samples as f64;
    let sigma = (p * (1.0 - p) / mc_samples as f64).sqrt();
    Ok(OxtobyReport {
        alpha,
        n,
        mc_samples,
        seed,
        avg_at_zero,
        m_of_u_estimate: p,
        sigma,
        m_of_u_exact: u.union_length(),
        gap: avg_at_zero - p,
    })
}
