//! Wasserstein-1 distance between measures on the circle R/Z.
//!
//! With F = F_μ − F_ν the difference of the cumulative distribution functions
//! on [0, 1), W1(μ, ν) = min_t ∫_0^1 |F(x) − t| dx. F is piecewise constant,
//! so the minimizing t is a weighted median of its values, weighted by the
//! lengths of the pieces.

use super::empirical::EmpiricalMeasure;
use crate::error::{domain, Error, Result};

fn signed_atoms(mu: &EmpiricalMeasure, sign: f64, out: &mut Vec<(f64, f64)>) -> Result<()> {
    let sys = mu.system();
    let mut err = None;
    mu.for_each_atom(|p, w| match sys.coordinate(p) {
        Ok(x) => out.push((x, sign * w)),
        Err(e) => {
            err.get_or_insert(e);
        }
    });
    err.map_or(Ok(()), Err)
}

/// Pieces (length, value of F_μ − F_ν) covering [0, 1).
pub(crate) fn cdf_difference(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<Vec<(f64, f64)>> {
    if !mu.system().is_circle() {
        return Err(Error::KindMismatch { expected: "circle" });
    }
    if mu.system() != nu.system() {
        return Err(domain("circle W1 needs both measures on the same system"));
    }
    let mut atoms = Vec::with_capacity(mu.len() + nu.len());
    signed_atoms(mu, 1.0, &mut atoms)?;
    signed_atoms(nu, -1.0, &mut atoms)?;
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut pieces = Vec::with_capacity(atoms.len() + 1);
    let mut prev = 0.0;
    let mut f = 0.0;
    for (x, w) in atoms {
        if x > prev {
            pieces.push((x - prev, f));
            prev = x;
        }
        f += w;
    }
    pieces.push((1.0 - prev, f));
    Ok(pieces)
}

/// Unscaled arc-length W1 (at most 1/2).
pub fn circle_w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let mut pieces = cdf_difference(mu, nu)?;
    pieces.sort_by(|a, b| a.1.total_cmp(&b.1));
    let half = 0.5 * pieces.iter().map(|p| p.0).sum::<f64>();
    let mut acc = 0.0;
    let mut median = pieces.last().map_or(0.0, |p| p.1);
    for &(len, value) in &pieces {
        acc += len;
        if acc >= half {
            median = value;
            break;
        }
    }
    Ok(pieces
        .iter()
        .map(|&(len, value)| len * (value - median).abs())
        .sum())
}
