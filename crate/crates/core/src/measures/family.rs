//! The test family f_j = d(·, p_j) and the weak* metric it induces,
//! ρ(μ, ν) = Σ_j 2^{-j} |∫f_j dμ − ∫f_j dν|, truncated at J probes.
//!
//! Each f_j is 1-Lipschitz with values in [0, 1] because every system has
//! diameter ≤ 1. Density of the span of the family is not certified; ρ is a
//! pseudometric that separates measures well enough at test tolerances.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::empirical::EmpiricalMeasure;
use crate::averaging::CompensatedSum;
use crate::error::{domain, Error, Result};
use crate::systems::{PointRef, SymbolSource, SystemSpec};

pub const DEFAULT_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    system: SystemSpec,
    probes: Vec<PointRef>,
}

/// A ρ value together with the bound 2^{1−J} on the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    pub value: f64,
    pub truncation_bound: f64,
}

/// Primitive binary words ordered by length, then lexicographically.
fn primitive_words() -> impl Iterator<Item = String> {
    (1_usize..).flat_map(|len| {
        (0_u64..(1 << len)).filter_map(move |bits| {
            let w: String = (0..len)
                .rev()
                .map(|i| if bits >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            let primitive = (1..len)
                .filter(|d| len % d == 0)
                .all(|d| w[..d].repeat(len / d) != w);
            primitive.then_some(w)
        })
    })
}

fn canonical_probes(sys: &SystemSpec, depth: usize) -> Vec<PointRef> {
    match sys {
        SystemSpec::CircleRotation { .. } | SystemSpec::DoublingMap => (1..=depth)
            .map(|j| {
                sys.circle_point(j as f64 / (depth + 1) as f64)
                    .expect("circle system")
            })
            .collect(),
        SystemSpec::BinaryShift { .. } => primitive_words()
            .take(depth)
            .map(|word| PointRef::shift(Arc::new(SymbolSource::Periodic { word }), 0))
            .collect(),
        SystemSpec::ProductSystem { left, right } => canonical_probes(left, depth)
            .into_iter()
            .zip(canonical_probes(right, depth))
            .map(|(l, r)| PointRef::pair(l, r))
            .collect(),
    }
}

impl TestFamily {
    /// Equispaced probes j/(J+1) on circles, primitive periodic words on
    /// shifts, zipped component families on products.
    pub fn canonical(sys: &SystemSpec, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(domain("test family needs at least one probe"));
        }
        Ok(Self {
            system: sys.clone(),
            probes: canonical_probes(sys, depth),
        })
    }

    pub fn with_probes(sys: &SystemSpec, probes: Vec<PointRef>) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::Empty("test family needs at least one probe"));
        }
        for p in &probes {
            sys.check_point(p)?;
        }
        Ok(Self {
            system: sys.clone(),
            probes,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn probes(&self) -> &[PointRef] {
        &self.probes
    }

    pub fn depth(&self) -> usize {
        self.probes.len()
    }

    pub fn truncation_bound(&self) -> f64 {
        2f64.powi(1 - self.depth() as i32)
    }

    /// f_j(x) for j = 1..=J, written into `out`.
    #[inline]
    pub fn eval_into(&self, x: &PointRef, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.probes) {
            *o = self
                .system
                .distance(x, p)
                .expect("probe and point belong to the family system");
        }
    }

    pub fn eval(&self, j: usize, x: &PointRef) -> Result<f64> {
        let p = self
            .probes
            .get(j)
            .ok_or_else(|| domain(format!("probe index {j} out of range")))?;
        self.system.distance(x, p)
    }

    fn check_measure(&self, mu: &EmpiricalMeasure) -> Result<()> {
        if mu.system() != &self.system {
            return Err(domain("measure and test family live on different systems"));
        }
        Ok(())
    }

    /// (∫f_1 dμ, ..., ∫f_J dμ)
    pub fn integrals(&self, mu: &EmpiricalMeasure) -> Result<Vec<f64>> {
        self.check_measure(mu)?;
        let mut sums = vec![CompensatedSum::new(); self.depth()];
        let mut f = vec![0.0; self.depth()];
        mu.for_each_atom(|p, w| {
            self.eval_into(p, &mut f);
            for (s, v) in sums.iter_mut().zip(&f) {
                s.add(w * v);
            }
        });
        Ok(sums.iter().map(|s| s.value()).collect())
    }

    pub fn rho_from_integrals(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_l1(a, b)
    }

    pub fn rho(&self, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Rho> {
        let a = self.integrals(mu)?;
        let b = self.integrals(nu)?;
        Ok(Rho {
            value: weighted_l1(&a, &b),
            truncation_bound: self.truncation_bound(),
        })
    }

    /// ρ(δ_x, δ_y)
    pub fn rho_points(&self, x: &PointRef, y: &PointRef) -> Result<f64> {
        let mut fx = vec![0.0; self.depth()];
        let mut fy = vec![0.0; self.depth()];
        self.system.check_point(x)?;
        self.system.check_point(y)?;
        self.eval_into(x, &mut fx);
        self.eval_into(y, &mut fy);
        Ok(weighted_l1(&fx, &fy))
    }

    /// Σ_j 2^{-j} |∫f_j dμ − ∫f_j∘T dμ|
    pub fn pushforward_defect(&self, mu: &EmpiricalMeasure) -> Result<f64> {
        self.check_measure(mu)?;
        let mut sums = vec![CompensatedSum::new(); self.depth()];
        let mut f = vec![0.0; self.depth()];
        let mut g = vec![0.0; self.depth()];
        let mut err = None;
        mu.for_each_atom(|p, w| {
            let tp = match self.system.step(p) {
                Ok(q) => q,
                Err(e) => {
                    err.get_or_insert(e);
                    return;
                }
            };
            self.eval_into(p, &mut f);
            self.eval_into(&tp, &mut g);
            for ((s, a), b) in sums.iter_mut().zip(&f).zip(&g) {
                s.add(w * (a - b));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(sums
            .iter()
            .enumerate()
            .map(|(j, s)| s.value().abs() * 0.5f64.powi(j as i32 + 1))
            .sum())
    }
}

/// Σ_j 2^{-j} |a_j − b_j|, j starting at 1.
pub(crate) fn weighted_l1(a: &[f64], b: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    let mut w = 1.0;
    for (x, y) in a.iter().zip(b) {
        w *= 0.5;
        s.add(w * (x - y).abs());
    }
    s.value()
}

pub fn rho(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, family: &TestFamily) -> Result<Rho> {
    family.rho(mu, nu)
}

pub fn pushforward_defect(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    family: &TestFamily,
) -> Result<f64> {
    if family.system() != sys {
        return Err(domain("test family belongs to a different system"));
    }
    family.pushforward_defect(mu)
}
