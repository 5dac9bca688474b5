use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::averaging::{harmonic, CompensatedSum};
use crate::error::{Error, Result};
use crate::systems::{PointRef, SystemSpec};

/// Orbit windows longer than this are integrated by re-walking the orbit
/// instead of storing atoms.
pub const MATERIALIZE_LIMIT: usize = 100_000;

/// How orbit points are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Weight 1/(n−m) on each of T^m x, ..., T^{n−1} x.
    Arithmetic,
    /// Weight 1/((k−m)·H_{n−m}) on T^{k−1} x, k = m+1..n.
    Logarithmic,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Arithmetic => "arithmetic",
            Scheme::Logarithmic => "logarithmic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: PointRef,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Atoms(Vec<Atom>),
    /// Start point T^m x; atoms are regenerated on demand.
    Streamed(PointRef),
}

/// A finitely supported probability measure built from an orbit window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    system: SystemSpec,
    storage: Storage,
    scheme: Scheme,
    window: (usize, usize),
    harmonic_len: f64,
}

impl EmpiricalMeasure {
    /// Empirical measure of x over the window (m, n]. Atoms are stored when
    /// the window has at most [`MATERIALIZE_LIMIT`] points.
    pub fn new(sys: &SystemSpec, x: &PointRef, m: usize, n: usize, scheme: Scheme) -> Result<Self> {
        let mut mu = Self::streamed(sys, x, m, n, scheme)?;
        if n - m <= MATERIALIZE_LIMIT {
            let mut atoms = Vec::with_capacity(n - m);
            mu.for_each_atom(|p, w| {
                atoms.push(Atom {
                    point: p.clone(),
                    weight: w,
                })
            });
            mu.storage = Storage::Atoms(atoms);
        }
        Ok(mu)
    }

    /// Like [`new`](Self::new) but never stores atoms.
    pub fn streamed(
        sys: &SystemSpec,
        x: &PointRef,
        m: usize,
        n: usize,
        scheme: Scheme,
    ) -> Result<Self> {
        if m >= n {
            return Err(Error::Window { m, n, len: n });
        }
        sys.check_point(x)?;
        let start = sys.advance(x, m as u64)?;
        Ok(Self {
            system: sys.clone(),
            storage: Storage::Streamed(start),
            scheme,
            window: (m, n),
            harmonic_len: harmonic(n - m)?,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.window.1 - self.window.0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.storage {
            Storage::Atoms(a) => Some(a),
            Storage::Streamed(_) => None,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.storage, Storage::Atoms(_))
    }

    /// Weight of the i-th atom of the window, i = 1..=len.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match self.scheme {
            Scheme::Arithmetic => 1.0 / self.len() as f64,
            Scheme::Logarithmic => 1.0 / (i as f64 * self.harmonic_len),
        }
    }

    /// Visits every atom in orbit order.
    pub fn for_each_atom(&self, mut f: impl FnMut(&PointRef, f64)) {
        match &self.storage {
            Storage::Atoms(atoms) => atoms.iter().for_each(|a| f(&a.point, a.weight)),
            Storage::Streamed(start) => {
                for (i, p) in self
                    .system
                    .orbit(start.clone())
                    .take(self.len())
                    .enumerate()
                {
                    f(&p, self.weight(i + 1));
                }
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = CompensatedSum::new();
        self.for_each_atom(|_, w| s.add(w));
        s.value()
    }

    /// Σ weight · f(point)
    pub fn integrate(&self, f: impl Fn(&PointRef) -> f64) -> f64 {
        let mut s = CompensatedSum::new();
        self.for_each_atom(|p, w| s.add(w * f(p)));
        s.value()
    }

    /// Atoms with consecutive duplicates (distance 0) merged.
    pub fn effective_atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = Vec::new();
        self.for_each_atom(|p, w| {
            if let Some(last) = out.last_mut() {
                if self
                    .system
                    .distance(&last.point, p)
                    .map(|d| d == 0.0)
                    .unwrap_or(false)
                {
                    last.weight += w;
                    return;
                }
            }
            out.push(Atom {
                point: p.clone(),
                weight: w,
            });
        });
        out
    }

    pub fn summary(&self, integrals: Vec<(String, f64)>) -> MeasureSummary {
        MeasureSummary {
            atom_count: self.len(),
            window: self.window,
            scheme: self.scheme,
            materialized: self.is_materialized(),
            integrals,
        }
    }

    /// CSV dump with header `k,point,weight`, k = m+1..n.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,point,weight")?;
        let mut k = self.window.0;
        let mut res = Ok(());
        self.for_each_atom(|p, weight| {
            k += 1;
            if res.is_ok() {
                res = writeln!(w, "{k},{p},{weight:.16e}");
            }
        });
        res
    }
}

/// JSON-friendly description of an empirical measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub atom_count: usize,
    pub window: (usize, usize),
    pub scheme: Scheme,
    pub materialized: bool,
    pub integrals: Vec<(String, f64)>,
}

pub fn empirical(
    sys: &SystemSpec,
    x: &PointRef,
    m: usize,
    n: usize,
    scheme: Scheme,
) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new(sys, x, m, n, scheme)
}

pub fn integrate(f: impl Fn(&PointRef) -> f64, mu: &EmpiricalMeasure) -> f64 {
    mu.integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{SymbolSource, PHI};

    #[test]
    fn fixed_point_has_one_effective_atom() {
        let sys = SystemSpec::shift(SymbolSource::Constant { symbol: 0 });
        for scheme in [Scheme::Arithmetic, Scheme::Logarithmic] {
            let mu = empirical(&sys, &sys.base_point(), 3, 40, scheme).unwrap();
            let eff = mu.effective_atoms();
            assert_eq!(eff.len(), 1);
            assert!((eff[0].weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_atom_weights() {
        let sys = SystemSpec::rotation(PHI);
        let x = sys.base_point();
        let a = empirical(&sys, &x, 0, 2, Scheme::Arithmetic).unwrap();
        let w: Vec<f64> = a.atoms().unwrap().iter().map(|a| a.weight).collect();
        assert_eq!(w, vec![0.5, 0.5]);
        let l = empirical(&sys, &x, 0, 2, Scheme::Logarithmic).unwrap();
        let w: Vec<f64> = l.atoms().unwrap().iter().map(|a| a.weight).collect();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        let sys = SystemSpec::DoublingMap;
        let x = sys.circle_point(0.123).unwrap();
        for (m, n) in [(0, 1), (0, 10), (5, 1000), (17, 123_457)] {
            for scheme in [Scheme::Arithmetic, Scheme::Logarithmic] {
                let mu = empirical(&sys, &x, m, n, scheme).unwrap();
                assert!((mu.total_mass() - 1.0).abs() < 1e-12);
            }
        }
        assert!(empirical(&sys, &x, 4, 4, Scheme::Arithmetic).is_err());
    }

    #[test]
    fn log_weights_follow_window_offset() {
        let sys = SystemSpec::rotation(PHI);
        let mu = empirical(&sys, &sys.base_point(), 10, 14, Scheme::Logarithmic).unwrap();
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        for (i, a) in mu.atoms().unwrap().iter().enumerate() {
            assert!((a.weight - 1.0 / ((i + 1) as f64 * h4)).abs() < 1e-15);
        }
        let first = &mu.atoms().unwrap()[0].point;
        assert!((sys.coordinate(first).unwrap() - crate::systems::wrap(10.0 * PHI)).abs() < 1e-14);
    }

    #[test]
    fn integrate_examples() {
        let sys = SystemSpec::rotation(PHI);
        let mu = empirical(&sys, &sys.base_point(), 0, 1000, Scheme::Logarithmic).unwrap();
        assert!((integrate(|_| 1.0, &mu) - 1.0).abs() < 1e-12);
        assert_eq!(
            integrate(
                |p| if sys.coordinate(p).unwrap() > 2.0 {
                    1.0
                } else {
                    0.0
                },
                &mu
            ),
            0.0
        );

        let n = 100_000;
        let mu = empirical(&sys, &sys.base_point(), 0, n, Scheme::Arithmetic).unwrap();
        let cos = |p: &PointRef| (2.0 * std::f64::consts::PI * sys.coordinate(p).unwrap()).cos();
        let via_measure = integrate(cos, &mu);
        // oracle: direct summation over k·α
        let direct: f64 = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * (k as f64 * PHI).fract()).cos())
            .sum::<f64>()
            / n as f64;
        assert!(via_measure.abs() <= 0.01);
        assert!((via_measure - direct).abs() < 1e-9);
    }

    #[test]
    fn streamed_and_materialized_agree() {
        let sys = SystemSpec::shift(SymbolSource::Sturmian {
            alpha: PHI,
            x0: 0.2,
        });
        let x = sys.base_point();
        let a = EmpiricalMeasure::new(&sys, &x, 7, 5000, Scheme::Logarithmic).unwrap();
        let b = EmpiricalMeasure::streamed(&sys, &x, 7, 5000, Scheme::Logarithmic).unwrap();
        assert!(a.is_materialized() && !b.is_materialized());
        let head = |p: &PointRef| match p {
            PointRef::Shift(s) => f64::from(s.head_symbol()),
            _ => unreachable!(),
        };
        assert_eq!(a.integrate(head), b.integrate(head));
        let big =
            EmpiricalMeasure::new(&sys, &x, 0, MATERIALIZE_LIMIT + 1, Scheme::Arithmetic).unwrap();
        assert!(!big.is_materialized());
    }

    #[test]
    fn csv_dump() {
        let sys = SystemSpec::rotation(0.25);
        let mu = empirical(&sys, &sys.base_point(), 2, 4, Scheme::Arithmetic).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,point,weight");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("3,circle:"));
        assert!(lines[2].ends_with(",5.0000000000000000e-1"));
    }
}
