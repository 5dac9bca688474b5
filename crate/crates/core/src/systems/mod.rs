//! Concrete compact metric dynamical systems (X, T, d).
//!
//! All metrics are rescaled so that diam(X) ≤ 1:
//!
//! * circle systems use twice the arc-length distance (antipodal points are at
//!   distance 1),
//! * shift spaces use 2^{-j} with j the first index of disagreement,
//!   truncated at depth 64,
//! * products use the max of the component distances.

mod circle;
mod point;
mod symbols;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use point::{CirclePoint, DyadicPoint, PointRef, ShiftPoint};
pub use symbols::{BlockGrowth, Extension, SymbolSource};

pub(crate) use circle::{arc, rotate, wrap};
#[cfg(test)]
use point::splitmix64;

use crate::averaging::RealTrace;
use crate::error::{domain, Error, Result};

/// (√5 − 1)/2
pub const PHI: f64 = 0.618_033_988_749_894_9;
/// √2 − 1
pub const SQRT2_FRAC: f64 = 0.414_213_562_373_095_1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum SystemSpec {
    CircleRotation {
        alpha: f64,
    },
    DoublingMap,
    BinaryShift {
        source: Arc<SymbolSource>,
    },
    ProductSystem {
        left: Box<SystemSpec>,
        right: Box<SystemSpec>,
    },
}

impl SystemSpec {
    pub fn rotation(alpha: f64) -> Self {
        SystemSpec::CircleRotation { alpha }
    }

    pub fn shift(source: SymbolSource) -> Self {
        SystemSpec::BinaryShift {
            source: Arc::new(source),
        }
    }

    pub fn product(left: SystemSpec, right: SystemSpec) -> Self {
        SystemSpec::ProductSystem {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::CircleRotation { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(domain(format!(
                        "rotation number must lie in (0, 1), got {alpha}"
                    )));
                }
                Ok(())
            }
            SystemSpec::DoublingMap => Ok(()),
            SystemSpec::BinaryShift { source } => source.validate(),
            SystemSpec::ProductSystem { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SystemSpec::CircleRotation { .. } => "circle_rotation",
            SystemSpec::DoublingMap => "doubling_map",
            SystemSpec::BinaryShift { .. } => "binary_shift",
            SystemSpec::ProductSystem { .. } => "product_system",
        }
    }

    /// Factor applied to the natural metric so that the diameter is 1.
    pub fn metric_scale(&self) -> f64 {
        match self {
            SystemSpec::CircleRotation { .. } | SystemSpec::DoublingMap => 2.0,
            SystemSpec::BinaryShift { .. } | SystemSpec::ProductSystem { .. } => 1.0,
        }
    }

    pub fn diameter(&self) -> f64 {
        1.0
    }

    pub fn is_circle(&self) -> bool {
        matches!(
            self,
            SystemSpec::CircleRotation { .. } | SystemSpec::DoublingMap
        )
    }

    /// A point of a circle system at coordinate `x` (reduced mod 1).
    pub fn circle_point(&self, x: f64) -> Result<PointRef> {
        match self {
            SystemSpec::CircleRotation { .. } => Ok(PointRef::Circle(CirclePoint::new(x))),
            SystemSpec::DoublingMap => Ok(PointRef::Dyadic(DyadicPoint::new(x))),
            _ => Err(Error::KindMismatch { expected: "circle" }),
        }
    }

    /// The natural starting point: 0 on circles, the generating sequence on
    /// shifts, and the pair of base points on products.
    pub fn base_point(&self) -> PointRef {
        match self {
            SystemSpec::CircleRotation { .. } => PointRef::Circle(CirclePoint::new(0.0)),
            SystemSpec::DoublingMap => PointRef::Dyadic(DyadicPoint::new(0.0)),
            SystemSpec::BinaryShift { source } => PointRef::shift(Arc::clone(source), 0),
            SystemSpec::ProductSystem { left, right } => {
                PointRef::pair(left.base_point(), right.base_point())
            }
        }
    }

    /// Coordinate in [0, 1) of a circle-system point.
    pub fn coordinate(&self, p: &PointRef) -> Result<f64> {
        match (self, p) {
            (SystemSpec::CircleRotation { alpha }, PointRef::Circle(c)) => {
                Ok(rotate(c.base, c.steps, *alpha))
            }
            (SystemSpec::DoublingMap, PointRef::Dyadic(d)) => Ok(d.value()),
            _ => Err(Error::KindMismatch { expected: "circle" }),
        }
    }

    pub fn check_point(&self, p: &PointRef) -> Result<()> {
        match (self, p) {
            (SystemSpec::CircleRotation { .. }, PointRef::Circle(_))
            | (SystemSpec::DoublingMap, PointRef::Dyadic(_))
            | (SystemSpec::BinaryShift { .. }, PointRef::Shift(_)) => Ok(()),
            (SystemSpec::ProductSystem { left, right }, PointRef::Pair { left: l, right: r }) => {
                left.check_point(l)?;
                right.check_point(r)
            }
            _ => Err(self.mismatch()),
        }
    }

    fn mismatch(&self) -> Error {
        Error::KindMismatch {
            expected: self.kind_name(),
        }
    }

    pub fn step(&self, p: &PointRef) -> Result<PointRef> {
        match (self, p) {
            (SystemSpec::CircleRotation { .. }, PointRef::Circle(c)) => {
                Ok(PointRef::Circle(CirclePoint {
                    base: c.base,
                    steps: c.steps + 1,
                }))
            }
            (SystemSpec::DoublingMap, PointRef::Dyadic(d)) => Ok(PointRef::Dyadic(d.doubled())),
            (SystemSpec::BinaryShift { .. }, PointRef::Shift(s)) => {
                Ok(PointRef::Shift(s.shifted()))
            }
            (SystemSpec::ProductSystem { left, right }, PointRef::Pair { left: l, right: r }) => {
                Ok(PointRef::pair(left.step(l)?, right.step(r)?))
            }
            _ => Err(self.mismatch()),
        }
    }

    /// T^m p. Rotations and shifts jump directly.
    pub fn advance(&self, p: &PointRef, m: u64) -> Result<PointRef> {
        match (self, p) {
            (SystemSpec::CircleRotation { .. }, PointRef::Circle(c)) => {
                Ok(PointRef::Circle(CirclePoint {
                    base: c.base,
                    steps: c.steps + m,
                }))
            }
            (SystemSpec::BinaryShift { .. }, PointRef::Shift(s)) => {
                Ok(PointRef::Shift(s.shifted_by(m)))
            }
            (SystemSpec::ProductSystem { left, right }, PointRef::Pair { left: l, right: r }) => {
                Ok(PointRef::pair(left.advance(l, m)?, right.advance(r, m)?))
            }
            _ => {
                let mut q = p.clone();
                self.check_point(&q)?;
                for _ in 0..m {
                    q = self.step(&q)?;
                }
                Ok(q)
            }
        }
    }

    pub fn distance(&self, p: &PointRef, q: &PointRef) -> Result<f64> {
        match (self, p, q) {
            (SystemSpec::CircleRotation { alpha }, PointRef::Circle(a), PointRef::Circle(b)) => {
                if a.steps == b.steps {
                    // shared rotation offset, so the difference is exact up to two roundings
                    let t = rotate(0.0, a.steps, *alpha);
                    Ok(2.0 * arc(wrap(a.base + t), wrap(b.base + t)))
                } else {
                    Ok(2.0
                        * arc(
                            rotate(a.base, a.steps, *alpha),
                            rotate(b.base, b.steps, *alpha),
                        ))
                }
            }
            (SystemSpec::DoublingMap, PointRef::Dyadic(a), PointRef::Dyadic(b)) => {
                let diff = a.bits.wrapping_sub(b.bits);
                let d = diff.min(diff.wrapping_neg());
                // d ≤ 2^63, scaled distance is 2d / 2^64
                Ok(d as f64 / 9_223_372_036_854_775_808.0)
            }
            (SystemSpec::BinaryShift { .. }, PointRef::Shift(a), PointRef::Shift(b)) => {
                Ok(shift_distance(a.head(), b.head()))
            }
            (
                SystemSpec::ProductSystem { left, right },
                PointRef::Pair {
                    left: pl,
                    right: pr,
                },
                PointRef::Pair {
                    left: ql,
                    right: qr,
                },
            ) => Ok(left.distance(pl, ql)?.max(right.distance(pr, qr)?)),
            _ => Err(self.mismatch()),
        }
    }

    /// (T^{k-1} p, T^{k-1} q) distances for k = 1..=n, bound 1.
    pub fn pair_distance_trace(&self, p: &PointRef, q: &PointRef, n: usize) -> Result<RealTrace> {
        let values = self.pair_distances(p, q, n)?;
        RealTrace::new(values, 1.0)
    }

    pub(crate) fn pair_distances(&self, p: &PointRef, q: &PointRef, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Empty("pair distance trace needs n >= 1"));
        }
        self.check_point(p)?;
        self.check_point(q)?;
        match (self, p, q) {
            (SystemSpec::CircleRotation { alpha }, PointRef::Circle(a), PointRef::Circle(b))
                if a.steps == b.steps =>
            {
                Ok((0..n as u64)
                    .map(|k| {
                        let t = rotate(0.0, a.steps + k, *alpha);
                        2.0 * arc(wrap(a.base + t), wrap(b.base + t))
                    })
                    .collect())
            }
            (SystemSpec::DoublingMap, PointRef::Dyadic(a), PointRef::Dyadic(b)) => {
                let (mut a, mut b) = (*a, *b);
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let diff = a.bits.wrapping_sub(b.bits);
                    out.push(diff.min(diff.wrapping_neg()) as f64 / 9_223_372_036_854_775_808.0);
                    a = a.doubled();
                    b = b.doubled();
                }
                Ok(out)
            }
            _ => {
                let mut out = Vec::with_capacity(n);
                let (mut x, mut y) = (p.clone(), q.clone());
                for k in 0..n {
                    out.push(self.distance(&x, &y)?);
                    if k + 1 < n {
                        x = self.step(&x)?;
                        y = self.step(&y)?;
                    }
                }
                Ok(out)
            }
        }
    }

    /// (T^m p, ..., T^{n-1} p)
    pub fn orbit_segment(&self, p: &PointRef, m: usize, n: usize) -> Result<Vec<PointRef>> {
        if m >= n {
            return Err(Error::Window { m, n, len: n });
        }
        let start = self.advance(p, m as u64)?;
        Ok(self.orbit(start).take(n - m).collect())
    }

    /// Infinite forward orbit starting at `p` (which must belong to `self`).
    pub fn orbit(&self, p: PointRef) -> Orbit<'_> {
        Orbit {
            sys: self,
            next: Some(p),
        }
    }
}

/// 2^{-j} where j is the first index at which the packed heads differ.
#[inline]
pub(crate) fn shift_distance(a: u64, b: u64) -> f64 {
    let x = a ^ b;
    if x == 0 {
        0.0
    } else {
        (2.0_f64).powi(-(x.leading_zeros() as i32))
    }
}

pub struct Orbit<'a> {
    sys: &'a SystemSpec,
    next: Option<PointRef>,
}

impl Iterator for Orbit<'_> {
    type Item = PointRef;

    fn next(&mut self) -> Option<PointRef> {
        let cur = self.next.take()?;
        self.next = self.sys.step(&cur).ok();
        Some(cur)
    }
}

pub fn step(sys: &SystemSpec, p: &PointRef) -> Result<PointRef> {
    sys.step(p)
}

pub fn distance(sys: &SystemSpec, p: &PointRef, q: &PointRef) -> Result<f64> {
    sys.distance(p, q)
}

pub fn pair_distance_trace(
    sys: &SystemSpec,
    p: &PointRef,
    q: &PointRef,
    n: usize,
) -> Result<RealTrace> {
    sys.pair_distance_trace(p, q, n)
}

pub fn orbit_segment(sys: &SystemSpec, p: &PointRef, m: usize, n: usize) -> Result<Vec<PointRef>> {
    sys.orbit_segment(p, m, n)
}
