use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::circle::wrap;
use super::symbols::SymbolSource;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
const TWO_POW_MINUS_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// A point of a circle rotation, stored as its starting coordinate plus the
/// number of rotation steps taken. The coordinate is recomputed from
/// `steps · α` on demand so long orbits do not accumulate drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub base: f64,
    #[serde(default)]
    pub steps: u64,
}

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        Self {
            base: wrap(x),
            steps: 0,
        }
    }
}

/// A point of the doubling map x ↦ 2x mod 1 held as its binary expansion.
///
/// `bits` are the 64 binary digits currently visible (digit `depth` of the
/// original expansion is the most significant). Digits beyond the initial 64
/// come from a counter-based generator keyed by `tail_seed`; seed 0 means an
/// all-zero tail, so dyadic-rational starts behave like the usual
/// floating-point doubling map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicPoint {
    pub bits: u64,
    #[serde(default)]
    pub depth: u64,
    #[serde(default)]
    pub tail_seed: u64,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DyadicPoint {
    pub fn new(x: f64) -> Self {
        Self::with_tail(x, 0)
    }

    pub fn with_tail(x: f64, tail_seed: u64) -> Self {
        Self {
            bits: (wrap(x) * TWO_POW_64) as u64,
            depth: 0,
            tail_seed,
        }
    }

    pub fn from_bits(bits: u64, tail_seed: u64) -> Self {
        Self {
            bits,
            depth: 0,
            tail_seed,
        }
    }

    /// Binary digit `index` (0-based) of the original expansion, for
    /// `index >= 64`.
    #[inline]
    fn tail_digit(&self, index: u64) -> u64 {
        if self.tail_seed == 0 {
            return 0;
        }
        let i = index - 64;
        let word = splitmix64(self.tail_seed ^ splitmix64(i / 64));
        (word >> (63 - i % 64)) & 1
    }

    #[inline]
    pub fn doubled(&self) -> Self {
        let next = self.tail_digit(self.depth + 64);
        Self {
            bits: (self.bits << 1) | next,
            depth: self.depth + 1,
            tail_seed: self.tail_seed,
        }
    }

    /// Coordinate in [0, 1), truncated to 53 bits.
    #[inline]
    pub fn value(&self) -> f64 {
        (self.bits >> 11) as f64 * TWO_POW_MINUS_53
    }
}

/// A point of a one-sided binary shift: the sequence `source` read from
/// `offset` on. The first 64 symbols are cached in `head`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ShiftPointRepr", into = "ShiftPointRepr")]
pub struct ShiftPoint {
    source: Arc<SymbolSource>,
    offset: u64,
    head: u64,
}

#[derive(Serialize, Deserialize)]
struct ShiftPointRepr {
    source: Arc<SymbolSource>,
    #[serde(default)]
    offset: u64,
}

impl From<ShiftPointRepr> for ShiftPoint {
    fn from(r: ShiftPointRepr) -> Self {
        ShiftPoint::new(r.source, r.offset)
    }
}

impl From<ShiftPoint> for ShiftPointRepr {
    fn from(p: ShiftPoint) -> Self {
        ShiftPointRepr {
            source: p.source,
            offset: p.offset,
        }
    }
}

impl PartialEq for ShiftPoint {
    fn eq(&self, other: &Self) -> bool {
        self.offset == other.offset
            && (Arc::ptr_eq(&self.source, &other.source) || self.source == other.source)
    }
}

impl ShiftPoint {
    pub fn new(source: Arc<SymbolSource>, offset: u64) -> Self {
        let head = source.window(offset);
        Self {
            source,
            offset,
            head,
        }
    }

    pub fn source(&self) -> &Arc<SymbolSource> {
        &self.source
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Symbols 0..64 of this point, most significant bit first.
    pub fn head(&self) -> u64 {
        self.head
    }

    pub fn head_symbol(&self) -> u8 {
        (self.head >> 63) as u8
    }

    pub fn symbol(&self, k: u64) -> u8 {
        if k < 64 {
            ((self.head >> (63 - k)) & 1) as u8
        } else {
            self.source.symbol(self.offset + k)
        }
    }

    #[inline]
    pub fn shifted(&self) -> Self {
        let next = u64::from(self.source.symbol(self.offset + 64));
        Self {
            source: Arc::clone(&self.source),
            offset: self.offset + 1,
            head: (self.head << 1) | next,
        }
    }

    pub fn shifted_by(&self, m: u64) -> Self {
        if m >= 64 {
            Self::new(Arc::clone(&self.source), self.offset + m)
        } else {
            (0..m).fold(self.clone(), |p, _| p.shifted())
        }
    }
}

/// A point of some [`SystemSpec`](super::SystemSpec).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointRef {
    Circle(CirclePoint),
    Dyadic(DyadicPoint),
    Shift(ShiftPoint),
    Pair {
        left: Box<PointRef>,
        right: Box<PointRef>,
    },
}

impl PointRef {
    pub fn pair(left: PointRef, right: PointRef) -> Self {
        PointRef::Pair {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn shift(source: Arc<SymbolSource>, offset: u64) -> Self {
        PointRef::Shift(ShiftPoint::new(source, offset))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PointRef::Circle(_) => "circle",
            PointRef::Dyadic(_) => "dyadic",
            PointRef::Shift(_) => "shift",
            PointRef::Pair { .. } => "pair",
        }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointRef::Circle(c) => write!(f, "circle:{:.16e}+{}", c.base, c.steps),
            PointRef::Dyadic(d) => write!(f, "dyadic:{:.16e}", d.value()),
            PointRef::Shift(s) => write!(f, "shift@{}:{:016x}", s.offset, s.head),
            PointRef::Pair { left, right } => write!(f, "({left};{right})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_exact_on_dyadic_inputs() {
        let p = DyadicPoint::new(0.3).doubled();
        assert_eq!(p.value(), 0.6);
        let p = DyadicPoint::new(0.75).doubled();
        assert_eq!(p.value(), 0.5);
    }

    #[test]
    fn random_tail_keeps_orbit_alive() {
        let mut p = DyadicPoint::with_tail(0.0, 42);
        let mut nonzero = 0;
        for k in 0..1000 {
            p = p.doubled();
            if k >= 64 && p.value() > 0.0 {
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 936);
        let mut q = DyadicPoint::new(0.0);
        for _ in 0..100 {
            q = q.doubled();
        }
        assert_eq!(q.value(), 0.0);
    }

    #[test]
    fn shift_head_tracks_source() {
        let src = Arc::new(SymbolSource::Periodic { word: "01".into() });
        let p = ShiftPoint::new(src.clone(), 0);
        assert_eq!(p.head_symbol(), 0);
        let q = p.shifted();
        assert_eq!(q.head_symbol(), 1);
        assert_eq!(q.offset(), 1);
        assert_eq!(q.head(), src.window(1));
        let far = p.shifted_by(1001);
        assert_eq!(far.head(), src.window(1001));
        assert_eq!(p.shifted_by(7).head(), src.window(7));
        assert_eq!(p.symbol(70), 0);
    }

    #[test]
    fn point_json_roundtrip() {
        let p = PointRef::pair(
            PointRef::Circle(CirclePoint::new(0.25)),
            PointRef::shift(Arc::new(SymbolSource::Constant { symbol: 1 }), 3),
        );
        let j = serde_json::to_string(&p).unwrap();
        let back: PointRef = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
        if let PointRef::Pair { right, .. } = back {
            if let PointRef::Shift(s) = *right {
                assert_eq!(s.head(), u64::MAX);
            }
        }
    }
}
