use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::systems::{
    CirclePoint, DyadicPoint, Extension, PointRef, ShiftPoint, SymbolSource, SystemSpec,
};

/// Shift points are drawn as T^k of the generating sequence with k uniform
/// below this bound.
const NATURAL_SPAN: u64 = 1 << 20;

/// Fraction of δ used for the deterministic boundary pair.
pub(crate) const BOUNDARY_FRACTION: f64 = 1.0 - 1.0 / 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// x from the natural measure, y within `radius` of x.
    Ball { radius: f64 },
    /// x and y independent from the natural measure.
    Natural,
}

/// Reproducible pair generator. Pair `i` is drawn from ChaCha8 stream `i`
/// of `seed`, so results do not depend on how pairs are spread over threads.
///
/// Natural measures: Lebesgue on circles, uniform random binary digits for
/// the doubling map, a uniformly random shift of the generating sequence
/// for shifts, and the product of the marginals for products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl PairSampler {
    pub fn ball(radius: f64, seed: u64) -> Self {
        Self {
            kind: SamplerKind::Ball { radius },
            seed,
        }
    }

    pub fn natural(seed: u64) -> Self {
        Self {
            kind: SamplerKind::Natural,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SamplerKind::Ball { radius } if !(radius > 0.0 && radius <= 1.0) => Err(domain(
                format!("ball radius must lie in (0, 1], got {radius}"),
            )),
            _ => Ok(()),
        }
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// The `index`-th pair of this sampler.
    pub fn sample(&self, sys: &SystemSpec, index: u64) -> Result<(PointRef, PointRef)> {
        self.validate()?;
        match self.kind {
            SamplerKind::Ball { radius } => self.pair_within(sys, radius, index, false),
            SamplerKind::Natural => {
                let mut rng = self.rng(index);
                let x = natural_point(sys, &mut rng);
                let y = natural_point(sys, &mut rng);
                Ok((x, y))
            }
        }
    }

    /// A pair with d(x, y) < δ. The boundary pair sits as close to δ as the
    /// construction allows: δ(1 − 2^{-12}) on circles, the largest power of
    /// two below δ on shifts.
    pub fn pair_within(
        &self,
        sys: &SystemSpec,
        delta: f64,
        index: u64,
        boundary: bool,
    ) -> Result<(PointRef, PointRef)> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(domain(format!(
                "pair distance bound must lie in (0, 1], got {delta}"
            )));
        }
        let mut rng = self.rng(index);
        let x = natural_point(sys, &mut rng);
        let y = nearby(sys, &x, delta, boundary, &mut rng);
        Ok((x, y))
    }
}

fn natural_point(sys: &SystemSpec, rng: &mut ChaCha8Rng) -> PointRef {
    match sys {
        SystemSpec::CircleRotation { .. } => PointRef::Circle(CirclePoint::new(rng.gen::<f64>())),
        SystemSpec::DoublingMap => {
            PointRef::Dyadic(DyadicPoint::from_bits(rng.gen(), rng.gen::<u64>() | 1))
        }
        SystemSpec::BinaryShift { source } => {
            PointRef::shift(Arc::clone(source), rng.gen_range(0..NATURAL_SPAN))
        }
        SystemSpec::ProductSystem { left, right } => {
            let l = natural_point(left, rng);
            PointRef::pair(l, natural_point(right, rng))
        }
    }
}

fn fraction(boundary: bool, rng: &mut ChaCha8Rng) -> f64 {
    if boundary {
        BOUNDARY_FRACTION
    } else {
        rng.gen::<f64>() * BOUNDARY_FRACTION
    }
}

fn nearby(
    sys: &SystemSpec,
    x: &PointRef,
    delta: f64,
    boundary: bool,
    rng: &mut ChaCha8Rng,
) -> PointRef {
    match (sys, x) {
        (SystemSpec::CircleRotation { .. }, PointRef::Circle(c)) => {
            let offset = fraction(boundary, rng) * delta / sys.metric_scale();
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            PointRef::Circle(CirclePoint::new(c.base + sign * offset))
        }
        (SystemSpec::DoublingMap, PointRef::Dyadic(d)) => {
            // scaled distance is 2·|Δbits| / 2^64
            let offset = (fraction(boundary, rng) * delta * 9_223_372_036_854_775_808.0) as u64;
            let bits = if rng.gen::<bool>() {
                d.bits.wrapping_add(offset)
            } else {
                d.bits.wrapping_sub(offset)
            };
            PointRef::Dyadic(DyadicPoint::from_bits(bits, rng.gen::<u64>() | 1))
        }
        (SystemSpec::BinaryShift { source }, PointRef::Shift(s)) => {
            // smallest j with 2^{-j} < δ: agree on symbols 0..j
            let j = ((-delta.log2()).floor() as u64 + 1).min(64);
            let mut word: String = (0..j).map(|k| char::from(b'0' + s.symbol(k))).collect();
            if boundary && j < 64 {
                word.push(char::from(b'1' - s.symbol(j)));
            }
            let len = word.len() as u64;
            let start = rng.gen_range(len..len + NATURAL_SPAN);
            let tail = Extension::Continue {
                source: Arc::clone(source),
                offset: start - len,
            };
            if word.is_empty() {
                return PointRef::Shift(ShiftPoint::new(Arc::clone(source), start));
            }
            PointRef::shift(
                Arc::new(SymbolSource::Explicit {
                    word,
                    extension: tail,
                }),
                0,
            )
        }
        (SystemSpec::ProductSystem { left, right }, PointRef::Pair { left: l, right: r }) => {
            let yl = nearby(left, l, delta, boundary, rng);
            PointRef::pair(yl, nearby(right, r, delta, boundary, rng))
        }
        _ => unreachable!("natural_point matches the system"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{BlockGrowth, PHI};

    fn fixtures() -> Vec<SystemSpec> {
        let blocks = SymbolSource::BlockSequence {
            growth: BlockGrowth::Geometric { base: 2 },
        };
        vec![
            SystemSpec::rotation(PHI),
            SystemSpec::DoublingMap,
            SystemSpec::shift(SymbolSource::Sturmian {
                alpha: PHI,
                x0: 0.0,
            }),
            SystemSpec::shift(blocks),
            SystemSpec::product(SystemSpec::rotation(PHI), SystemSpec::DoublingMap),
        ]
    }

    #[test]
    fn pairs_respect_the_distance_bound() {
        for sys in fixtures() {
            let s = PairSampler::natural(11);
            for i in 1..=20 {
                let delta = 0.5f64.powi(i);
                for k in 0..10 {
                    let (x, y) = s.pair_within(&sys, delta, k, k == 0).unwrap();
                    sys.check_point(&x).unwrap();
                    sys.check_point(&y).unwrap();
                    let d = sys.distance(&x, &y).unwrap();
                    assert!(d < delta, "{} δ = {delta}: d = {d}", sys.kind_name());
                }
            }
        }
    }

    #[test]
    fn boundary_pairs_sit_near_delta() {
        let s = PairSampler::natural(5);
        for sys in [SystemSpec::rotation(PHI), SystemSpec::DoublingMap] {
            for i in 1..=20 {
                let delta = 0.5f64.powi(i);
                let (x, y) = s.pair_within(&sys, delta, 0, true).unwrap();
                let d = sys.distance(&x, &y).unwrap();
                assert!(d > delta * 0.999 && d < delta);
            }
        }
        let sys = SystemSpec::shift(SymbolSource::Sturmian {
            alpha: PHI,
            x0: 0.0,
        });
        let (x, y) = s.pair_within(&sys, 0.3, 0, true).unwrap();
        assert_eq!(sys.distance(&x, &y).unwrap(), 0.25);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = PairSampler::natural(42);
        let sys = SystemSpec::DoublingMap;
        assert_eq!(s.sample(&sys, 3).unwrap(), s.sample(&sys, 3).unwrap());
        assert_ne!(s.sample(&sys, 3).unwrap(), s.sample(&sys, 4).unwrap());
        assert!(PairSampler::ball(0.0, 1).sample(&sys, 0).is_err());
        assert!(s.pair_within(&sys, 1.5, 0, false).is_err());
    }
}
