//! Orbit-distance gaps between pairs of points, moduli of mean
//! equicontinuity, mean-sensitivity estimates and the classifiers built on
//! them.
//!
//! Every limit in the definitions is replaced by a tail estimate: the
//! max/min of the finite-horizon value over the trailing part of a geometric
//! schedule ending at the evaluation horizon.

mod dichotomy;
mod modulus;
mod oxtoby;
mod sampler;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::averaging::{
    harmonic, tail_estimates, CompensatedSum, PrefixAverages, ScheduleParams, TailEstimate,
};
use crate::error::{domain, Error, Result};
use crate::systems::{PointRef, SystemSpec};

pub use dichotomy::{
    dichotomy_classify, unique_ergodicity_test, DichotomyConfig, DichotomyVerdict,
    UniqueErgodicityReport, UniqueErgodicityVerdict, Verdict, DEFAULT_SENSITIVITY_THRESHOLD,
    DEFAULT_UE_TOL,
};
pub use modulus::{
    default_eps_grid, delta_grid, modulus_profile, sensitivity_at_quantile, sensitivity_estimate,
    write_modulus_csv, ModulusProfile, SensitivityReport, DEFAULT_QUANTILE, DELTA_GRID_LEN,
    MIN_PAIR_COUNT,
};
pub use oxtoby::{oxtoby_experiment, OxtobyReport, OXTOBY_INTERVALS};
pub use sampler::{PairSampler, SamplerKind};

/// Averaging scheme applied to a pair-distance trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapScheme {
    Cesaro,
    Logarithmic,
    WeylCesaro,
    WeylLogarithmic,
}

impl GapScheme {
    pub const ALL: [GapScheme; 4] = [
        GapScheme::Cesaro,
        GapScheme::Logarithmic,
        GapScheme::WeylCesaro,
        GapScheme::WeylLogarithmic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GapScheme::Cesaro => "cesaro",
            GapScheme::Logarithmic => "log",
            GapScheme::WeylCesaro => "weyl-cesaro",
            GapScheme::WeylLogarithmic => "weyl-log",
        }
    }

    pub fn is_weyl(self) -> bool {
        matches!(self, GapScheme::WeylCesaro | GapScheme::WeylLogarithmic)
    }

    pub fn is_logarithmic(self) -> bool {
        matches!(self, GapScheme::Logarithmic | GapScheme::WeylLogarithmic)
    }
}

impl fmt::Display for GapScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GapScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cesaro" | "arithmetic" => Ok(GapScheme::Cesaro),
            "log" | "logarithmic" => Ok(GapScheme::Logarithmic),
            "weyl-cesaro" | "weyl_cesaro" => Ok(GapScheme::WeylCesaro),
            "weyl-log" | "weyl_log" | "weyl_logarithmic" => Ok(GapScheme::WeylLogarithmic),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Relative window offsets whose maximum stands in for the supremum over m
/// in the Weyl schemes.
pub const WEYL_OFFSETS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Average of d(T^{k−1}x, T^{k−1}y) over the window (m, n]: arithmetic for
/// the Cesàro schemes, 1/(k−m)-weighted for the logarithmic ones.
pub fn pair_gap(
    sys: &SystemSpec,
    x: &PointRef,
    y: &PointRef,
    m: usize,
    n: usize,
    scheme: GapScheme,
) -> Result<f64> {
    if m >= n {
        return Err(Error::Window { m, n, len: n });
    }
    let trace = sys.pair_distance_trace(x, y, n)?;
    if scheme.is_logarithmic() {
        trace.log_avg(m, n)
    } else {
        trace.cesaro_avg(m, n)
    }
}

/// One row of a Cesàro-vs-logarithmic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub cesaro: f64,
    pub log: f64,
    pub gap: f64,
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Empty("schedule must be nonempty"));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain(
            "schedule must be strictly increasing and start at n >= 1",
        ));
    }
    Ok(())
}

/// Both (0, n] averages of the pair-distance trace at every schedule point.
pub fn cesaro_log_rows(
    sys: &SystemSpec,
    x: &PointRef,
    y: &PointRef,
    schedule: &[usize],
) -> Result<Vec<GapRow>> {
    check_schedule(schedule)?;
    let n_max = *schedule.last().expect("nonempty");
    let d = sys.pair_distances(x, y, n_max)?;
    let (ces, log) = PrefixAverages::new(&d).at_schedule(schedule)?;
    Ok(schedule
        .iter()
        .zip(ces.into_iter().zip(log))
        .map(|(&n, (c, l))| GapRow {
            n,
            cesaro: c,
            log: l,
            gap: (c - l).abs(),
        })
        .collect())
}

/// |Cesàro − logarithmic| of the pair-distance trace at each schedule point.
pub fn cesaro_log_gap(
    sys: &SystemSpec,
    x: &PointRef,
    y: &PointRef,
    schedule: &[usize],
) -> Result<Vec<f64>> {
    Ok(cesaro_log_rows(sys, x, y, schedule)?
        .into_iter()
        .map(|r| r.gap)
        .collect())
}

pub fn write_gap_csv<W: Write>(rows: &[GapRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,cesaro,log,gap")?;
    for r in rows {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.n, r.cesaro, r.log, r.gap)?;
    }
    Ok(())
}

/// Log-weighted average of `d` over (m, m + len].
fn log_window(d: &[f64], m: usize, len: usize, h: f64) -> f64 {
    let mut s = CompensatedSum::new();
    for (i, &v) in d[m..m + len].iter().enumerate() {
        s.add(v / (i + 1) as f64);
    }
    s.value() / h
}

/// Gap values along `schedule` for one distance trace (which must cover
/// the last schedule point).
pub(crate) fn gap_values(d: &[f64], schedule: &[usize], scheme: GapScheme) -> Result<Vec<f64>> {
    let prefix = PrefixAverages::new(d);
    if !scheme.is_weyl() {
        let (ces, log) = prefix.at_schedule(schedule)?;
        return Ok(if scheme.is_logarithmic() { log } else { ces });
    }
    let n_eval = d.len();
    schedule
        .iter()
        .map(|&len| {
            if len == 0 || len > n_eval {
                return Err(Error::Window {
                    m: 0,
                    n: len,
                    len: n_eval,
                });
            }
            let h = harmonic(len)?;
            let mut best = f64::NEG_INFINITY;
            for q in WEYL_OFFSETS {
                let m = (q * (n_eval - len) as f64).floor() as usize;
                let v = if scheme.is_logarithmic() {
                    log_window(d, m, len, h)
                } else {
                    prefix.cesaro_window(m, m + len)?
                };
                best = best.max(v);
            }
            Ok(best)
        })
        .collect()
}

/// Tail estimate of the gap between x and y up to `n_eval`.
pub fn gap_tail(
    sys: &SystemSpec,
    x: &PointRef,
    y: &PointRef,
    n_eval: usize,
    scheme: GapScheme,
    params: &ScheduleParams,
) -> Result<TailEstimate> {
    let schedule = params.schedule(n_eval)?;
    let d = sys.pair_distances(x, y, n_eval)?;
    let values = gap_values(&d, &schedule, scheme)?;
    tail_estimates(&schedule, &values, params.window_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{BlockGrowth, SymbolSource, PHI, SQRT2_FRAC};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn rotation_gap_is_initial_distance() {
        let sys = SystemSpec::rotation(PHI);
        let x = sys.circle_point(0.0).unwrap();
        let y = sys.circle_point(0.25).unwrap();
        for scheme in GapScheme::ALL {
            for (m, n) in [(0, 1), (0, 1000), (37, 5000)] {
                assert!((pair_gap(&sys, &x, &y, m, n, scheme).unwrap() - 0.5).abs() < 1e-12);
            }
            assert_eq!(pair_gap(&sys, &x, &x, 0, 100, scheme).unwrap(), 0.0);
        }
        assert!(pair_gap(&sys, &x, &y, 5, 5, GapScheme::Cesaro).is_err());
    }

    #[test]
    fn weyl_window_matches_shifted_start() {
        let sys = SystemSpec::DoublingMap;
        let x = PointRef::Dyadic(crate::systems::DyadicPoint::from_bits(
            0x1234_5678_9ABC_DEF0,
            7,
        ));
        let y = PointRef::Dyadic(crate::systems::DyadicPoint::from_bits(
            0x0FED_CBA9_8765_4321,
            9,
        ));
        let (m, n) = (300, 2000);
        let xm = sys.advance(&x, m as u64).unwrap();
        let ym = sys.advance(&y, m as u64).unwrap();
        for scheme in [GapScheme::WeylCesaro, GapScheme::WeylLogarithmic] {
            let windowed = pair_gap(&sys, &x, &y, m, n, scheme).unwrap();
            let restarted = pair_gap(&sys, &xm, &ym, 0, n - m, scheme).unwrap();
            assert!((windowed - restarted).abs() < 1e-14);
        }
    }

    #[test]
    fn cesaro_log_gap_examples() {
        let sys = SystemSpec::rotation(SQRT2_FRAC);
        let x = sys.circle_point(0.1).unwrap();
        let y = sys.circle_point(0.3).unwrap();
        let gaps = cesaro_log_gap(&sys, &x, &y, &[10, 100, 1000]).unwrap();
        assert!(gaps.iter().all(|g| *g < 1e-12));
        assert!(cesaro_log_gap(&sys, &x, &x, &[10, 100])
            .unwrap()
            .iter()
            .all(|g| *g == 0.0));
        assert!(cesaro_log_gap(&sys, &x, &y, &[10, 10]).is_err());
    }

    #[test]
    fn block_sequence_pair_separates_schemes() {
        let blocks = Arc::new(SymbolSource::BlockSequence {
            growth: BlockGrowth::Geometric { base: 2 },
        });
        let sys = SystemSpec::BinaryShift {
            source: blocks.clone(),
        };
        let x = PointRef::shift(blocks, 0);
        let y = PointRef::shift(Arc::new(SymbolSource::Constant { symbol: 0 }), 0);
        let schedule: Vec<usize> = (4..=16).map(|j| (1usize << j) - 1).collect();
        let gaps = cesaro_log_gap(&sys, &x, &y, &schedule).unwrap();

        // oracle: the distance from 0^∞ is 2^{-j} with j the first 1 at or after the current position
        let len = 1usize << 17;
        let seq: Vec<u8> = (0..len as u64)
            .map(|k| ((63 - (k + 1).leading_zeros()) % 2) as u8)
            .collect();
        let mut next_one = vec![u64::MAX; len + 1];
        for k in (0..len).rev() {
            next_one[k] = if seq[k] == 1 {
                k as u64
            } else {
                next_one[k + 1]
            };
        }
        let d: Vec<f64> = (0..len)
            .map(|k| {
                let j = next_one[k].saturating_sub(k as u64);
                if j >= 64 {
                    0.0
                } else {
                    0.5f64.powi(j as i32)
                }
            })
            .collect();
        let mut best = 0.0f64;
        for (&n, g) in schedule.iter().zip(&gaps) {
            let ces = d[..n].iter().sum::<f64>() / n as f64;
            let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
            let log = d[..n]
                .iter()
                .enumerate()
                .map(|(i, v)| v / (i + 1) as f64)
                .sum::<f64>()
                / h;
            assert!((g - (ces - log).abs()).abs() < 1e-9, "n = {n}");
            best = best.max(*g);
        }
        assert!(best >= 0.1, "max gap {best}");
    }

    #[test]
    fn weyl_values_dominate_plain_cesaro() {
        let d: Vec<f64> = (0..1000)
            .map(|k| if (k / 100) % 2 == 0 { 0.0 } else { 1.0 })
            .collect();
        let schedule = [50, 100, 400, 1000];
        let plain = gap_values(&d, &schedule, GapScheme::Cesaro).unwrap();
        let weyl = gap_values(&d, &schedule, GapScheme::WeylCesaro).unwrap();
        for (p, w) in plain.iter().zip(&weyl) {
            assert!(w >= p);
        }
        assert_eq!(weyl[0], 1.0);
        assert_eq!(plain[3], weyl[3]);
    }

    #[test]
    fn gap_csv_header() {
        let mut buf = Vec::new();
        write_gap_csv(
            &[GapRow {
                n: 3,
                cesaro: 0.5,
                log: 0.25,
                gap: 0.25,
            }],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,cesaro,log,gap\n3,5.0000000000000000e-1,2.5000000000000000e-1,2.5000000000000000e-1\n");
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in GapScheme::ALL {
            assert_eq!(s.name().parse::<GapScheme>().unwrap(), s);
        }
        assert!("median".parse::<GapScheme>().is_err());
    }

    proptest! {
        #[test]
        fn rotation_exact_for_every_window(alpha in 0.001f64..0.999, a in 0.0f64..1.0, b in 0.0f64..1.0,
                                           m in 0usize..200, len in 1usize..2000) {
            let sys = SystemSpec::rotation(alpha);
            let (x, y) = (sys.circle_point(a).unwrap(), sys.circle_point(b).unwrap());
            let d = sys.distance(&x, &y).unwrap();
            for scheme in GapScheme::ALL {
                prop_assert!((pair_gap(&sys, &x, &y, m, m + len, scheme).unwrap() - d).abs() <= 1e-12);
            }
        }

        #[test]
        fn log_average_sits_between_prefix_extremes(bits_x in any::<u64>(), bits_y in any::<u64>(), n in 1usize..3000) {
            let sys = SystemSpec::DoublingMap;
            let x = PointRef::Dyadic(crate::systems::DyadicPoint::from_bits(bits_x, 3));
            let y = PointRef::Dyadic(crate::systems::DyadicPoint::from_bits(bits_y, 5));
            let d = sys.pair_distances(&x, &y, n).unwrap();
            let prefix = PrefixAverages::new(&d);
            let ces: Vec<f64> = (1..=n).map(|k| prefix.cesaro(k).unwrap()).collect();
            let lo = ces.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let l = pair_gap(&sys, &x, &y, 0, n, GapScheme::Logarithmic).unwrap();
            prop_assert!(l >= lo - 1e-12 && l <= hi + 1e-12);
        }
    }
}
