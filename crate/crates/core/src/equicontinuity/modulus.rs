use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::PairSampler;
use super::{gap_tail, GapScheme};
use crate::averaging::ScheduleParams;
use crate::error::{domain, Error, Result};
use crate::systems::SystemSpec;

/// Number of δ levels: 2^{-1}, ..., 2^{-20}.
pub const DELTA_GRID_LEN: usize = 20;
pub const MIN_PAIR_COUNT: usize = 30;
pub const DEFAULT_QUANTILE: f64 = 0.1;

pub fn delta_grid() -> Vec<f64> {
    (1..=DELTA_GRID_LEN as i32)
        .map(|i| 0.5f64.powi(i))
        .collect()
}

/// 2^{-1}, ..., 2^{-len}
pub fn default_eps_grid(len: usize) -> Vec<f64> {
    (1..=len as i32).map(|i| 0.5f64.powi(i)).collect()
}

/// For each ε, the largest dyadic δ such that every sampled pair closer
/// than δ had tail-sup gap below ε; `None` when even 2^{-20} fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    pub eps_grid: Vec<f64>,
    pub delta_of_eps: Vec<Option<f64>>,
    pub scheme: GapScheme,
    pub n_eval: usize,
    pub sample_count: usize,
    pub delta_grid: Vec<f64>,
    /// Largest tail-sup gap among sampled pairs with d(x, y) < δ, per δ.
    pub worst_gap: Vec<f64>,
}

impl ModulusProfile {
    pub fn is_complete(&self) -> bool {
        self.delta_of_eps.iter().all(Option::is_some)
    }

    pub fn failures(&self) -> Vec<f64> {
        self.eps_grid
            .iter()
            .zip(&self.delta_of_eps)
            .filter(|(_, d)| d.is_none())
            .map(|(e, _)| *e)
            .collect()
    }
}

/// CSV with header `eps,delta,scheme,n,samples`; failures print `nan`.
pub fn write_modulus_csv<W: Write>(profile: &ModulusProfile, mut w: W) -> io::Result<()> {
    writeln!(w, "eps,delta,scheme,n,samples")?;
    for (eps, delta) in profile.eps_grid.iter().zip(&profile.delta_of_eps) {
        let delta = delta.map_or_else(|| "nan".to_string(), |d| format!("{d:.16e}"));
        writeln!(
            w,
            "{eps:.16e},{delta},{},{},{}",
            profile.scheme, profile.n_eval, profile.sample_count
        )?;
    }
    Ok(())
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::Empty("eps grid must be nonempty"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(domain("eps grid must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Samples `samples_per_delta` random pairs plus one boundary pair at every
/// δ level, then picks δ(ε) by bisection over the levels. Later (smaller) ε
/// only search levels at or below the previous answer, so δ(ε) is
/// nonincreasing along the grid.
pub fn modulus_profile(
    sys: &SystemSpec,
    eps_grid: &[f64],
    sampler: &PairSampler,
    n_eval: usize,
    scheme: GapScheme,
    samples_per_delta: usize,
    params: &ScheduleParams,
) -> Result<ModulusProfile> {
    check_eps_grid(eps_grid)?;
    if samples_per_delta == 0 {
        return Err(domain("samples per δ must be >= 1"));
    }
    if n_eval == 0 {
        return Err(domain("evaluation horizon must be >= 1"));
    }
    params.validate()?;
    let deltas = delta_grid();
    let per_level = samples_per_delta + 1;
    let pairs: Vec<(f64, f64)> = (0..deltas.len() * per_level)
        .into_par_iter()
        .map(|i| {
            let (level, s) = (i / per_level, i % per_level);
            let (x, y) = sampler.pair_within(sys, deltas[level], i as u64, s == 0)?;
            let d = sys.distance(&x, &y)?;
            Ok((d, gap_tail(sys, &x, &y, n_eval, scheme, params)?.sup_est))
        })
        .collect::<Result<_>>()?;

    // worst[i] is nonincreasing in i, so "worst[i] < ε" is monotone
    let worst_gap: Vec<f64> = deltas
        .iter()
        .map(|&delta| {
            pairs
                .iter()
                .filter(|p| p.0 < delta)
                .map(|p| p.1)
                .fold(0.0, f64::max)
        })
        .collect();

    let last = deltas.len() - 1;
    let mut lo = 0;
    let mut delta_of_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let pass = |i: usize| worst_gap[i] < eps;
        if lo > last || !pass(last) {
            lo = deltas.len();
            delta_of_eps.push(None);
            continue;
        }
        if !pass(lo) {
            // pass(lo) false, pass(hi) true
            let mut hi = last;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if pass(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo = hi;
        }
        delta_of_eps.push(Some(deltas[lo]));
    }
    Ok(ModulusProfile {
        eps_grid: eps_grid.to_vec(),
        delta_of_eps,
        scheme,
        n_eval,
        sample_count: pairs.len(),
        delta_grid: deltas,
        worst_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub eps_estimate: f64,
    pub pair_count: usize,
    pub n_eval: usize,
    pub scheme: GapScheme,
    pub quantile_used: f64,
    pub sampler: PairSampler,
    pub mean_tail_inf: f64,
    pub min_tail_inf: f64,
    pub max_tail_inf: f64,
}

/// Low quantile of the tail-inf gaps over `pair_count` sampled pairs.
pub fn sensitivity_estimate(
    sys: &SystemSpec,
    sampler: &PairSampler,
    n_eval: usize,
    scheme: GapScheme,
    pair_count: usize,
    params: &ScheduleParams,
) -> Result<SensitivityReport> {
    sensitivity_at_quantile(
        sys,
        sampler,
        n_eval,
        scheme,
        pair_count,
        params,
        DEFAULT_QUANTILE,
    )
}

pub fn sensitivity_at_quantile(
    sys: &SystemSpec,
    sampler: &PairSampler,
    n_eval: usize,
    scheme: GapScheme,
    pair_count: usize,
    params: &ScheduleParams,
    quantile: f64,
) -> Result<SensitivityReport> {
    if pair_count < MIN_PAIR_COUNT {
        return Err(domain(format!(
            "pair count must be >= {MIN_PAIR_COUNT}, got {pair_count}"
        )));
    }
    if !(0.0..=1.0).contains(&quantile) {
        return Err(domain(format!(
            "quantile must lie in [0, 1], got {quantile}"
        )));
    }
    if n_eval == 0 {
        return Err(domain("evaluation horizon must be >= 1"));
    }
    sampler.validate()?;
    params.validate()?;
    let results: Vec<(f64, f64)> = (0..pair_count as u64)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sampler.sample(sys, i)?;
            let d = sys.distance(&x, &y)?;
            Ok((d, gap_tail(sys, &x, &y, n_eval, scheme, params)?.inf_est))
        })
        .collect::<Result<_>>()?;
    if results.iter().all(|r| r.0 == 0.0) {
        return Err(Error::DegenerateSampler(format!(
            "all {pair_count} sampled pairs coincide"
        )));
    }
    let mut infs: Vec<f64> = results.iter().map(|r| r.1).collect();
    infs.sort_by(f64::total_cmp);
    let idx = ((quantile * (infs.len() - 1) as f64).round() as usize).min(infs.len() - 1);
    Ok(SensitivityReport {
        eps_estimate: infs[idx].clamp(0.0, 1.0),
        pair_count,
        n_eval,
        scheme,
        quantile_used: quantile,
        sampler: *sampler,
        mean_tail_inf: infs.iter().sum::<f64>() / infs.len() as f64,
        min_tail_inf: infs[0],
        max_tail_inf: infs[infs.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{SymbolSource, PHI, SQRT2_FRAC};

    fn params() -> ScheduleParams {
        ScheduleParams::default()
    }

    #[test]
    fn rotation_modulus_is_identity_on_the_grid() {
        let sys = SystemSpec::rotation(SQRT2_FRAC);
        let eps = default_eps_grid(10);
        for scheme in GapScheme::ALL {
            let p = modulus_profile(
                &sys,
                &eps,
                &PairSampler::natural(3),
                2000,
                scheme,
                4,
                &params(),
            )
            .unwrap();
            let got: Vec<f64> = p.delta_of_eps.iter().map(|d| d.unwrap()).collect();
            assert_eq!(got, eps, "{scheme}");
        }
    }

    #[test]
    fn doubling_modulus_fails_below_point_four() {
        let sys = SystemSpec::DoublingMap;
        let eps = [0.39, 0.2, 0.1, 0.01];
        let p = modulus_profile(
            &sys,
            &eps,
            &PairSampler::natural(9),
            20_000,
            GapScheme::Cesaro,
            4,
            &params(),
        )
        .unwrap();
        assert!(p.delta_of_eps.iter().all(Option::is_none));
        assert_eq!(p.failures(), eps.to_vec());
        assert!(!p.is_complete());
    }

    #[test]
    fn vacuous_eps_takes_largest_delta() {
        for sys in [
            SystemSpec::DoublingMap,
            SystemSpec::shift(SymbolSource::Sturmian {
                alpha: PHI,
                x0: 0.0,
            }),
        ] {
            let eps = [1.1 * sys.diameter()];
            let p = modulus_profile(
                &sys,
                &eps,
                &PairSampler::natural(1),
                500,
                GapScheme::Logarithmic,
                2,
                &params(),
            )
            .unwrap();
            assert_eq!(p.delta_of_eps, vec![Some(0.5)]);
        }
    }

    #[test]
    fn profile_is_monotone_and_consistent_with_samples() {
        let sys = SystemSpec::shift(SymbolSource::Sturmian {
            alpha: PHI,
            x0: 0.0,
        });
        let eps = default_eps_grid(12);
        let p = modulus_profile(
            &sys,
            &eps,
            &PairSampler::natural(4),
            3000,
            GapScheme::Cesaro,
            3,
            &params(),
        )
        .unwrap();
        let defined: Vec<f64> = p.delta_of_eps.iter().flatten().copied().collect();
        assert!(defined.windows(2).all(|w| w[0] >= w[1]));
        for (e, d) in eps.iter().zip(&p.delta_of_eps) {
            if let Some(d) = d {
                let level = p.delta_grid.iter().position(|g| g == d).unwrap();
                assert!(p.worst_gap[level] < *e);
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let sys = SystemSpec::rotation(PHI);
        let s = PairSampler::natural(0);
        assert!(modulus_profile(&sys, &[], &s, 10, GapScheme::Cesaro, 1, &params()).is_err());
        assert!(
            modulus_profile(&sys, &[0.1, 0.2], &s, 10, GapScheme::Cesaro, 1, &params()).is_err()
        );
        assert!(modulus_profile(&sys, &[0.1], &s, 10, GapScheme::Cesaro, 0, &params()).is_err());
    }

    #[test]
    fn rotation_sensitivity_vanishes_with_radius() {
        let sys = SystemSpec::rotation(PHI);
        for radius in [0.1, 0.01, 0.001] {
            let r = sensitivity_estimate(
                &sys,
                &PairSampler::ball(radius, 2),
                1000,
                GapScheme::Cesaro,
                30,
                &params(),
            )
            .unwrap();
            assert!(r.eps_estimate <= 2.0 * radius);
        }
    }

    #[test]
    fn doubling_sensitivity_near_one_half() {
        let sys = SystemSpec::DoublingMap;
        let ces = sensitivity_estimate(
            &sys,
            &PairSampler::natural(8),
            20_000,
            GapScheme::Cesaro,
            40,
            &params(),
        )
        .unwrap();
        let log = sensitivity_estimate(
            &sys,
            &PairSampler::natural(8),
            20_000,
            GapScheme::Logarithmic,
            40,
            &params(),
        )
        .unwrap();
        assert!(
            (ces.eps_estimate - 0.5).abs() < 0.05,
            "{}",
            ces.eps_estimate
        );
        assert!((ces.eps_estimate - log.eps_estimate).abs() < 0.05);
    }

    #[test]
    fn sensitivity_rejects_degenerate_inputs() {
        let sys = SystemSpec::shift(SymbolSource::Constant { symbol: 0 });
        let err = sensitivity_estimate(
            &sys,
            &PairSampler::natural(0),
            100,
            GapScheme::Cesaro,
            30,
            &params(),
        );
        assert!(matches!(err, Err(Error::DegenerateSampler(_))));
        let sys = SystemSpec::rotation(PHI);
        assert!(sensitivity_estimate(
            &sys,
            &PairSampler::natural(0),
            100,
            GapScheme::Cesaro,
            29,
            &params()
        )
        .is_err());
    }

    #[test]
    fn modulus_csv_layout() {
        let p = ModulusProfile {
            eps_grid: vec![0.5, 0.25],
            delta_of_eps: vec![Some(0.5), None],
            scheme: GapScheme::Logarithmic,
            n_eval: 100,
            sample_count: 7,
            delta_grid: delta_grid(),
            worst_gap: vec![0.0; DELTA_GRID_LEN],
        };
        let mut buf = Vec::new();
        write_modulus_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "eps,delta,scheme,n,samples\n5.0000000000000000e-1,5.0000000000000000e-1,log,100,7\n2.5000000000000000e-1,nan,log,100,7\n"
        );
    }
}
