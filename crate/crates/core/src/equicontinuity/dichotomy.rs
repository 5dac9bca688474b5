use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulus::{
    default_eps_grid, modulus_profile, sensitivity_estimate, ModulusProfile, SensitivityReport,
};
use super::sampler::PairSampler;
use super::GapScheme;
use crate::averaging::ScheduleParams;
use crate::error::{domain, Error, Result};
use crate::measures::{EmpiricalMeasure, Scheme, TestFamily};
use crate::systems::{PointRef, SystemSpec};

pub const DEFAULT_SENSITIVITY_THRESHOLD: f64 = 0.05;
pub const DEFAULT_UE_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DichotomyConfig {
    pub eps_grid: Vec<f64>,
    pub n_eval: usize,
    pub scheme: GapScheme,
    pub samples_per_delta: usize,
    pub pair_count: usize,
    pub ball_radius: f64,
    pub threshold: f64,
    pub seed: u64,
    pub schedule: ScheduleParams,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            eps_grid: default_eps_grid(10),
            n_eval: 100_000,
            scheme: GapScheme::Cesaro,
            samples_per_delta: 8,
            pair_count: 32,
            ball_radius: 1.0 / 1024.0,
            threshold: DEFAULT_SENSITIVITY_THRESHOLD,
            seed: 0,
            schedule: ScheduleParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    MeanEquicontinuous,
    MeanSensitive,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub verdict: Verdict,
    /// Both a complete modulus row and a sensitivity estimate above threshold.
    pub conflicting: bool,
    pub threshold: f64,
    pub profile: ModulusProfile,
    pub sensitivity: SensitivityReport,
}

/// Runs both estimators on the same configuration. Finite evidence may
/// abstain; minimality of `sys` is the caller's responsibility.
pub fn dichotomy_classify(sys: &SystemSpec, config: &DichotomyConfig) -> Result<DichotomyVerdict> {
    if !(config.threshold > 0.0) {
        return Err(domain(format!(
            "sensitivity threshold must be > 0, got {}",
            config.threshold
        )));
    }
    let profile = modulus_profile(
        sys,
        &config.eps_grid,
        &PairSampler::natural(config.seed),
        config.n_eval,
        config.scheme,
        config.samples_per_delta,
        &config.schedule,
    )?;
    let sensitivity = sensitivity_estimate(
        sys,
        &PairSampler::ball(config.ball_radius, config.seed.wrapping_add(1)),
        config.n_eval,
        config.scheme,
        config.pair_count,
        &config.schedule,
    )?;
    let complete = profile.is_complete();
    let sensitive = sensitivity.eps_estimate >= config.threshold;
    let verdict = match (complete, sensitive) {
        (true, false) => Verdict::MeanEquicontinuous,
        (false, true) => Verdict::MeanSensitive,
        _ => Verdict::Undetermined,
    };
    Ok(DichotomyVerdict {
        verdict,
        conflicting: complete && sensitive,
        threshold: config.threshold,
        profile,
        sensitivity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniqueErgodicityVerdict {
    UniquelyErgodicConsistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueErgodicityReport {
    pub verdict: UniqueErgodicityVerdict,
    pub max_pairwise_rho: f64,
    pub tol: f64,
    pub n: usize,
    pub scheme: Scheme,
    pub start_count: usize,
    pub truncation_bound: f64,
}

/// Compares the empirical measures over (0, n] of every start point under ρ.
pub fn unique_ergodicity_test(
    sys: &SystemSpec,
    starts: &[PointRef],
    n: usize,
    scheme: Scheme,
    family: &TestFamily,
    tol: f64,
) -> Result<UniqueErgodicityReport> {
    if starts.is_empty() {
        return Err(Error::Empty("unique-ergodicity test needs start points"));
    }
    if !(tol >= 0.0) {
        return Err(domain(format!("tolerance must be >= 0, got {tol}")));
    }
    let integrals: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|x| family.integrals(&EmpiricalMeasure::streamed(sys, x, 0, n, scheme)?))
        .collect::<Result<_>>()?;
    let mut max = 0.0f64;
    for (i, a) in integrals.iter().enumerate() {
        for b in &integrals[i + 1..] {
            max = max.max(family.rho_from_integrals(a, b));
        }
    }
    let verdict = if max <= tol {
        UniqueErgodicityVerdict::UniquelyErgodicConsistent
    } else {
        UniqueErgodicityVerdict::Inconsistent
    };
    Ok(UniqueErgodicityReport {
        verdict,
        max_pairwise_rho: max,
        tol,
        n,
        scheme,
        start_count: starts.len(),
        truncation_bound: family.truncation_bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{SymbolSource, PHI};
    use std::sync::Arc;

    fn quick(n_eval: usize) -> DichotomyConfig {
        DichotomyConfig {
            n_eval,
            samples_per_delta: 3,
            ..DichotomyConfig::default()
        }
    }

    #[test]
    fn rotation_is_mean_equicontinuous() {
        let v = dichotomy_classify(&SystemSpec::rotation(PHI), &quick(5000)).unwrap();
        assert_eq!(v.verdict, Verdict::MeanEquicontinuous);
        assert!(!v.conflicting);
    }

    #[test]
    fn doubling_is_mean_sensitive() {
        let v = dichotomy_classify(&SystemSpec::DoublingMap, &quick(5000)).unwrap();
        assert_eq!(v.verdict, Verdict::MeanSensitive);
    }

    #[test]
    fn short_horizon_never_claims_equicontinuity_against_evidence() {
        let v = dichotomy_classify(&SystemSpec::DoublingMap, &quick(10)).unwrap();
        if v.verdict == Verdict::MeanEquicontinuous {
            for (e, d) in v.profile.eps_grid.iter().zip(&v.profile.delta_of_eps) {
                let level = v
                    .profile
                    .delta_grid
                    .iter()
                    .position(|g| Some(*g) == *d)
                    .unwrap();
                assert!(v.profile.worst_gap[level] < *e);
            }
            assert!(v.sensitivity.eps_estimate < v.threshold);
        }
    }

    #[test]
    fn unique_ergodicity_examples() {
        let sys = SystemSpec::rotation(PHI);
        let fam = TestFamily::canonical(&sys, 16).unwrap();
        let starts: Vec<PointRef> = [0.0, 0.3, 0.71]
            .iter()
            .map(|x| sys.circle_point(*x).unwrap())
            .collect();
        let r = unique_ergodicity_test(
            &sys,
            &starts,
            20_000,
            Scheme::Arithmetic,
            &fam,
            DEFAULT_UE_TOL,
        )
        .unwrap();
        assert_eq!(
            r.verdict,
            UniqueErgodicityVerdict::UniquelyErgodicConsistent
        );
        let single =
            unique_ergodicity_test(&sys, &starts[..1], 10, Scheme::Logarithmic, &fam, 0.0).unwrap();
        assert_eq!(single.max_pairwise_rho, 0.0);
        assert_eq!(
            single.verdict,
            UniqueErgodicityVerdict::UniquelyErgodicConsistent
        );

        let shift = SystemSpec::shift(SymbolSource::Constant { symbol: 0 });
        let fam = TestFamily::canonical(&shift, 16).unwrap();
        let starts = [
            PointRef::shift(Arc::new(SymbolSource::Constant { symbol: 0 }), 0),
            PointRef::shift(Arc::new(SymbolSource::Constant { symbol: 1 }), 0),
        ];
        for scheme in [Scheme::Arithmetic, Scheme::Logarithmic] {
            let r = unique_ergodicity_test(&shift, &starts, 1000, scheme, &fam, DEFAULT_UE_TOL)
                .unwrap();
            assert_eq!(r.verdict, UniqueErgodicityVerdict::Inconsistent);
            assert!(r.max_pairwise_rho >= 0.1);
        }
        assert!(unique_ergodicity_test(&shift, &[], 10, Scheme::Arithmetic, &fam, 0.1).is_err());
    }
}
