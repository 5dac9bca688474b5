//! Finite-horizon estimates of the limit sets V_T(x) and V^log_T(x), and the
//! Hausdorff distance between such sets under ρ.

use serde::{Deserialize, Serialize};

use super::empirical::{EmpiricalMeasure, Scheme};
use super::family::{weighted_l1, TestFamily};
use crate::averaging::{with_harmonic_table, CompensatedSum};
use crate::error::{domain, Error, Result};
use crate::systems::{PointRef, SystemSpec};

/// A set of ρ-separated representative measures.
#[derive(Debug, Clone)]
pub struct MeasureSet {
    members: Vec<EmpiricalMeasure>,
    integrals: Vec<Vec<f64>>,
    family: TestFamily,
    cluster_tol: f64,
    assignments: Vec<Assignment>,
}

/// Which representative absorbed a candidate measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub horizon: usize,
    pub cluster: usize,
    pub rho_to_representative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSetSummary {
    pub cluster_count: usize,
    pub cluster_tol: f64,
    pub representative_windows: Vec<(usize, usize)>,
    pub schemes: Vec<Scheme>,
    pub pairwise_rho: Vec<Vec<f64>>,
    pub assignments: Vec<Assignment>,
    pub truncation_bound: f64,
    pub note: String,
}

/// Greedy first-fit: a candidate joins the earliest representative within
/// ρ < tol, otherwise it becomes a new representative.
fn greedy_clusters(integrals: &[Vec<f64>], tol: f64) -> (Vec<usize>, Vec<(usize, f64)>) {
    let mut reps: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(integrals.len());
    for (i, v) in integrals.iter().enumerate() {
        let hit = reps
            .iter()
            .enumerate()
            .map(|(c, &r)| (c, weighted_l1(&integrals[r], v)))
            .find(|&(_, d)| d < tol);
        match hit {
            Some(found) => labels.push(found),
            None => {
                labels.push((reps.len(), 0.0));
                reps.push(i);
            }
        }
    }
    (reps, labels)
}

impl MeasureSet {
    /// Clusters `measures` (in order) with threshold `cluster_tol`.
    pub fn cluster(
        measures: Vec<EmpiricalMeasure>,
        family: &TestFamily,
        cluster_tol: f64,
    ) -> Result<Self> {
        let integrals = measures
            .iter()
            .map(|m| family.integrals(m))
            .collect::<Result<Vec<_>>>()?;
        Self::from_integrals(measures, integrals, family, cluster_tol)
    }

    fn from_integrals(
        measures: Vec<EmpiricalMeasure>,
        integrals: Vec<Vec<f64>>,
        family: &TestFamily,
        cluster_tol: f64,
    ) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::Empty("measure set needs at least one member"));
        }
        if !(cluster_tol > 0.0) {
            return Err(domain(format!(
                "cluster tolerance must be > 0, got {cluster_tol}"
            )));
        }
        let (reps, labels) = greedy_clusters(&integrals, cluster_tol);
        let assignments = measures
            .iter()
            .zip(&labels)
            .map(|(m, &(cluster, rho))| Assignment {
                horizon: m.window().1,
                cluster,
                rho_to_representative: rho,
            })
            .collect();
        let mut slots: Vec<Option<(EmpiricalMeasure, Vec<f64>)>> =
            measures.into_iter().zip(integrals).map(Some).collect();
        let (members, integrals) = reps
            .iter()
            .map(|&r| slots[r].take().expect("distinct reps"))
            .unzip();
        Ok(Self {
            members,
            integrals,
            family: family.clone(),
            cluster_tol,
            assignments,
        })
    }

    pub fn singleton(mu: EmpiricalMeasure, family: &TestFamily) -> Result<Self> {
        Self::cluster(vec![mu], family, f64::MIN_POSITIVE)
    }

    pub fn members(&self) -> &[EmpiricalMeasure] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    fn integrals_for(&self, family: &TestFamily) -> Result<Vec<Vec<f64>>> {
        if family == &self.family {
            Ok(self.integrals.clone())
        } else {
            self.members.iter().map(|m| family.integrals(m)).collect()
        }
    }

    pub fn pairwise_rho(&self) -> Vec<Vec<f64>> {
        self.integrals
            .iter()
            .map(|a| self.integrals.iter().map(|b| weighted_l1(a, b)).collect())
            .collect()
    }

    pub fn summary(&self) -> MeasureSetSummary {
        MeasureSetSummary {
            cluster_count: self.len(),
            cluster_tol: self.cluster_tol,
            representative_windows: self.members.iter().map(|m| m.window()).collect(),
            schemes: self.members.iter().map(|m| m.scheme()).collect(),
            pairwise_rho: self.pairwise_rho(),
            assignments: self.assignments.clone(),
            truncation_bound: self.family.truncation_bound(),
            note: "finite schedule: accumulation points between or beyond the evaluated horizons may be missed"
                .to_string(),
        }
    }
}

/// Symmetrized Hausdorff distance under ρ between two finite sets.
pub fn hausdorff(a: &MeasureSet, b: &MeasureSet, family: &TestFamily) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Hausdorff distance needs nonempty sets"));
    }
    let ia = a.integrals_for(family)?;
    let ib = b.integrals_for(family)?;
    Ok(directed(&ia, &ib).max(directed(&ib, &ia)))
}

fn directed(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|x| {
            to.iter()
                .map(|y| weighted_l1(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Empirical measures of x over (0, n] for n in the trailing
/// `window_fraction` of `schedule`, clustered greedily under ρ.
pub fn vset_estimate(
    sys: &SystemSpec,
    x: &PointRef,
    schedule: &[usize],
    scheme: Scheme,
    cluster_tol: f64,
    family: &TestFamily,
    window_fraction: f64,
) -> Result<MeasureSet> {
    if schedule.is_empty() {
        return Err(Error::Empty("schedule must be nonempty"));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain(
            "schedule must be strictly increasing and start at n >= 1",
        ));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(domain(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    if family.system() != sys {
        return Err(domain("test family belongs to a different system"));
    }
    sys.check_point(x)?;
    let take = ((window_fraction * schedule.len() as f64).ceil() as usize).clamp(1, schedule.len());
    let tail = &schedule[schedule.len() - take..];
    let n_max = *tail.last().expect("nonempty");

    // One pass over the orbit; snapshot the running integrals at each tail horizon.
    let depth = family.depth();
    let mut plain = vec![CompensatedSum::new(); depth];
    let mut weighted = vec![CompensatedSum::new(); depth];
    let mut f = vec![0.0; depth];
    let mut snapshots = Vec::with_capacity(tail.len());
    let mut next = 0;
    for (i, p) in sys.orbit(x.clone()).take(n_max).enumerate() {
        let k = i + 1;
        family.eval_into(&p, &mut f);
        for j in 0..depth {
            plain[j].add(f[j]);
            weighted[j].add(f[j] / k as f64);
        }
        if k == tail[next] {
            let v: Vec<f64> = match scheme {
                Scheme::Arithmetic => plain.iter().map(|s| s.value() / k as f64).collect(),
                Scheme::Logarithmic => {
                    let h = with_harmonic_table(k, |t| t.get(k).expect("covered"));
                    weighted.iter().map(|s| s.value() / h).collect()
                }
            };
            snapshots.push(v);
            next += 1;
        }
    }
    let measures = tail
        .iter()
        .map(|&n| EmpiricalMeasure::streamed(sys, x, 0, n, scheme))
        .collect::<Result<Vec<_>>>()?;
    MeasureSet::from_integrals(measures, snapshots, family, cluster_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::geometric_schedule;
    use crate::measures::empirical;
    use crate::systems::{BlockGrowth, SymbolSource, PHI};
    use proptest::prelude::*;

    fn dirac(sys: &SystemSpec, p: &PointRef) -> EmpiricalMeasure {
        empirical(sys, p, 0, 1, Scheme::Arithmetic).unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        let sys = SystemSpec::rotation(PHI);
        let fam = TestFamily::canonical(&sys, 16).unwrap();
        let (x, y) = (
            sys.circle_point(0.1).unwrap(),
            sys.circle_point(0.4).unwrap(),
        );
        let a = MeasureSet::singleton(dirac(&sys, &x), &fam).unwrap();
        let b = MeasureSet::singleton(dirac(&sys, &y), &fam).unwrap();
        assert_eq!(hausdorff(&a, &a, &fam).unwrap(), 0.0);
        let r = fam.rho_points(&x, &y).unwrap();
        assert!((hausdorff(&a, &b, &fam).unwrap() - r).abs() < 1e-15);
        let ab = MeasureSet::cluster(vec![dirac(&sys, &x), dirac(&sys, &y)], &fam, 1e-9).unwrap();
        assert_eq!(ab.len(), 2);
        assert!((hausdorff(&a, &ab, &fam).unwrap() - r).abs() < 1e-15);
    }

    #[test]
    fn vset_matches_direct_empirical_integrals() {
        let sys = SystemSpec::shift(SymbolSource::Sturmian {
            alpha: PHI,
            x0: 0.0,
        });
        let fam = TestFamily::canonical(&sys, 8).unwrap();
        let schedule = [50, 200, 900];
        for scheme in [Scheme::Arithmetic, Scheme::Logarithmic] {
            let set = vset_estimate(&sys, &sys.base_point(), &schedule, scheme, 1e-12, &fam, 1.0)
                .unwrap();
            assert_eq!(set.len(), 3);
            for (m, ints) in set.members().iter().zip(&set.integrals) {
                let direct = fam
                    .integrals(
                        &empirical(&sys, &sys.base_point(), 0, m.window().1, scheme).unwrap(),
                    )
                    .unwrap();
                for (a, b) in ints.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn rotation_has_one_cluster() {
        let sys = SystemSpec::rotation(PHI);
        let fam = TestFamily::canonical(&sys, 16).unwrap();
        let schedule = geometric_schedule(64, 1.25, 100_000).unwrap();
        let set = vset_estimate(
            &sys,
            &sys.base_point(),
            &schedule,
            Scheme::Arithmetic,
            0.05,
            &fam,
            0.25,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn fixed_point_has_one_cluster_at_its_dirac() {
        let sys = SystemSpec::shift(SymbolSource::Constant { symbol: 0 });
        let fam = TestFamily::canonical(&sys, 16).unwrap();
        let set = vset_estimate(
            &sys,
            &sys.base_point(),
            &[10, 100, 1000],
            Scheme::Logarithmic,
            0.05,
            &fam,
            1.0,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        let d = MeasureSet::singleton(dirac(&sys, &sys.base_point()), &fam).unwrap();
        assert!(hausdorff(&set, &d, &fam).unwrap() < 1e-12);
    }

    #[test]
    fn block_sequence_separates_schemes() {
        let sys = SystemSpec::shift(SymbolSource::BlockSequence {
            growth: BlockGrowth::Geometric { base: 2 },
        });
        let fam = TestFamily::canonical(&sys, 16).unwrap();
        // block ends 2^j − 1 and block midpoints 3·2^{j−1} − 1
        let mut schedule: Vec<usize> = (4..=18)
            .flat_map(|j| [(1usize << j) - 1, 3 * (1usize << (j - 1)) - 1])
            .collect();
        schedule.sort_unstable();
        schedule.dedup();
        let ari = vset_estimate(
            &sys,
            &sys.base_point(),
            &schedule,
            Scheme::Arithmetic,
            0.1,
            &fam,
            0.25,
        )
        .unwrap();
        let log = vset_estimate(
            &sys,
            &sys.base_point(),
            &schedule,
            Scheme::Logarithmic,
            0.1,
            &fam,
            0.25,
        )
        .unwrap();
        assert!(ari.len() >= 2);
        assert_eq!(log.len(), 1);
        let rho = ari.pairwise_rho();
        assert!(rho[0][1] >= 0.1);

        // head-symbol integrals of the representatives, by direct summation over the sequence
        let seq: Vec<f64> = (0..(1u64 << 18))
            .map(|k| f64::from(sys_symbol(k)))
            .collect();
        let heads: Vec<f64> = ari
            .members()
            .iter()
            .map(|m| seq[..m.window().1].iter().sum::<f64>() / m.window().1 as f64)
            .collect();
        assert!((heads[0] - heads[1]).abs() >= 0.1);
    }

    fn sys_symbol(k: u64) -> u8 {
        // block j covers [2^j − 1, 2^{j+1} − 1) and carries symbol j mod 2
        ((64 - (k + 1).leading_zeros() - 1) % 2) as u8
    }

    #[test]
    fn empty_inputs_rejected() {
        let sys = SystemSpec::rotation(PHI);
        let fam = TestFamily::canonical(&sys, 4).unwrap();
        assert!(MeasureSet::cluster(vec![], &fam, 0.1).is_err());
        assert!(vset_estimate(
            &sys,
            &sys.base_point(),
            &[],
            Scheme::Arithmetic,
            0.1,
            &fam,
            0.5
        )
        .is_err());
        assert!(vset_estimate(
            &sys,
            &sys.base_point(),
            &[5, 5],
            Scheme::Arithmetic,
            0.1,
            &fam,
            0.5
        )
        .is_err());
        assert!(vset_estimate(
            &sys,
            &sys.base_point(),
            &[5],
            Scheme::Arithmetic,
            0.0,
            &fam,
            0.5
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn halving_tolerance_never_merges_clusters(seed in 0u64..500, tol in 0.01f64..0.5) {
            let sys = SystemSpec::rotation(0.1 + (seed as f64) / 1000.0);
            let fam = TestFamily::canonical(&sys, 8).unwrap();
            let schedule: Vec<usize> = (1..=12).collect();
            let a = vset_estimate(&sys, &sys.base_point(), &schedule, Scheme::Arithmetic, tol, &fam, 1.0).unwrap();
            let b = vset_estimate(&sys, &sys.base_point(), &schedule, Scheme::Arithmetic, tol / 2.0, &fam, 1.0).unwrap();
            prop_assert!(b.len() >= a.len());
            let rho = a.pairwise_rho();
            for (i, row) in rho.iter().enumerate() {
                for (j, r) in row.iter().enumerate() {
                    if i != j {
                        prop_assert!(*r >= tol);
                    }
                }
            }
        }
    }
}
