//! Empirical measures along orbits and the distances used to compare them.

mod empirical;
mod family;
mod vset;
mod wasserstein;

pub use empirical::{
    empirical, integrate, Atom, EmpiricalMeasure, MeasureSummary, Scheme, MATERIALIZE_LIMIT,
};
pub use family::{pushforward_defect, rho, Rho, TestFamily, DEFAULT_DEPTH};
pub use vset::{hausdorff, vset_estimate, Assignment, MeasureSet, MeasureSetSummary};
pub use wasserstein::circle_w1;
