//! Recursive decoders for BW_n built on the squaring construction.
//!
//! * [`rec_bdd`]: double-sided `(u, u+v)` bounded-distance decoder, four
//!   half-size recursive calls per level, `O(n²)`.
//! * [`list_rec`]: complete list decoder for relative squared radii
//!   `1/4 ≤ δ < 3/4` (complete below 9/16), splitting the radius into `δ`
//!   and `a = 2δ/3` between the two halves.
//! * [`list_rec_bounded`]: the practical variant that keeps the `ℵ` closest
//!   candidates at every merging level instead of pruning by radius.
//!
//! Every decoder has a `*_counted` form that accumulates an [`OpCounter`].

mod bdd;
mod list;
mod merge;

pub use bdd::{rec_bdd, rec_bdd_counted};
pub use list::{
    decode_bounded, enum_z2, list_rec, list_rec_bounded, list_rec_bounded_counted,
    list_rec_counted, subroutine,
};
pub use merge::{merge_sort_dedup, merge_sort_dedup_counted};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::squared_distance;

/// Relative squared radius at or below which the BDD branch is taken.
pub const BDD_RADIUS: f64 = 0.25;
/// Upper end (exclusive) of the accepted list-decoding radius.
pub const MAX_LIST_RADIUS: f64 = 0.75;
/// Radius below which list decoding is guaranteed complete.
pub const COMPLETE_LIST_RADIUS: f64 = 9.0 / 16.0;

// Radii are products of 2/3 and may land a few ulps off 1/4.
pub(crate) fn is_bdd_radius(delta: f64) -> bool {
    delta <= BDD_RADIUS + 1e-12
}

/// A decoded lattice point and its squared distance to the decode target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: Vec<i64>,
    pub dist2: f64,
}

/// Candidates for one target, lexicographically sorted without duplicates
/// once returned by a decoder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateList {
    pub items: Vec<Candidate>,
    pub target: Vec<f64>,
}

impl CandidateList {
    pub fn new(target: Vec<f64>) -> Self {
        Self {
            items: Vec::new(),
            target,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[i64]> {
        self.items.iter().map(|c| c.point.as_slice())
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.items.iter().any(|c| c.point == x)
    }

    /// Closest candidate; ties go to the lexicographically smaller point.
    pub fn closest(&self) -> Option<&Candidate> {
        self.items.iter().min_by(|a, b| {
            a.dist2
                .total_cmp(&b.dist2)
                .then_with(|| a.point.cmp(&b.point))
        })
    }

    /// Adds a candidate, computing its distance to the target.
    pub fn push_point(&mut self, point: Vec<i64>) {
        let dist2 = squared_distance(&self.target, &point);
        self.items.push(Candidate { point, dist2 });
    }
}

/// Operation tallies for one or more decodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    /// Every decoder invocation (BDD, list and Z² enumeration).
    pub calls: u64,
    /// Invocations of the Z² rounding decoder at the bottom of the BDD
    /// recursion.
    pub bdd_leaves: u64,
    /// Invocations of the Z² sphere enumeration.
    pub enum_leaves: u64,
    /// Coordinate-level additions, subtractions and rotations.
    pub vector_ops: u64,
    /// Coordinate terms accumulated into squared distances.
    pub distance_terms: u64,
    /// Point comparisons made by the merge sort and truncation.
    pub comparisons: u64,
    /// Candidates assembled before pruning.
    pub candidates: u64,
}

impl OpCounter {
    pub fn total(&self) -> u64 {
        self.vector_ops + self.distance_terms + self.comparisons
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.calls += other.calls;
        self.bdd_leaves += other.bdd_leaves;
        self.enum_leaves += other.enum_leaves;
        self.vector_ops += other.vector_ops;
        self.distance_terms += other.distance_terms;
        self.comparisons += other.comparisons;
        self.candidates += other.candidates;
    }
}

/// Relative radius `δ` and the truncation sizes `ℵ(δ), ℵ(2δ/3), …` for every
/// radius of the chain `δ (2/3)^k` that is still above 1/4 (the first entry
/// is always present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ListSchedule {
    delta: f64,
    truncations: Vec<usize>,
}

#[derive(Deserialize)]
struct RawSchedule {
    delta: f64,
    truncations: Vec<usize>,
}

impl TryFrom<RawSchedule> for ListSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        ListSchedule::new(raw.delta, raw.truncations)
    }
}

impl ListSchedule {
    pub fn new(delta: f64, truncations: Vec<usize>) -> Result<Self> {
        check_list_radius(delta)?;
        let need = Self::chain_len(delta);
        if truncations.len() != need {
            return Err(Error::InvalidSchedule(format!(
                "delta = {delta} needs {need} truncation size(s), got {}",
                truncations.len()
            )));
        }
        if truncations.contains(&0) {
            return Err(Error::InvalidSchedule(
                "truncation sizes must be >= 1".into(),
            ));
        }
        Ok(Self { delta, truncations })
    }

    /// Schedule whose truncation never binds.
    pub fn unbounded(delta: f64) -> Result<Self> {
        check_list_radius(delta)?;
        Self::new(delta, vec![usize::MAX; Self::chain_len(delta)])
    }

    /// Number of radii `δ (2/3)^k` at which the list decoder runs: `k = 0`
    /// plus every later one still above 1/4.
    pub fn chain_len(delta: f64) -> usize {
        let mut k = 1;
        let mut r = delta * 2.0 / 3.0;
        while !is_bdd_radius(r) {
            k += 1;
            r = r * 2.0 / 3.0;
        }
        k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn truncations(&self) -> &[usize] {
        &self.truncations
    }

    pub(crate) fn aleph(&self, level: usize) -> usize {
        self.truncations[level]
    }
}

pub(crate) fn check_list_radius(delta: f64) -> Result<()> {
    if !(BDD_RADIUS..MAX_LIST_RADIUS).contains(&delta) {
        return Err(Error::RadiusOutOfRange {
            delta,
            lo: BDD_RADIUS,
            hi: MAX_LIST_RADIUS,
        });
    }
    Ok(())
}

pub(crate) fn check_target(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}
