//! Shift/reversal orbits of row subsets ("cosets"): subsets in one orbit give
//! square subframes with the same spectrum.

use std::collections::HashSet;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dft::{generator, FrameSpec, GeneratorSet};
use crate::error::{invalid, Error, Result};
use crate::index_set::IndexSet;
use crate::spectra::{gram_spectrum, Spectrum};
use crate::systematic::{distance_profile, pair_distances};

/// Default bound on n for exhaustive enumeration.
pub const MAX_ENUMERATION_N: usize = 24;
/// Leader spectra closer than this (max abs difference) share a class.
pub const SPECTRUM_MATCH_TOL: f64 = 1e-8;

/// Maps each row `x` to `⟨⟨x + c⟩⟩_n`.
pub fn shift(rows: &IndexSet, c: i64) -> IndexSet {
    let n = rows.n() as i64;
    let mut idx: Vec<usize> = rows
        .indices()
        .iter()
        .map(|&x| ((x as i64 - 1 + c).rem_euclid(n) + 1) as usize)
        .collect();
    idx.sort_unstable();
    IndexSet::from_sorted_unchecked(rows.n(), idx)
}

/// Maps each row `x` to `n + 1 − x`.
pub fn reversal(rows: &IndexSet) -> IndexSet {
    let n = rows.n();
    let idx: Vec<usize> = rows.indices().iter().rev().map(|&x| n + 1 - x).collect();
    IndexSet::from_sorted_unchecked(n, idx)
}

fn span(rows: &IndexSet) -> usize {
    let idx = rows.indices();
    idx[idx.len() - 1] - idx[0]
}

/// Distinct shifts of `rows`, in shift order starting with `rows` itself.
fn shift_orbit(rows: &IndexSet) -> Vec<IndexSet> {
    let mut seen = HashSet::new();
    (0..rows.n() as i64)
        .map(|c| shift(rows, c))
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

/// Canonical representative of the orbit of `rows`: the most compact member
/// (smallest `last − first`), ties broken lexicographically.
pub fn canonical_leader(rows: &IndexSet, merge_reversal: bool) -> IndexSet {
    let rev = reversal(rows);
    let mut candidates = shift_orbit(rows);
    if merge_reversal {
        candidates.extend(shift_orbit(&rev));
    }
    candidates
        .into_iter()
        .min_by(|a, b| span(a).cmp(&span(b)).then_with(|| a.cmp(b)))
        .unwrap()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coset {
    pub leader: IndexSet,
    /// Shift orbit of the leader in shift order, followed by the orbit of its
    /// reversal when reversals are merged and the two differ.
    pub members: Vec<IndexSet>,
    /// Circular gaps of the leader, ascending.
    pub gap_signature: Vec<usize>,
    /// Circular distances over all pairs of leader rows, ascending.
    pub pair_distances: Vec<usize>,
    /// Sum of the pairwise circular distances.
    pub weight: usize,
    /// True when the reversal of the leader lies in its own shift orbit.
    pub self_reversal: bool,
    /// Spectrum of `G_k·G_kᴴ` for the leader.
    pub spectrum: Spectrum,
    /// Index of the group of cosets sharing this spectrum.
    pub spectral_class: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CosetCatalog {
    pub n: usize,
    pub k: usize,
    pub merged_reversals: bool,
    /// Number of shift (or shift/reversal) orbits.
    pub count: usize,
    /// Number of distinct leader spectra. Distinct orbits can share a
    /// spectrum, e.g. {1,2,3,4,7} and {1,2,3,5,6} for n = 10.
    pub spectral_class_count: usize,
    pub cosets: Vec<Coset>,
}

impl CosetCatalog {
    pub fn total_members(&self) -> usize {
        self.cosets.iter().map(|c| c.members.len()).sum()
    }

    pub fn find(&self, leader: &IndexSet) -> Option<&Coset> {
        self.cosets.iter().find(|c| &c.leader == leader)
    }

    /// The coset containing `rows`.
    pub fn coset_of(&self, rows: &IndexSet) -> Option<&Coset> {
        self.find(&canonical_leader(rows, self.merged_reversals))
    }
}

/// Enumerates the cosets of the (n, k) BCH-DFT frame.
pub fn enumerate_cosets(n: usize, k: usize, merge_reversal: bool) -> Result<CosetCatalog> {
    check_enumeration(n, k, MAX_ENUMERATION_N)?;
    let gs = generator(&FrameSpec::bch(n, k)?)?;
    enumerate_cosets_for(&gs, merge_reversal, MAX_ENUMERATION_N)
}

fn check_enumeration(n: usize, k: usize, max_n: usize) -> Result<()> {
    if n > max_n {
        return Err(Error::ResourceLimit {
            what: "n for coset enumeration",
            value: n,
            limit: max_n,
        });
    }
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
    }
    Ok(())
}

/// Enumerates the cosets of an arbitrary frame, with a configurable bound on n.
pub fn enumerate_cosets_for(
    gs: &GeneratorSet,
    merge_reversal: bool,
    max_n: usize,
) -> Result<CosetCatalog> {
    let (n, k) = (gs.n(), gs.k());
    check_enumeration(n, k, max_n.min(64))?;

    let mut visited: HashSet<u64> = HashSet::new();
    let mut groups: Vec<(IndexSet, Vec<IndexSet>, bool)> = Vec::new();
    for combo in (1..=n).combinations(k) {
        let rows = IndexSet::from_sorted_unchecked(n, combo);
        if visited.contains(&rows.mask()) {
            continue;
        }
        let leader = canonical_leader(&rows, merge_reversal);
        let mut members = shift_orbit(&leader);
        let rev = reversal(&leader);
        let self_reversal = members.contains(&rev);
        if merge_reversal && !self_reversal {
            members.extend(shift_orbit(&rev));
        }
        visited.extend(members.iter().map(IndexSet::mask));
        groups.push((leader, members, self_reversal));
    }

    let mut cosets = groups
        .into_par_iter()
        .map(|(leader, members, self_reversal)| {
            let spectrum = gram_spectrum(gs, &leader)?;
            let mut gap_signature = distance_profile(&leader).gaps;
            gap_signature.sort_unstable();
            let pair_distances = pair_distances(&leader);
            Ok(Coset {
                weight: pair_distances.iter().sum(),
                leader,
                members,
                gap_signature,
                pair_distances,
                self_reversal,
                spectrum,
                spectral_class: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    cosets.sort_by(|a, b| {
        a.weight
            .cmp(&b.weight)
            .then_with(|| a.leader.cmp(&b.leader))
    });

    let mut classes: Vec<usize> = Vec::new();
    for i in 0..cosets.len() {
        let found = classes.iter().position(|&rep| {
            cosets[rep].spectrum.max_diff(&cosets[i].spectrum) < SPECTRUM_MATCH_TOL
        });
        cosets[i].spectral_class = match found {
            Some(c) => c,
            None => {
                classes.push(i);
                classes.len() - 1
            }
        };
    }
    Ok(CosetCatalog {
        n,
        k,
        merged_reversals: merge_reversal,
        count: cosets.len(),
        spectral_class_count: classes.len(),
        cosets,
    })
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k)
        .fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        .round()
}

/// `(C(n,k)/(2n), C(n,k)/n)`, the bounds on the number of merged cosets.
pub fn count_bounds(n: usize, k: usize) -> Result<(f64, f64)> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
    }
    let c = binomial(n, k);
    Ok((c / (2 * n) as f64, c / n as f64))
}
