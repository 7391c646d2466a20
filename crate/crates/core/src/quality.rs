//! Ordinal quality of a composition: `N(S) = (w; n1,...,nk)`.
//!
//! `w` is the weakest pairwise compatibility inside the composition and `nr`
//! counts the chosen parts at priority level `r`. Vectors are compared on the
//! quality lattice: `w` componentwise and `n` by prefix sums, so moving one
//! part from level `r` to level `r-1` is always an improvement.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QualityVector {
    pub w: u32,
    pub n: Vec<u32>,
}

impl QualityVector {
    pub fn new(w: u32, n: Vec<u32>) -> Self {
        QualityVector { w, n }
    }

    /// Builds the vector from the priorities (1-based) of the composed parts.
    pub fn from_priorities(w: u32, k: u32, priorities: impl IntoIterator<Item = u32>) -> Self {
        let mut n = vec![0; k as usize];
        for r in priorities {
            n[(r.clamp(1, k) - 1) as usize] += 1;
        }
        QualityVector { w, n }
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    /// Number of composed parts.
    pub fn m(&self) -> u32 {
        self.n.iter().sum()
    }

    pub fn is_admissible(&self) -> bool {
        self.w > 0
    }

    fn prefix_sums(&self) -> impl Iterator<Item = u32> + '_ {
        self.n.iter().scan(0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
    }
}

impl fmt::Display for QualityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; ", self.w)?;
        for (i, x) in self.n.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// Checked strict dominance on the quality lattice.
pub fn strictly_dominates(a: &QualityVector, b: &QualityVector) -> Result<bool> {
    if a.k() != b.k() || a.m() != b.m() {
        return Err(Error::ShapeMismatch {
            k1: a.k(),
            k2: b.k(),
            m1: a.m(),
            m2: b.m(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &QualityVector, b: &QualityVector) -> bool {
    if a.w < b.w {
        return false;
    }
    let mut strict = a.w > b.w;
    for (pa, pb) in a.prefix_sums().zip(b.prefix_sums()) {
        if pa < pb {
            return false;
        }
        strict |= pa > pb;
    }
    strict
}

pub trait HasQuality {
    fn quality(&self) -> &QualityVector;
}

impl HasQuality for QualityVector {
    fn quality(&self) -> &QualityVector {
        self
    }
}

/// Keeps the candidates that no other candidate strictly dominates.
///
/// Inadmissible candidates (`w = 0`) are dropped first. Candidates with equal
/// vectors are all kept, and input order is preserved.
pub fn pareto_front<T: HasQuality>(candidates: Vec<T>) -> Vec<T> {
    let admissible: Vec<T> = candidates.into_iter().filter(|c| c.quality().is_admissible()).collect();
    let keep: Vec<bool> = admissible
        .iter()
        .map(|c| !admissible.iter().any(|o| dominates_unchecked(o.quality(), c.quality())))
        .collect();
    admissible
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

/// Pareto-layer index (1-based, uncapped) of every admissible candidate:
/// layer 1 is the front, and each later layer is the front of what remains.
/// Inadmissible candidates get `None`.
pub fn pareto_layers<T: HasQuality>(candidates: &[T]) -> Vec<Option<usize>> {
    let mut layer: Vec<Option<usize>> = vec![None; candidates.len()];
    let mut remaining: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].quality().is_admissible())
        .collect();
    let mut current = 1;
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining
                    .iter()
                    .any(|&j| dominates_unchecked(candidates[j].quality(), candidates[i].quality()))
            })
            .collect();
        for &i in &front {
            layer[i] = Some(current);
        }
        remaining.retain(|i| layer[*i].is_none());
        current += 1;
    }
    layer
}
