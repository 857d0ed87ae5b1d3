//! Set covering over at most 32 view sets: an exact branch-and-bound solver and
//! the greedy heuristic.

mod exact;
mod io;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ElementSet;

pub use exact::{solve_exact, DEFAULT_NODE_BUDGET};
pub use io::{read_instance, write_instance};

/// Maximum number of sets in an instance (one per candidate view).
pub const MAX_SETS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    /// Elements (by original label) that no set contains.
    #[error("infeasible instance: {} element(s) in no set, first {:?}", .0.len(), .0.first())]
    Infeasible(Vec<u64>),
    #[error("too many sets: {0} (at most 32)")]
    TooManySets(usize),
    #[error("set {set} references element {element} outside the universe")]
    UnknownElement { set: usize, element: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoverError {
    fn from(e: std::io::Error) -> Self {
        CoverError::Io(e.to_string())
    }
}

/// A feasible set-cover instance with densely numbered elements.
///
/// Set `j` is the set of view id `j`; sets may be empty (visited or useless views).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverInstance {
    labels: Vec<u64>,
    sets: Vec<Vec<u32>>,
    /// For each dense element, the bitmask of sets containing it.
    masks: Vec<u32>,
}

impl CoverInstance {
    /// Builds an instance over elements `0..universe_size`.
    pub fn new(universe_size: usize, sets: Vec<Vec<u32>>) -> Result<Self, CoverError> {
        Self::labelled((0..universe_size as u64).collect(), sets)
    }

    /// Builds an instance from arbitrary element labels; elements are renumbered
    /// densely in ascending label order.
    pub fn from_labels(universe: &[u64], sets: &[Vec<u64>]) -> Result<Self, CoverError> {
        let mut labels = universe.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let dense: HashMap<u64, u32> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i as u32))
            .collect();
        let mut out = Vec::with_capacity(sets.len());
        for (j, s) in sets.iter().enumerate() {
            let mut d = Vec::with_capacity(s.len());
            for &e in s {
                match dense.get(&e) {
                    Some(&i) => d.push(i),
                    None => return Err(CoverError::UnknownElement { set: j, element: e }),
                }
            }
            out.push(d);
        }
        Self::labelled(labels, out)
    }

    /// The residual instance: universe `rest`, set `j` is `view_sets[j] ∩ rest`,
    /// and sets whose bit is in `excluded` are empty. Labels are the original
    /// element indices.
    pub fn from_element_sets(
        rest: &ElementSet,
        view_sets: &[ElementSet],
        excluded: u32,
    ) -> Result<Self, CoverError> {
        if view_sets.len() > MAX_SETS {
            return Err(CoverError::TooManySets(view_sets.len()));
        }
        let labels: Vec<u64> = rest.iter().map(|e| e as u64).collect();
        let dense: HashMap<usize, u32> = rest
            .iter()
            .enumerate()
            .map(|(i, e)| (e, i as u32))
            .collect();
        let sets = view_sets
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if excluded >> j & 1 == 1 {
                    Vec::new()
                } else {
                    s.iter().filter_map(|e| dense.get(&e).copied()).collect()
                }
            })
            .collect();
        Self::labelled(labels, sets)
    }

    fn labelled(labels: Vec<u64>, mut sets: Vec<Vec<u32>>) -> Result<Self, CoverError> {
        if sets.len() > MAX_SETS {
            return Err(CoverError::TooManySets(sets.len()));
        }
        let n = labels.len();
        let mut masks = vec![0u32; n];
        for (j, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            for &e in s.iter() {
                if e as usize >= n {
                    return Err(CoverError::UnknownElement {
                        set: j,
                        element: e as u64,
                    });
                }
                masks[e as usize] |= 1 << j;
            }
        }
        let missing: Vec<u64> = masks
            .iter()
            .zip(&labels)
            .filter(|(&m, _)| m == 0)
            .map(|(_, &l)| l)
            .collect();
        if !missing.is_empty() {
            return Err(CoverError::Infeasible(missing));
        }
        Ok(Self {
            labels,
            sets,
            masks,
        })
    }

    pub fn universe_size(&self) -> usize {
        self.labels.len()
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, j: usize) -> &[u32] {
        &self.sets[j]
    }

    /// Original label of dense element `e`.
    pub fn label(&self, e: usize) -> u64 {
        self.labels[e]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub(crate) fn element_masks(&self) -> &[u32] {
        &self.masks
    }

    /// Distinct covering masks with multiplicities, in ascending mask order.
    pub(crate) fn mask_counts(&self) -> Vec<(u32, usize)> {
        let mut m: BTreeMap<u32, usize> = BTreeMap::new();
        for &x in &self.masks {
            *m.entry(x).or_default() += 1;
        }
        m.into_iter().collect()
    }

    /// True when the given set ids cover every element.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let pick = chosen
            .iter()
            .filter(|&&j| j < MAX_SETS)
            .fold(0u32, |a, &j| a | 1 << j);
        self.masks.iter().all(|&m| m & pick != 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSolution {
    /// Chosen set (view) ids, ascending.
    pub chosen: Vec<usize>,
    /// Set when no smaller cover exists.
    pub optimal: bool,
    /// Search nodes expanded (0 for greedy).
    pub nodes: u64,
}

impl CoverSolution {
    pub fn objective(&self) -> usize {
        self.chosen.len()
    }

    pub fn as_mask(&self) -> u32 {
        self.chosen.iter().fold(0, |a, &j| a | 1 << j)
    }
}

/// Greedy cover: repeatedly take the set covering the most uncovered elements,
/// ties to the lowest id.
pub fn solve_greedy(inst: &CoverInstance) -> CoverSolution {
    let rows = inst.mask_counts();
    let mut covered = vec![false; rows.len()];
    let mut remaining = rows.len();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let mut best = (0usize, usize::MAX);
        for j in 0..inst.num_sets() {
            let gain: usize = rows
                .iter()
                .zip(&covered)
                .filter(|((m, _), &c)| !c && m >> j & 1 == 1)
                .map(|((_, n), _)| n)
                .sum();
            if gain > best.0 {
                best = (gain, j);
            }
        }
        let j = best.1;
        chosen.push(j);
        for ((m, _), c) in rows.iter().zip(covered.iter_mut()) {
            if !*c && m >> j & 1 == 1 {
                *c = true;
                remaining -= 1;
            }
        }
    }
    chosen.sort_unstable();
    CoverSolution {
        chosen,
        optimal: false,
        nodes: 0,
    }
}
