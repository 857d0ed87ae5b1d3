use super::{solve_greedy, CoverInstance, CoverSolution};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

struct Exhausted;

struct Search {
    /// Reduced rows: distinct covering masks with no row a superset of another,
    /// ascending popcount.
    rows: Vec<u32>,
    nodes: u64,
    budget: u64,
}

impl Search {
    fn new(inst: &CoverInstance, budget: u64) -> Self {
        let mut masks: Vec<u32> = inst.element_masks().to_vec();
        masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
        masks.dedup();
        let mut rows: Vec<u32> = Vec::with_capacity(masks.len());
        for m in masks {
            // a row containing a kept row is covered whenever the kept row is
            if !rows.iter().any(|&r| r & m == r) {
                rows.push(m);
            }
        }
        Self {
            rows,
            nodes: 0,
            budget,
        }
    }

    /// Lower bound on sets still needed: a disjoint row packing, or uncovered rows
    /// over the most rows any one set can hit.
    fn lower_bound(uncovered: &[u32], allowed: u32) -> u32 {
        let mut used = 0u32;
        let mut packing = 0u32;
        for &r in uncovered {
            if r & used == 0 {
                used |= r;
                packing += 1;
            }
        }
        let mut max_hit = 0usize;
        let mut bits = allowed;
        while bits != 0 {
            let j = bits.trailing_zeros();
            bits &= bits - 1;
            let hit = uncovered.iter().filter(|&&r| r >> j & 1 == 1).count();
            max_hit = max_hit.max(hit);
        }
        let counting = uncovered.len().div_ceil(max_hit.max(1)) as u32;
        packing.max(counting)
    }

    /// Finds a cover of at most `k` sets that contains `chosen` and otherwise uses
    /// only sets in `allowed`.
    fn search(&mut self, chosen: u32, allowed: u32, k: u32) -> Result<Option<u32>, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Exhausted);
        }
        let mut uncovered = Vec::new();
        for &r in &self.rows {
            if r & chosen != 0 {
                continue;
            }
            let a = r & allowed;
            if a == 0 {
                return Ok(None);
            }
            uncovered.push(a);
        }
        if uncovered.is_empty() {
            return Ok(Some(chosen));
        }
        let used = chosen.count_ones();
        if used >= k || used + Self::lower_bound(&uncovered, allowed) > k {
            return Ok(None);
        }
        let branch = *uncovered
            .iter()
            .min_by_key(|r| r.count_ones())
            .expect("nonempty");
        let mut allow = allowed;
        let mut bits = branch;
        while bits != 0 {
            let j = 31 - bits.leading_zeros();
            bits &= !(1 << j);
            allow &= !(1 << j);
            if let Some(s) = self.search(chosen | 1 << j, allow, k)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }
}

fn ids(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask >> j & 1 == 1).collect()
}

/// Minimum-cardinality cover by branch-and-bound.
///
/// Among optimal covers the one whose ascending id list is lexicographically
/// greatest is returned. If `node_budget` runs out before optimality is proven,
/// the best cover found so far is returned with `optimal` unset.
pub fn solve_exact(inst: &CoverInstance, node_budget: u64) -> CoverSolution {
    let greedy = solve_greedy(inst);
    let mut s = Search::new(inst, node_budget);
    let nonempty = (0..inst.num_sets())
        .filter(|&j| !inst.set(j).is_empty())
        .fold(0u32, |a, j| a | 1 << j);
    let root_lb = Search::lower_bound(&s.rows, nonempty);

    // iterative deepening on the cover size, greedy as the fallback incumbent
    let mut best = greedy.as_mask();
    let mut m = greedy.objective() as u32;
    for k in root_lb..greedy.objective() as u32 {
        match s.search(0, nonempty, k) {
            Ok(Some(found)) => {
                best = found;
                m = found.count_ones();
                break;
            }
            Ok(None) => {}
            Err(Exhausted) => {
                return CoverSolution {
                    chosen: ids(best),
                    optimal: false,
                    nodes: s.nodes,
                };
            }
        }
    }

    // fix ids one position at a time, largest first
    let mut prefix = 0u32;
    let mut lo = 0usize;
    for _ in 0..m {
        let mut fixed = false;
        for j in (lo..inst.num_sets()).rev() {
            if nonempty >> j & 1 == 0 {
                continue;
            }
            let above = if j >= 31 { 0 } else { !0u32 << (j + 1) };
            match s.search(prefix | 1 << j, nonempty & above, m) {
                Ok(Some(_)) => {
                    prefix |= 1 << j;
                    lo = j + 1;
                    fixed = true;
                    break;
                }
                Ok(None) => {}
                Err(Exhausted) => {
                    return CoverSolution {
                        chosen: ids(best),
                        optimal: true,
                        nodes: s.nodes,
                    };
                }
            }
        }
        debug_assert!(fixed, "an optimal cover always extends the prefix");
        if inst.is_cover(&ids(prefix)) {
            break;
        }
    }
    CoverSolution {
        chosen: ids(prefix),
        optimal: true,
        nodes: s.nodes,
    }
}
