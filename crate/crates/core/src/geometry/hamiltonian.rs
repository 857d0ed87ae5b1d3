use super::{GeometryError, PathGraph};

/// Largest graph accepted by the bitmask dynamic program.
pub const MAX_PATH_VERTICES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPath {
    /// Vertex indices into the graph, starting at the start vertex.
    pub order: Vec<usize>,
    pub length: f64,
}

impl HamiltonianPath {
    pub fn view_ids(&self, graph: &PathGraph) -> Vec<usize> {
        self.order.iter().map(|&i| graph.view_ids[i]).collect()
    }
}

/// Shortest path from the start vertex visiting every vertex once.
///
/// Bitmask dynamic program over the non-start vertices, O(n² 2ⁿ). The table holds
/// the cheapest completion from `(visited, last)`, so the forward walk can pick
/// the smallest next vertex among all optimal continuations, which yields the
/// lexicographically smallest optimal sequence.
pub fn shortest_hamiltonian_path(graph: &PathGraph) -> Result<HamiltonianPath, GeometryError> {
    let n = graph.len();
    if n == 0 || n > MAX_PATH_VERTICES {
        return Err(GeometryError::GraphSize(n));
    }
    if graph.start >= n {
        return Err(GeometryError::BadStart {
            start: graph.start,
            n,
        });
    }
    let s = graph.start;
    if n == 1 {
        return Ok(HamiltonianPath {
            order: vec![s],
            length: 0.0,
        });
    }
    // others[k] = original vertex index, ascending
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let m = others.len();
    let full = (1usize << m) - 1;
    let w = |a: usize, b: usize| graph.weights[others[a]][others[b]];

    // completion[mask * m + j]: cheapest way to visit the rest given `mask` visited, ending so far at j
    let mut completion = vec![f64::INFINITY; (full + 1) * m];
    for j in 0..m {
        completion[full * m + j] = 0.0;
    }
    for mask in (1..full).rev() {
        for j in 0..m {
            if mask >> j & 1 == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut rest = full & !mask;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let c = w(j, k) + completion[(mask | 1 << k) * m + k];
                if c < best {
                    best = c;
                }
            }
            completion[mask * m + j] = best;
        }
    }

    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let mut order = vec![s];
    let mut mask = 0usize;
    let mut cur: Option<usize> = None;
    for _ in 0..m {
        let step_cost = |k: usize| -> f64 {
            let edge = match cur {
                None => graph.weights[s][others[k]],
                Some(j) => w(j, k),
            };
            edge + completion[(mask | 1 << k) * m + k]
        };
        let candidates: Vec<usize> = (0..m).filter(|&k| mask >> k & 1 == 0).collect();
        let best = candidates
            .iter()
            .map(|&k| step_cost(k))
            .fold(f64::INFINITY, f64::min);
        let next = *candidates
            .iter()
            .find(|&&k| close(step_cost(k), best))
            .expect("at least one candidate");
        mask |= 1 << next;
        cur = Some(next);
        order.push(others[next]);
    }
    let length = graph.sequence_length(&order);
    Ok(HamiltonianPath { order, length })
}
