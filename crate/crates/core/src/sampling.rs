//! Whole sampling space by greedy ground-truth rollouts, and long-tail sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::NUM_VIEWS;
use crate::planner::{nbv_oracle, ViewState};
use crate::seed::rng_for;
use crate::voxel::VisibilityTable;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An object under one of its eight 45° rotations about the vertical axis.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct ObjectCase {
    pub object_id: u16,
    pub rotation: u8,
}

impl ObjectCase {
    pub fn new(object_id: u16, rotation: u8) -> Self {
        assert!(rotation < 8, "rotation index {rotation} out of range");
        Self {
            object_id,
            rotation,
        }
    }
}

impl fmt::Display for ObjectCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.object_id, self.rotation)
    }
}

/// An object case with a nonempty set of already selected views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputCase {
    pub object: ObjectCase,
    pub c_view: u32,
}

impl InputCase {
    pub fn new(object: ObjectCase, c_view: u32) -> Self {
        assert!(c_view != 0, "an input case selects at least one view");
        Self { object, c_view }
    }

    pub fn state(&self) -> ViewState {
        ViewState::from_packed(self.c_view)
    }

    pub fn n_select(&self) -> usize {
        self.c_view.count_ones() as usize
    }
}

/// Running means of newly observed coverage keyed by object case and the number
/// of views selected before the step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NsTable {
    entries: BTreeMap<(ObjectCase, usize), (f64, u64)>,
}

impl NsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, object: ObjectCase, n_select: usize, gain: f64) {
        let (mean, count) = self.entries.entry((object, n_select)).or_insert((0.0, 0));
        *count += 1;
        *mean += (gain - *mean) / *count as f64;
    }

    /// Combines two tables as if all contributions had been fed to one.
    pub fn merge(&mut self, other: &NsTable) {
        for (&key, &(m2, n2)) in &other.entries {
            let (m1, n1) = self.entries.entry(key).or_insert((0.0, 0));
            let n = *n1 + n2;
            *m1 = (*m1 * *n1 as f64 + m2 * n2 as f64) / n as f64;
            *n1 = n;
        }
    }

    pub fn get(&self, object: ObjectCase, n_select: usize) -> Option<f64> {
        self.entries.get(&(object, n_select)).map(|&(m, _)| m)
    }

    pub fn count(&self, object: ObjectCase, n_select: usize) -> u64 {
        self.entries.get(&(object, n_select)).map_or(0, |&(_, n)| n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectCase, usize, f64, u64)> + '_ {
        self.entries.iter().map(|(&(o, n), &(m, c))| (o, n, m, c))
    }

    pub fn objects(&self) -> Vec<ObjectCase> {
        let mut v: Vec<ObjectCase> = self.entries.keys().map(|&(o, _)| o).collect();
        v.dedup();
        v
    }
}

/// One greedy ground-truth reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub object: ObjectCase,
    /// Visited views, the initial view first.
    pub order: Vec<usize>,
    /// Coverage after each visited view.
    pub coverage: Vec<f64>,
}

impl Rollout {
    /// Coverage added by each NBV step.
    pub fn gains(&self) -> Vec<f64> {
        self.coverage.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Visited-state prefixes, one per visited view.
    pub fn cases(&self) -> Vec<InputCase> {
        let mut state = ViewState::new();
        self.order
            .iter()
            .map(|&v| {
                state.visit(v);
                InputCase::new(self.object, state.packed())
            })
            .collect()
    }
}

/// Greedy oracle NBV from `initial` until every visible voxel is covered.
pub fn greedy_rollout(object: ObjectCase, table: &VisibilityTable, initial: usize) -> Rollout {
    let mut state = ViewState::new().with(initial);
    let mut covered = table.cover_of([initial]);
    let mut order = vec![initial];
    let mut coverage = vec![table.coverage(&covered)];
    while covered.len() < table.universe_size() {
        let v = nbv_oracle(table, &covered, state)
            .expect("uncovered voxels imply an unvisited view sees them");
        covered.union_with(table.view_set(v));
        state.visit(v);
        order.push(v);
        coverage.push(table.coverage(&covered));
    }
    Rollout {
        object,
        order,
        coverage,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    /// Every visited-state prefix of every rollout, duplicates kept, ordered by
    /// object case, initial view and step.
    pub cases: Vec<InputCase>,
    pub ns: NsTable,
    pub rollouts: Vec<Rollout>,
}

fn rollouts_from(
    tables: &[(ObjectCase, VisibilityTable)],
    initial: impl Fn(usize) -> Vec<usize> + Sync,
) -> SampleSpace {
    let jobs: Vec<(usize, usize)> = (0..tables.len())
        .flat_map(|i| initial(i).into_iter().map(move |v| (i, v)))
        .collect();
    let rollouts: Vec<Rollout> = jobs
        .par_iter()
        .map(|&(i, v)| greedy_rollout(tables[i].0, &tables[i].1, v))
        .collect();
    let mut ns = NsTable::new();
    let mut cases = Vec::new();
    for r in &rollouts {
        for (step, g) in r.gains().into_iter().enumerate() {
            ns.update(r.object, step + 1, g);
        }
        cases.extend(r.cases());
    }
    SampleSpace {
        cases,
        ns,
        rollouts,
    }
}

/// Rollouts from every initial view of every object case.
pub fn generate_whole_space(tables: &[(ObjectCase, VisibilityTable)]) -> SampleSpace {
    rollouts_from(tables, |i| (0..tables[i].1.num_views()).collect())
}

/// Rollouts from a seeded random subset of `subset_size` initial views per
/// object case (all views when `subset_size ≥ 32`).
pub fn sample_nbvr(
    tables: &[(ObjectCase, VisibilityTable)],
    subset_size: usize,
    seed: u64,
) -> SampleSpace {
    rollouts_from(tables, |i| {
        let n = tables[i].1.num_views();
        if subset_size >= n {
            return (0..n).collect();
        }
        let mut rng = rng_for(seed, "nbvr", i as u64);
        let mut pick = index::sample(&mut rng, n, subset_size).into_vec();
        pick.sort_unstable();
        pick
    })
}

/// Maximum number of cases kept for `(object, n_select)`.
pub fn long_tail_limit(
    ns: &NsTable,
    object: ObjectCase,
    n_select: usize,
    n_single: usize,
) -> usize {
    if n_select == 1 {
        return n_single;
    }
    match (ns.get(object, n_select), ns.get(object, 1)) {
        (Some(n), Some(first)) if first > 0.0 => {
            // running means carry rounding noise; don't let it push an exact
            // integer ratio up by one
            let x = n_single as f64 * n / first;
            (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as usize
        }
        _ => 0,
    }
}

/// Seeded shuffle, then keep at most `long_tail_limit` cases per bucket. The
/// result is grouped by object case, then by number of selected views.
pub fn sample_longtail(
    cases: &[InputCase],
    ns: &NsTable,
    n_single: usize,
    seed: u64,
) -> Vec<InputCase> {
    let mut shuffled = cases.to_vec();
    shuffled.sort_unstable();
    shuffled.shuffle(&mut rng_for(seed, "longtail", 0));
    let mut buckets: BTreeMap<(ObjectCase, usize), Vec<InputCase>> = BTreeMap::new();
    for c in shuffled {
        let key = (c.object, c.n_select());
        let limit = long_tail_limit(ns, c.object, key.1, n_single);
        let bucket = buckets.entry(key).or_default();
        if bucket.len() < limit {
            bucket.push(c);
        }
    }
    buckets.into_values().flatten().collect()
}

/// Case list: `object_id rotation c_view` with `c_view` as 8 hex digits.
pub fn write_cases<W: Write>(cases: &[InputCase], mut out: W) -> std::io::Result<()> {
    for c in cases {
        writeln!(
            out,
            "{} {} {:08x}",
            c.object.object_id, c.object.rotation, c.c_view
        )?;
    }
    Ok(())
}

pub fn read_cases<R: BufRead>(input: R) -> Result<Vec<InputCase>, SamplingError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| SamplingError::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 || f[2].len() != 8 {
            return Err(bad("expected `object_id rotation c_view_hex8`"));
        }
        let object_id = f[0].parse().map_err(|_| bad("object id"))?;
        let rotation: u8 = f[1].parse().map_err(|_| bad("rotation"))?;
        let c_view = u32::from_str_radix(f[2], 16).map_err(|_| bad("c_view"))?;
        if rotation >= 8 || c_view == 0 {
            return Err(bad("rotation must be < 8 and c_view nonzero"));
        }
        out.push(InputCase::new(ObjectCase::new(object_id, rotation), c_view));
    }
    Ok(out)
}

/// Number of cases per selected-view count `1..=32`, index 0 unused.
pub fn n_select_histogram(cases: &[InputCase]) -> [usize; NUM_VIEWS + 1] {
    let mut h = [0; NUM_VIEWS + 1];
    for c in cases {
        h[c.n_select()] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(seed: u64, universe: usize) -> VisibilityTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sets: Vec<Vec<usize>> = (0..NUM_VIEWS)
            .map(|_| (0..universe).filter(|_| rng.gen_bool(0.2)).collect())
            .collect();
        for e in 0..universe {
            sets[rng.gen_range(0..NUM_VIEWS)].push(e);
        }
        VisibilityTable::from_element_sets(universe, &sets).unwrap()
    }

    fn tables() -> Vec<(ObjectCase, VisibilityTable)> {
        vec![
            (ObjectCase::new(0, 0), random_table(1, 200)),
            (ObjectCase::new(0, 1), random_table(2, 150)),
            (ObjectCase::new(3, 0), random_table(3, 300)),
        ]
    }

    #[test]
    fn running_mean_and_merge_match_arithmetic_mean() {
        let o = ObjectCase::new(1, 2);
        let xs: Vec<f64> = (0..50)
            .map(|i| ((i * 37) % 11) as f64 / 13.0 + 0.01)
            .collect();
        let mut whole = NsTable::new();
        for &x in &xs {
            whole.update(o, 3, x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((whole.get(o, 3).unwrap() - mean).abs() < 1e-12);
        let mut a = NsTable::new();
        let mut b = NsTable::new();
        for &x in &xs[..17] {
            a.update(o, 3, x);
        }
        for &x in xs[17..].iter().rev() {
            b.update(o, 3, x);
        }
        b.merge(&a);
        assert!((b.get(o, 3).unwrap() - mean).abs() < 1e-12);
        assert_eq!(b.count(o, 3), 50);
        assert_eq!(b.get(o, 4), None);
    }

    #[test]
    fn whole_space_counts_and_prefix_structure() {
        let t = tables();
        let space = generate_whole_space(&t);
        assert_eq!(space.rollouts.len(), 3 * NUM_VIEWS);
        let total: usize = space.rollouts.iter().map(|r| r.order.len()).sum();
        assert_eq!(space.cases.len(), total);
        for r in &space.rollouts {
            assert!(r.order.len() <= NUM_VIEWS);
            assert_eq!(*r.coverage.last().unwrap(), 1.0);
            let g = r.gains();
            assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(g.iter().all(|&x| x > 0.0));
        }
        // ns(c, n) averages the n-th NBV gain over rollouts that reached it
        let o = ObjectCase::new(0, 1);
        let firsts: Vec<f64> = space
            .rollouts
            .iter()
            .filter(|r| r.object == o && r.order.len() > 1)
            .map(|r| r.gains()[0])
            .collect();
        let mean = firsts.iter().sum::<f64>() / firsts.len() as f64;
        assert!((space.ns.get(o, 1).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn limits_follow_the_formula() {
        let o = ObjectCase::new(0, 0);
        let mut ns = NsTable::new();
        ns.update(o, 1, 0.4);
        ns.update(o, 2, 0.2);
        ns.update(o, 3, 0.004);
        assert_eq!(long_tail_limit(&ns, o, 1, 32), 32);
        assert_eq!(long_tail_limit(&ns, o, 2, 32), 16);
        assert_eq!(long_tail_limit(&ns, o, 3, 8), 1);
        assert_eq!(long_tail_limit(&ns, o, 4, 8), 0);
        assert_eq!(long_tail_limit(&NsTable::new(), o, 1, 5), 5);
    }

    #[test]
    fn longtail_caps_buckets_and_is_reproducible() {
        let t = tables();
        let space = generate_whole_space(&t);
        let a = sample_longtail(&space.cases, &space.ns, 8, 42);
        let mut reversed = space.cases.clone();
        reversed.reverse();
        assert_eq!(a, sample_longtail(&reversed, &space.ns, 8, 42));
        let mut available: BTreeMap<(ObjectCase, usize), usize> = BTreeMap::new();
        for c in &space.cases {
            *available.entry((c.object, c.n_select())).or_default() += 1;
        }
        let mut kept: BTreeMap<(ObjectCase, usize), usize> = BTreeMap::new();
        for c in &a {
            *kept.entry((c.object, c.n_select())).or_default() += 1;
        }
        let mut expect_total = 0;
        for (&(o, n), &avail) in &available {
            let want = avail.min(long_tail_limit(&space.ns, o, n, 8));
            assert_eq!(kept.get(&(o, n)).copied().unwrap_or(0), want);
            expect_total += want;
        }
        assert_eq!(a.len(), expect_total);
        // grouped by object case then n_select
        assert!(a
            .windows(2)
            .all(|w| (w[0].object, w[0].n_select()) <= (w[1].object, w[1].n_select())));
    }

    #[test]
    fn nbvr_with_all_views_equals_whole_space() {
        let t = tables();
        assert_eq!(sample_nbvr(&t, 32, 9).cases, generate_whole_space(&t).cases);
        let sub = sample_nbvr(&t, 4, 9);
        assert_eq!(sub.rollouts.len(), 12);
        assert_eq!(sub, sample_nbvr(&t, 4, 9));
    }

    #[test]
    fn case_file_round_trip() {
        let cases = vec![
            InputCase::new(ObjectCase::new(0, 0), 1),
            InputCase::new(ObjectCase::new(12, 7), 0x8000_0101),
        ];
        let mut buf = Vec::new();
        write_cases(&cases, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "0 0 00000001\n12 7 80000101\n"
        );
        assert_eq!(read_cases(&buf[..]).unwrap(), cases);
        assert!(read_cases(&b"1 8 00000001\n"[..]).is_err());
        assert!(read_cases(&b"1 0 00000000\n"[..]).is_err());
        assert!(read_cases(&b"1 0 1\n"[..]).is_err());
    }
}
