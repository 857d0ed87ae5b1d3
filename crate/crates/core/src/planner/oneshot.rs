use std::path::{Path, PathBuf};

use super::{OneShotPlanner, PlanContext, PlannerError, ViewState};
use crate::geometry::NUM_VIEWS;
use crate::set_cover::{solve_exact, CoverError, CoverInstance, DEFAULT_NODE_BUDGET};
use crate::voxel::VisibilityTable;
use crate::ElementSet;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OneShotPlan {
    /// Unordered view ids, ascending.
    pub views: Vec<usize>,
    /// False when the plan is a budget-limited set cover.
    pub optimal: bool,
    /// Predicted ids dropped because they were already visited.
    pub excluded: usize,
}

/// Exact minimum set of unvisited views that observes every uncovered voxel.
pub fn oneshot_oracle(
    table: &VisibilityTable,
    covered: &ElementSet,
    state: ViewState,
    node_budget: u64,
) -> Result<OneShotPlan, PlannerError> {
    let rest = ElementSet::full(table.universe_size()).difference(covered);
    let sets: Vec<ElementSet> = (0..table.num_views())
        .map(|v| table.view_set(v).clone())
        .collect();
    let inst =
        CoverInstance::from_element_sets(&rest, &sets, state.packed()).map_err(|e| match e {
            CoverError::Infeasible(elems) => {
                PlannerError::Infeasible(elems.iter().map(|&e| table.key(e as usize)).collect())
            }
            other => PlannerError::Cover(other),
        })?;
    let sol = solve_exact(&inst, node_budget);
    Ok(OneShotPlan {
        views: sol.chosen,
        optimal: sol.optimal,
        excluded: 0,
    })
}

/// Parses a prediction: exactly 32 characters of '0'/'1' (surrounding
/// whitespace ignored), character `i` is view id `i`.
pub fn parse_prediction(text: &str) -> Result<u32, PlannerError> {
    let t = text.trim();
    if t.chars().count() != NUM_VIEWS {
        return Err(PlannerError::Prediction(format!(
            "expected {NUM_VIEWS} bits, found {} characters",
            t.chars().count()
        )));
    }
    t.chars()
        .enumerate()
        .try_fold(0u32, |acc, (i, ch)| match ch {
            '0' => Ok(acc),
            '1' => Ok(acc | 1 << i),
            other => Err(PlannerError::Prediction(format!(
                "character {i} is {other:?}, not 0 or 1"
            ))),
        })
}

/// Reads an externally predicted view set, dropping visited ids.
pub fn oneshot_external(path: &Path, state: ViewState) -> Result<OneShotPlan, PlannerError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlannerError::Io(format!("{}: {e}", path.display())))?;
    let bits = parse_prediction(&text)?;
    let excluded = (bits & state.packed()).count_ones() as usize;
    if excluded > 0 {
        log::warn!(
            "{}: {excluded} predicted view(s) already visited, dropped",
            path.display()
        );
    }
    let keep = bits & !state.packed();
    Ok(OneShotPlan {
        views: (0..NUM_VIEWS).filter(|&i| keep >> i & 1 == 1).collect(),
        optimal: false,
        excluded,
    })
}

pub struct OracleOneShot {
    pub node_budget: u64,
}

impl Default for OracleOneShot {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl OneShotPlanner for OracleOneShot {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<OneShotPlan, PlannerError> {
        oneshot_oracle(ctx.table, ctx.covered, ctx.state, self.node_budget)
    }
}

pub struct ExternalOneShot {
    pub path: PathBuf,
}

impl OneShotPlanner for ExternalOneShot {
    fn name(&self) -> String {
        format!("external:{}", self.path.display())
    }

    fn plan(&mut self, ctx: &PlanContext<'_>) -> Result<OneShotPlan, PlannerError> {
        oneshot_external(&self.path, ctx.state)
    }
}

/// Plans nothing, turning the combined loop into pure NBV.
pub struct EmptyOneShot;

impl OneShotPlanner for EmptyOneShot {
    fn name(&self) -> String {
        "none".into()
    }

    fn plan(&mut self, _ctx: &PlanContext<'_>) -> Result<OneShotPlan, PlannerError> {
        Ok(OneShotPlan {
            views: Vec::new(),
            optimal: true,
            excluded: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro() -> VisibilityTable {
        // views 1..=3 carry the textbook sets over 0..5, view 0 a subset of view 1
        let mut sets = vec![vec![]; NUM_VIEWS];
        sets[0] = vec![0];
        sets[1] = vec![0, 1, 2];
        sets[2] = vec![1, 2, 3];
        sets[3] = vec![0, 3, 4];
        VisibilityTable::from_element_sets(5, &sets).unwrap()
    }

    #[test]
    fn oracle_on_the_textbook_example() {
        let t = micro();
        let plan =
            oneshot_oracle(&t, &t.empty_cover(), ViewState::new(), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(plan.views, vec![2, 3]);
        assert!(plan.optimal);
        let all = t.cover_of(0..NUM_VIEWS);
        assert!(
            oneshot_oracle(&t, &all, ViewState::new(), DEFAULT_NODE_BUDGET)
                .unwrap()
                .views
                .is_empty()
        );
    }

    #[test]
    fn oracle_never_returns_visited_and_reports_invisible_voxels() {
        let t = micro();
        let plan = oneshot_oracle(
            &t,
            &t.empty_cover(),
            ViewState::new().with(2),
            DEFAULT_NODE_BUDGET,
        )
        .unwrap();
        assert_eq!(plan.views, vec![1, 3]);
        // element 3 and 4 only visible from view 3
        let covered = t.cover_of([1]);
        match oneshot_oracle(&t, &covered, ViewState::new().with(3), DEFAULT_NODE_BUDGET) {
            Err(PlannerError::Infeasible(keys)) => assert_eq!(keys, vec![t.key(4)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prediction_parsing() {
        assert_eq!(parse_prediction(&"0".repeat(32)).unwrap(), 0);
        let mut s = vec!['0'; 32];
        s[3] = '1';
        s[7] = '1';
        let s: String = s.into_iter().collect();
        assert_eq!(
            parse_prediction(&format!("{s}\n")).unwrap(),
            1 << 3 | 1 << 7
        );
        assert!(parse_prediction(&"0".repeat(31)).is_err());
        assert!(parse_prediction(&"0".repeat(33)).is_err());
        assert!(parse_prediction(&format!("{}2", "0".repeat(31))).is_err());
    }

    #[test]
    fn external_file_excludes_visited() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.txt");
        let mut s = vec!['0'; 32];
        s[3] = '1';
        s[7] = '1';
        std::fs::write(&p, s.iter().collect::<String>()).unwrap();
        let plan = oneshot_external(&p, ViewState::new()).unwrap();
        assert_eq!((plan.views.clone(), plan.excluded), (vec![3, 7], 0));
        let plan = oneshot_external(&p, ViewState::new().with(3)).unwrap();
        assert_eq!((plan.views, plan.excluded), (vec![7], 1));
        std::fs::write(&p, "0".repeat(32)).unwrap();
        assert!(oneshot_external(&p, ViewState::new())
            .unwrap()
            .views
            .is_empty());
        assert!(matches!(
            oneshot_external(&dir.path().join("missing"), ViewState::new()),
            Err(PlannerError::Io(_))
        ));
    }
}
