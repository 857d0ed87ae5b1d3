//! The combined NBV + one-shot reconstruction loop, metrics, and the benchmark
//! harness.

mod bench;

use thiserror::Error;

use crate::geometry::{
    local_path_length, shortest_hamiltonian_path, GeometryError, PathGraph, NUM_VIEWS,
};
use crate::planner::{NbvPlanner, OneShotPlanner, PlanContext, PlannerError, ViewState};
use crate::simulation::SimScene;
use crate::voxel::OccupancyGrid;
use crate::ElementSet;

pub use bench::{
    run_benchmark, summarize, write_curves_csv, write_results_csv, BenchConfig, BenchOutcome,
    BenchPlanner, BenchRow, CURVES_HEADER, RESULTS_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Metrics {
    /// Visible surface coverage `|U_cover| / |U|`.
    pub vsc: f64,
    /// Required views, the initial view included.
    pub rv: usize,
    /// Movement cost: summed local path length along the visit order, meters.
    pub mc: f64,
}

/// Which stage chose a visited view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Nbv(String),
    OneShot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionTrace {
    /// Visited views in order, the initial view first.
    pub views: Vec<usize>,
    /// Coverage after each visited view.
    pub coverage: Vec<f64>,
    /// Local path length of each move; one fewer than `views`.
    pub legs: Vec<f64>,
    pub stages: Vec<Stage>,
    /// NBV iterations executed.
    pub nbv_steps: usize,
    /// The one-shot leg in visiting order (`V_path` without its start).
    pub path: Vec<usize>,
    /// False when the one-shot set cover stopped at its node budget.
    pub oneshot_optimal: bool,
    pub metrics: Metrics,
}

impl ReconstructionTrace {
    fn start(scene: &SimScene, v0: usize) -> Self {
        let c = scene.table.coverage(scene.table.view_set(v0));
        Self {
            views: vec![v0],
            coverage: vec![c],
            legs: Vec::new(),
            stages: vec![Stage::Initial],
            nbv_steps: 0,
            path: Vec::new(),
            oneshot_optimal: true,
            metrics: Metrics {
                vsc: c,
                rv: 1,
                mc: 0.0,
            },
        }
    }

    fn refresh_metrics(&mut self) {
        self.metrics = Metrics {
            vsc: *self.coverage.last().expect("trace has an initial view"),
            rv: self.views.len(),
            mc: self.legs.iter().sum(),
        };
    }

    pub fn state(&self) -> ViewState {
        self.views.iter().fold(ViewState::new(), |s, &v| s.with(v))
    }
}

#[derive(Debug, Error)]
#[error("{source} (after {} view(s))", .partial.views.len())]
pub struct PipelineError {
    #[source]
    pub source: PlannerError,
    pub partial: Box<ReconstructionTrace>,
}

struct Run<'a> {
    scene: &'a SimScene,
    map: OccupancyGrid,
    covered: ElementSet,
    trace: ReconstructionTrace,
}

impl<'a> Run<'a> {
    fn new(scene: &'a SimScene, v0: usize) -> Self {
        let mut map = OccupancyGrid::unknown_like(&scene.world.grid);
        insert(scene, &mut map, v0);
        Self {
            scene,
            map,
            covered: scene.table.view_set(v0).clone(),
            trace: ReconstructionTrace::start(scene, v0),
        }
    }

    fn ctx(&self) -> PlanContext<'_> {
        let s = self.scene;
        PlanContext {
            views: &s.views,
            table: &s.table,
            covered: &self.covered,
            map: &self.map,
            cam: &s.camera,
            imaging: &s.imaging,
            obstacle: &s.obstacle,
            state: self.trace.state(),
            current: *self.trace.views.last().expect("nonempty"),
        }
    }

    /// Moves to `v` and records coverage; `image` also integrates it into the map.
    fn visit(&mut self, v: usize, leg: f64, stage: Stage, image: bool) {
        if image {
            insert(self.scene, &mut self.map, v);
        }
        self.covered.union_with(self.scene.table.view_set(v));
        let t = &mut self.trace;
        t.views.push(v);
        t.legs.push(leg);
        t.coverage.push(self.scene.table.coverage(&self.covered));
        t.stages.push(stage);
        t.refresh_metrics();
    }

    fn fail(self, source: PlannerError) -> PipelineError {
        PipelineError {
            source,
            partial: Box::new(self.trace),
        }
    }

    fn leg(&self, to: usize) -> Result<f64, GeometryError> {
        let from = *self.trace.views.last().expect("nonempty");
        let v = &self.scene.views;
        local_path_length(
            v.view(from).position,
            v.view(to).position,
            &self.scene.obstacle,
        )
    }

    fn nbv_step(&mut self, planner: &mut dyn NbvPlanner) -> Result<(), PlannerError> {
        let v = planner.next_view(&self.ctx())?;
        if self.trace.state().is_visited(v) {
            return Err(PlannerError::Prediction(format!(
                "{} returned visited view {v}",
                planner.name()
            )));
        }
        let leg = self.leg(v)?;
        self.visit(v, leg, Stage::Nbv(planner.name()), true);
        self.trace.nbv_steps += 1;
        Ok(())
    }
}

fn insert(scene: &SimScene, map: &mut OccupancyGrid, v: usize) {
    map.insert_observation(&scene.per_view[v], scene.views.view(v).position)
        .expect("imaged keys lie in the world grid, which the map mirrors");
}

/// Rejects an out-of-range initial view before anything is imaged.
fn check_view(v0: usize) -> Result<(), PipelineError> {
    if v0 >= NUM_VIEWS {
        return Err(PipelineError {
            source: PlannerError::Geometry(GeometryError::BadStart {
                start: v0,
                n: NUM_VIEWS,
            }),
            partial: Box::new(ReconstructionTrace {
                views: Vec::new(),
                coverage: Vec::new(),
                legs: Vec::new(),
                stages: Vec::new(),
                nbv_steps: 0,
                path: Vec::new(),
                oneshot_optimal: true,
                metrics: Metrics {
                    vsc: 0.0,
                    rv: 0,
                    mc: 0.0,
                },
            }),
        });
    }
    Ok(())
}

/// Initial view, `k` NBV iterations, one one-shot plan visited along the
/// shortest Hamiltonian path from the current view, imaged as one batch.
pub fn run_combined(
    scene: &SimScene,
    k: usize,
    nbv: &mut dyn NbvPlanner,
    oneshot: &mut dyn OneShotPlanner,
    v0: usize,
) -> Result<ReconstructionTrace, PipelineError> {
    check_view(v0)?;
    let mut run = Run::new(scene, v0);
    if k >= NUM_VIEWS {
        return Err(run.fail(PlannerError::AllVisited));
    }
    for _ in 0..k {
        if let Err(e) = run.nbv_step(nbv) {
            return Err(run.fail(e));
        }
    }
    let plan = match oneshot.plan(&run.ctx()) {
        Ok(p) => p,
        Err(e) => return Err(run.fail(e)),
    };
    run.trace.oneshot_optimal = plan.optimal;
    let state = run.trace.state();
    let cover: Vec<usize> = plan
        .views
        .into_iter()
        .filter(|&v| !state.is_visited(v))
        .collect();
    if cover.is_empty() {
        return Ok(run.trace);
    }
    let current = *run.trace.views.last().expect("nonempty");
    let vertices: Vec<&crate::geometry::View> = std::iter::once(current)
        .chain(cover.iter().copied())
        .map(|v| scene.views.view(v))
        .collect();
    let path = PathGraph::from_views(&vertices, &scene.obstacle, 0)
        .and_then(|g| shortest_hamiltonian_path(&g).map(|p| (p, g)));
    let (path, graph) = match path {
        Ok(x) => x,
        Err(e) => return Err(run.fail(e.into())),
    };
    let name = oneshot.name();
    for w in path.order.windows(2) {
        let v = graph.view_ids[w[1]];
        run.visit(
            v,
            graph.weights[w[0]][w[1]],
            Stage::OneShot(name.clone()),
            false,
        );
        run.trace.path.push(v);
    }
    // the whole one-shot leg is integrated after the last move
    for &v in &run.trace.path.clone() {
        insert(scene, &mut run.map, v);
    }
    Ok(run.trace)
}

/// Pure NBV from `v0` until full coverage or `max_views` visited views.
pub fn run_nbv(
    scene: &SimScene,
    nbv: &mut dyn NbvPlanner,
    v0: usize,
    max_views: usize,
) -> Result<ReconstructionTrace, PipelineError> {
    check_view(v0)?;
    let mut run = Run::new(scene, v0);
    while run.trace.views.len() < max_views.min(NUM_VIEWS)
        && run.covered.len() < scene.table.universe_size()
    {
        if let Err(e) = run.nbv_step(nbv) {
            return Err(run.fail(e));
        }
    }
    Ok(run.trace)
}

/// Recomputes metrics from the visit order alone: coverage by recounting the
/// union of visible sets, movement cost from view positions.
pub fn compute_metrics(
    trace: &ReconstructionTrace,
    scene: &SimScene,
) -> Result<Metrics, GeometryError> {
    let covered = scene.table.cover_of(trace.views.iter().copied());
    let mut mc = 0.0;
    for w in trace.views.windows(2) {
        mc += local_path_length(
            scene.views.view(w[0]).position,
            scene.views.view(w[1]).position,
            &scene.obstacle,
        )?;
    }
    Ok(Metrics {
        vsc: scene.table.coverage(&covered),
        rv: trace.views.len(),
        mc,
    })
}
