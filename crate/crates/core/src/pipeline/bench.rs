use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;

use super::{run_combined, run_nbv, ReconstructionTrace};
use crate::geometry::NUM_VIEWS;
use crate::planner::{
    GainSource, MovementWeightedNbv, NbvPlanner, OracleNbv, OracleOneShot, RandomNbv,
    UnknownGainNbv,
};
use crate::seed::{derive_seed, rng_for};
use crate::simulation::SimScene;

pub const RESULTS_HEADER: &str = "object,rotation,init_view,planner,k,rv,vsc,mc,wallclock_s";
pub const CURVES_HEADER: &str = "object,rotation,init_view,planner,iter,vsc,mc";

/// One column of the planner matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchPlanner {
    /// Oracle NBV for `k` steps, then the oracle one-shot plan.
    Combined,
    /// Greedy oracle NBV until full coverage.
    Oracle,
    /// The remaining NBV baselines run until full coverage or the combined
    /// pipeline's view count on the same case.
    Random,
    UnknownGain,
    MwOracle,
    MwUnknownGain,
}

impl BenchPlanner {
    pub const ALL: [BenchPlanner; 6] = [
        BenchPlanner::Combined,
        BenchPlanner::Oracle,
        BenchPlanner::Random,
        BenchPlanner::UnknownGain,
        BenchPlanner::MwOracle,
        BenchPlanner::MwUnknownGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchPlanner::Combined => "combined",
            BenchPlanner::Oracle => "oracle",
            BenchPlanner::Random => "random",
            BenchPlanner::UnknownGain => "unknown-gain",
            BenchPlanner::MwOracle => "mw-oracle",
            BenchPlanner::MwUnknownGain => "mw-unknown-gain",
        }
    }

    fn capped(self) -> bool {
        !matches!(self, BenchPlanner::Combined | BenchPlanner::Oracle)
    }
}

impl fmt::Display for BenchPlanner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchPlanner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown planner `{s}`; expected one of combined, oracle, random, unknown-gain, mw-oracle, mw-unknown-gain"))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchConfig {
    /// NBV iterations before the one-shot plan in the combined pipeline.
    pub k: usize,
    pub planners: Vec<String>,
    /// Seeds for the random planner; one row per seed.
    pub seeds: Vec<u64>,
    pub initial_views: usize,
    /// Root seed for the choice of initial views.
    pub seed: u64,
    pub node_budget: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            k: 1,
            planners: vec!["combined".into(), "oracle".into(), "random".into()],
            seeds: vec![0],
            initial_views: 5,
            seed: 0,
            node_budget: crate::set_cover::DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub object: u16,
    pub rotation: u8,
    pub init_view: usize,
    /// Planner name; random rows carry their seed as `random/<seed>`.
    pub planner: String,
    pub trace: ReconstructionTrace,
    pub wallclock_s: f64,
}

impl BenchRow {
    /// NBV iterations executed.
    pub fn k(&self) -> usize {
        self.trace.nbv_steps
    }

    /// Coverage and cumulative movement cost after each iteration `0..32`, final
    /// values carried forward after the run ends.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let t = &self.trace;
        let mut mc = 0.0;
        (0..NUM_VIEWS)
            .map(|i| {
                let j = i.min(t.views.len() - 1);
                if i > 0 && i < t.views.len() {
                    mc += t.legs[i - 1];
                }
                (t.coverage[j], mc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    /// Cells that failed, with the reason; the rest of the run continues.
    pub failures: Vec<String>,
}

/// Seeded choice of `n` distinct initial views for one object case.
pub fn initial_views(seed: u64, scene: &SimScene, n: usize) -> Vec<usize> {
    let tag = (u64::from(scene.object.object_id) << 8) | u64::from(scene.object.rotation);
    let n = n.min(NUM_VIEWS);
    let mut v = index::sample(&mut rng_for(seed, "initial-views", tag), NUM_VIEWS, n).into_vec();
    v.sort_unstable();
    v
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn run_cell(
    scene: &SimScene,
    v0: usize,
    planners: &[BenchPlanner],
    cfg: &BenchConfig,
) -> (Vec<BenchRow>, Vec<String>) {
    let o = scene.object;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let row = |planner: String, trace: ReconstructionTrace, wallclock_s: f64| BenchRow {
        object: o.object_id,
        rotation: o.rotation,
        init_view: v0,
        planner,
        trace,
        wallclock_s,
    };
    let cell = format!("object {} rotation {} view {v0}", o.object_id, o.rotation);
    let needs_combined = planners
        .iter()
        .any(|p| *p == BenchPlanner::Combined || p.capped());
    let combined = if needs_combined {
        let mut oneshot = OracleOneShot {
            node_budget: cfg.node_budget,
        };
        let (r, secs) = timed(|| run_combined(scene, cfg.k, &mut OracleNbv, &mut oneshot, v0));
        match r {
            Ok(t) => Some((t, secs)),
            Err(e) => {
                failures.push(format!("{cell} combined: {e}"));
                None
            }
        }
    } else {
        None
    };
    let cap = combined.as_ref().map(|(t, _)| t.metrics.rv);
    for &p in planners {
        let mut run = |name: String, planner: &mut dyn NbvPlanner, max_views: Option<usize>| {
            let Some(max_views) = max_views else {
                failures.push(format!("{cell} {name}: no combined run to cap against"));
                return;
            };
            match timed(|| run_nbv(scene, planner, v0, max_views)) {
                (Ok(t), secs) => rows.push(row(name, t, secs)),
                (Err(e), _) => failures.push(format!("{cell} {name}: {e}")),
            }
        };
        match p {
            BenchPlanner::Combined => {
                if let Some((t, secs)) = &combined {
                    rows.push(row(p.name().into(), t.clone(), *secs));
                }
            }
            BenchPlanner::Oracle => run(p.name().into(), &mut OracleNbv, Some(NUM_VIEWS)),
            BenchPlanner::Random => {
                for &s in &cfg.seeds {
                    let tag =
                        ((u64::from(o.object_id) << 8 | u64::from(o.rotation)) << 8) | v0 as u64;
                    let mut planner = RandomNbv::new(derive_seed(s, "random-nbv", tag));
                    run(format!("random/{s}"), &mut planner, cap);
                }
            }
            BenchPlanner::UnknownGain => run(p.name().into(), &mut UnknownGainNbv, cap),
            BenchPlanner::MwOracle => run(
                p.name().into(),
                &mut MovementWeightedNbv {
                    source: GainSource::Oracle,
                },
                cap,
            ),
            BenchPlanner::MwUnknownGain => run(
                p.name().into(),
                &mut MovementWeightedNbv {
                    source: GainSource::Unknown,
                },
                cap,
            ),
        }
    }
    (rows, failures)
}

/// Runs every (object case, initial view, planner) cell. Rows come back in
/// scene order, then initial view, then planner-matrix order.
pub fn run_benchmark(scenes: &[SimScene], cfg: &BenchConfig) -> Result<BenchOutcome, String> {
    let planners = cfg
        .planners
        .iter()
        .map(|s| s.parse::<BenchPlanner>())
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, usize)> = scenes
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            initial_views(cfg.seed, s, cfg.initial_views)
                .into_iter()
                .map(move |v| (i, v))
        })
        .collect();
    let results: Vec<(Vec<BenchRow>, Vec<String>)> = cells
        .par_iter()
        .map(|&(i, v0)| run_cell(&scenes[i], v0, &planners, cfg))
        .collect();
    let mut out = BenchOutcome::default();
    for (rows, failures) in results {
        for f in &failures {
            log::warn!("{f}");
        }
        out.rows.extend(rows);
        out.failures.extend(failures);
    }
    Ok(out)
}

pub fn write_results_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        let m = r.trace.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6}",
            r.object,
            r.rotation,
            r.init_view,
            r.planner,
            r.k(),
            m.rv,
            m.vsc,
            m.mc,
            r.wallclock_s
        )?;
    }
    Ok(())
}

pub fn write_curves_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CURVES_HEADER}")?;
    for r in rows {
        for (i, (vsc, mc)) in r.curve().into_iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{i},{vsc},{mc}",
                r.object, r.rotation, r.init_view, r.planner
            )?;
        }
    }
    Ok(())
}

/// Per-planner means `(planner, rows, rv, vsc, mc)` in first-appearance order.
/// Random seeds are pooled under `random`.
pub fn summarize(rows: &[BenchRow]) -> Vec<(String, usize, f64, f64, f64)> {
    let mut out: Vec<(String, usize, f64, f64, f64)> = Vec::new();
    for r in rows {
        let name = r.planner.split('/').next().unwrap_or_default().to_string();
        let m = r.trace.metrics;
        match out.iter_mut().find(|e| e.0 == name) {
            Some(e) => {
                e.1 += 1;
                e.2 += m.rv as f64;
                e.3 += m.vsc;
                e.4 += m.mc;
            }
            None => out.push((name, 1, m.rv as f64, m.vsc, m.mc)),
        }
    }
    for e in &mut out {
        let n = e.1 as f64;
        e.2 /= n;
        e.3 /= n;
        e.4 /= n;
    }
    out
}
