use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Serialize;
use viewplan_core::pipeline::{run_combined, Stage};
use viewplan_core::planner::{
    EmptyOneShot, ExternalOneShot, GainSource, MovementWeightedNbv, NbvPlanner, OneShotPlanner,
    OracleNbv, OracleOneShot, RandomNbv, UnknownGainNbv,
};
use viewplan_core::sampling::ObjectCase;
use viewplan_core::seed::derive_seed;
use viewplan_core::set_cover::DEFAULT_NODE_BUDGET;
use viewplan_core::simulation::{load_object, SimScene};
use viewplan_core::NUM_VIEWS;

use crate::common::{create_dir, write_config, SimArgs};

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// `prim:sphere|box|cylinder` or a `.ply`/`.obj` path.
    #[arg(long)]
    pub object: String,
    #[arg(long)]
    pub object_size_m: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub rotation: u8,
    #[arg(long, default_value_t = 0)]
    pub init_view: usize,
    /// NBV iterations before the one-shot plan.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// oracle, random, unknown-gain, mw-oracle or mw-unknown-gain.
    #[arg(long, default_value = "oracle")]
    pub nbv: String,
    /// oracle, none, or external:<prediction file>.
    #[arg(long, default_value = "oracle")]
    pub oneshot: String,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn nbv_planner(name: &str, seed: u64) -> Result<Box<dyn NbvPlanner>> {
    Ok(match name {
        "oracle" => Box::new(OracleNbv),
        "random" => Box::new(RandomNbv::new(derive_seed(seed, "random-nbv", 0))),
        "unknown-gain" => Box::new(UnknownGainNbv),
        "mw-oracle" => Box::new(MovementWeightedNbv {
            source: GainSource::Oracle,
        }),
        "mw-unknown-gain" => Box::new(MovementWeightedNbv {
            source: GainSource::Unknown,
        }),
        other => bail!("unknown NBV planner `{other}`"),
    })
}

fn oneshot_planner(spec: &str, node_budget: u64) -> Result<Box<dyn OneShotPlanner>> {
    if let Some(path) = spec.strip_prefix("external:") {
        return Ok(Box::new(ExternalOneShot { path: path.into() }));
    }
    Ok(match spec {
        "oracle" => Box::new(OracleOneShot { node_budget }),
        "none" => Box::new(EmptyOneShot),
        other => bail!("unknown one-shot planner `{other}`"),
    })
}

fn stage_columns(s: &Stage) -> (&'static str, &str) {
    match s {
        Stage::Initial => ("initial", ""),
        Stage::Nbv(n) => ("nbv", n),
        Stage::OneShot(n) => ("oneshot", n),
    }
}

pub fn run(args: &ReconstructArgs) -> Result<()> {
    if args.rotation >= 8 {
        bail!("--rotation must be in 0..8");
    }
    if args.init_view >= NUM_VIEWS {
        bail!("--init-view must be in 0..{NUM_VIEWS}");
    }
    let sim = args.sim.sim_config()?;
    let mut nbv = nbv_planner(&args.nbv, args.sim.seed)?;
    let mut oneshot = oneshot_planner(&args.oneshot, args.node_budget)?;
    let mesh = load_object(&args.object, args.object_size_m)
        .with_context(|| format!("loading object `{}`", args.object))?;
    let scene = SimScene::build(ObjectCase::new(0, args.rotation), &mesh, &sim)?;
    let trace = run_combined(
        &scene,
        args.k,
        nbv.as_mut(),
        oneshot.as_mut(),
        args.init_view,
    )
    .map_err(|e| anyhow!("reconstruction failed: {e}"))?;

    create_dir(&args.out_dir)?;
    let path = args.out_dir.join("trace.csv");
    let mut out = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(out, "step,view,stage,planner,coverage,leg_m")?;
    for (i, &v) in trace.views.iter().enumerate() {
        let (stage, planner) = stage_columns(&trace.stages[i]);
        let leg = if i == 0 { 0.0 } else { trace.legs[i - 1] };
        writeln!(
            out,
            "{i},{v},{stage},{planner},{},{}",
            trace.coverage[i], leg
        )?;
    }
    out.flush()?;

    let m = &trace.metrics;
    let path = args.out_dir.join("metrics.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "object,rotation,init_view,k,rv,vsc,mc,oneshot_optimal")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        args.object,
        args.rotation,
        args.init_view,
        trace.nbv_steps,
        m.rv,
        m.vsc,
        m.mc,
        trace.oneshot_optimal
    )?;
    out.flush()?;
    write_config(&args.out_dir, "config.json", args)?;
    println!("rv {} vsc {:.6} mc {:.6}", m.rv, m.vsc, m.mc);
    Ok(())
}
