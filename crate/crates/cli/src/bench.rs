use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args;
use serde::Serialize;
use viewplan_core::pipeline::{
    run_benchmark, summarize, write_curves_csv, write_results_csv, BenchConfig,
};
use viewplan_core::set_cover::DEFAULT_NODE_BUDGET;

use crate::common::{create_dir, write_config, CorpusArgs, SimArgs};

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// NBV iterations before the one-shot plan in the combined pipeline.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// combined, oracle, random, unknown-gain, mw-oracle, mw-unknown-gain.
    #[arg(long, value_delimiter = ',', default_value = "combined,oracle,random")]
    pub planners: Vec<String>,
    /// Random-planner seeds; one row per seed and cell.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    pub initial_views: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        k: args.k,
        planners: args.planners.clone(),
        seeds: args.seeds.clone(),
        initial_views: args.initial_views,
        seed: args.sim.seed,
        node_budget: args.node_budget,
    };
    // reject bad planner names before the expensive imaging
    run_benchmark(&[], &cfg).map_err(|e| anyhow!(e))?;
    let sim = args.sim.sim_config()?;
    let scenes = args.corpus.build_scenes(&sim)?;
    let outcome = run_benchmark(&scenes, &cfg).map_err(|e| anyhow!(e))?;

    create_dir(&args.out)?;
    write_config(&args.out, "config.json", args)?;
    let mut f = BufWriter::new(File::create(args.out.join("results.csv"))?);
    write_results_csv(&outcome.rows, &mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(File::create(args.out.join("curves.csv"))?);
    write_curves_csv(&outcome.rows, &mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(File::create(args.out.join("summary.csv"))?);
    writeln!(f, "planner,n,mean_rv,mean_vsc,mean_mc")?;
    for (name, n, rv, vsc, mc) in summarize(&outcome.rows) {
        writeln!(f, "{name},{n},{rv},{vsc},{mc}")?;
    }
    f.flush()?;
    if !outcome.failures.is_empty() {
        let mut f = BufWriter::new(File::create(args.out.join("failures.txt"))?);
        for line in &outcome.failures {
            writeln!(f, "{line}")?;
        }
        f.flush()?;
    }
    println!(
        "{} rows, {} failed cells, written to {}",
        outcome.rows.len(),
        outcome.failures.len(),
        args.out.display()
    );
    Ok(())
}
