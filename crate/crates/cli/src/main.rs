mod bench;
mod common;
mod dataset;
mod reconstruct;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use viewplan_core::geometry::{build_view_space, write_view_space};
use viewplan_core::seed::derive_seed;
use viewplan_core::set_cover::{read_instance, solve_exact, DEFAULT_NODE_BUDGET};
use viewplan_core::Vec3;

#[derive(Debug, Parser)]
#[command(
    name = "viewplan",
    version,
    about = "Simulated view planning for tabletop object reconstruction"
)]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export the 32-view candidate space.
    Views(ViewsArgs),
    /// Run one combined NBV + one-shot reconstruction.
    Reconstruct(reconstruct::ReconstructArgs),
    /// Generate a supervision dataset.
    Dataset(dataset::DatasetArgs),
    /// Run the planner benchmark.
    Bench(bench::BenchArgs),
    /// Solve a set-cover instance file and print the chosen sets.
    SolveScop(ScopArgs),
}

#[derive(Debug, clap::Args, Serialize)]
struct ViewsArgs {
    #[arg(long)]
    out: PathBuf,
    /// Object center `x,y,z`, meters.
    #[arg(long, value_delimiter = ',', num_args = 3, default_value = "0,0,0.1")]
    center_m: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    radius_m: f64,
    #[arg(long, default_value_t = 0.0)]
    tabletop_z_m: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, clap::Args)]
struct ScopArgs {
    file: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
}

fn cmd_views(args: &ViewsArgs) -> Result<()> {
    let c = Vec3::new(args.center_m[0], args.center_m[1], args.center_m[2]);
    let space = build_view_space(
        c,
        args.radius_m,
        args.tabletop_z_m,
        derive_seed(args.seed, "views", 0),
    )?;
    let mut out = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    write_view_space(&space, &mut out)?;
    out.flush()?;
    let echo = args.out.with_extension("config.json");
    std::fs::write(&echo, serde_json::to_string_pretty(args)? + "\n")?;
    println!("wrote {} views to {}", space.len(), args.out.display());
    Ok(())
}

fn cmd_solve_scop(args: &ScopArgs) -> Result<()> {
    let f = File::open(&args.file).with_context(|| format!("opening {}", args.file.display()))?;
    let inst = read_instance(BufReader::new(f))?;
    let sol = solve_exact(&inst, args.node_budget);
    println!("m {}", sol.objective());
    println!("optimal {}", sol.optimal);
    let ids: Vec<String> = sol.chosen.iter().map(|j| j.to_string()).collect();
    println!("sets {}", ids.join(" "));
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Views(a) => cmd_views(a),
        Command::Reconstruct(a) => reconstruct::run(a),
        Command::Dataset(a) => dataset::run(a),
        Command::Bench(a) => bench::run(a),
        Command::SolveScop(a) => cmd_solve_scop(a),
    }
}
