use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use viewplan_core::dataset::{generate_pair, nbv_label, DatasetWriter, LabelKind, FORMAT_VERSION};
use viewplan_core::sampling::{
    generate_whole_space, n_select_histogram, sample_longtail, sample_nbvr, write_cases, InputCase,
    ObjectCase,
};
use viewplan_core::set_cover::DEFAULT_NODE_BUDGET;
use viewplan_core::simulation::SimScene;
use viewplan_core::VisibilityTable;

use crate::common::{create_dir, write_config, CorpusArgs, SimArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Minimum covering view set of the uncovered surface.
    Scop,
    /// One-hot greedy next-best view.
    Nbv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Long-tail subset of the whole sampling space.
    Longtail,
    /// Every case of the whole sampling space.
    Whole,
    /// Rollouts from a random subset of initial views per object case.
    Nbvr,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Cases kept for one selected view per object case (long-tail sampler).
    #[arg(long, default_value_t = 4)]
    pub n_single: usize,
    /// Initial views per object case for the `nbvr` sampler.
    #[arg(long, default_value_t = 4)]
    pub nbvr_views: usize,
    #[arg(long, value_enum, default_value_t = Label::Scop)]
    pub label: Label,
    #[arg(long, value_enum, default_value_t = Sampler::Longtail)]
    pub sampler: Sampler,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,
    /// Discard an existing dataset file instead of resuming it.
    #[arg(long)]
    pub fresh: bool,
    #[arg(long)]
    pub out: PathBuf,
}

const CHUNK: usize = 64;

fn sample(args: &DatasetArgs, tables: &[(ObjectCase, VisibilityTable)]) -> Vec<InputCase> {
    match args.sampler {
        Sampler::Whole => generate_whole_space(tables).cases,
        Sampler::Nbvr => sample_nbvr(tables, args.nbvr_views, args.sim.seed).cases,
        Sampler::Longtail => {
            let space = generate_whole_space(tables);
            sample_longtail(&space.cases, &space.ns, args.n_single, args.sim.seed)
        }
    }
}

pub fn run(args: &DatasetArgs) -> Result<()> {
    let sim = args.sim.sim_config()?;
    let scenes = args.corpus.build_scenes(&sim)?;
    let index: BTreeMap<ObjectCase, &SimScene> = scenes.iter().map(|s| (s.object, s)).collect();
    let tables: Vec<(ObjectCase, VisibilityTable)> =
        scenes.iter().map(|s| (s.object, s.table.clone())).collect();
    let cases = sample(args, &tables);
    let kind = match args.label {
        Label::Scop => LabelKind::SetCover {
            node_budget: args.node_budget,
        },
        Label::Nbv => LabelKind::Nbv,
    };
    // Cases with nothing left to see get no one-hot label.
    let labelled: Vec<InputCase> = match kind {
        LabelKind::Nbv => cases
            .iter()
            .copied()
            .filter(|c| nbv_label(&index[&c.object].table, c.state()).is_ok())
            .collect(),
        LabelKind::SetCover { .. } => cases.clone(),
    };
    let skipped = cases.len() - labelled.len();

    create_dir(&args.out)?;
    write_config(&args.out, "config.json", args)?;
    let mut f = BufWriter::new(File::create(args.out.join("cases.txt"))?);
    write_cases(&cases, &mut f)?;
    f.flush()?;

    let path = args.out.join("dataset.vpsp");
    let (mut writer, done) = if path.exists() && !args.fresh {
        let (w, kept) =
            DatasetWriter::resume(&path).with_context(|| format!("resuming {}", path.display()))?;
        if kept.len() > labelled.len() {
            bail!(
                "{} holds more records than this configuration produces",
                path.display()
            );
        }
        for (i, (p, c)) in kept.iter().zip(&labelled).enumerate() {
            if p.case() != *c {
                bail!(
                    "record {i} of {} does not match this configuration; rerun with --fresh",
                    path.display()
                );
            }
        }
        if !kept.is_empty() {
            log::info!("resuming after {} intact records", kept.len());
        }
        (w, kept.len())
    } else {
        (DatasetWriter::create(&path)?, 0)
    };

    for chunk in labelled[done..].chunks(CHUNK) {
        let pairs = chunk
            .par_iter()
            .map(|c| generate_pair(index[&c.object], *c, kind))
            .collect::<Result<Vec<_>, _>>()?;
        for p in &pairs {
            writer.append(p)?;
        }
    }
    let count = writer.finish()?;

    let mut m = BufWriter::new(File::create(args.out.join("manifest.txt"))?);
    writeln!(m, "format VPSP {FORMAT_VERSION}")?;
    writeln!(m, "records {count}")?;
    writeln!(m, "sampled_cases {}", cases.len())?;
    writeln!(m, "skipped_no_label {skipped}")?;
    writeln!(m, "label {:?}", args.label)?;
    writeln!(m, "sampler {:?}", args.sampler)?;
    writeln!(m, "seed {}", args.sim.seed)?;
    for (i, obj) in args.corpus.objects.iter().enumerate() {
        writeln!(m, "object {i} {obj}")?;
    }
    let mut per_case: BTreeMap<ObjectCase, usize> = BTreeMap::new();
    for c in &labelled {
        *per_case.entry(c.object).or_default() += 1;
    }
    for (o, n) in &per_case {
        writeln!(m, "case {} {} {n}", o.object_id, o.rotation)?;
    }
    for (n, &count) in n_select_histogram(&labelled).iter().enumerate().skip(1) {
        if count > 0 {
            writeln!(m, "n_select {n} {count}")?;
        }
    }
    m.flush()?;
    println!(
        "{count} records ({skipped} cases skipped) in {}",
        path.display()
    );
    Ok(())
}
