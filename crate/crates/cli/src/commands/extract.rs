use std::path::PathBuf;

use clap::Args;

use artdetect_core::dataset::{build_feature_table, scan};
use artdetect_core::eval::write_feature_histograms;

use crate::config::FileConfig;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Dataset root: one subdirectory per class
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Output feature-cache CSV (sidecar metadata written next to it)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed recorded in the cache metadata
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bin count for the per-class feature histograms
    #[arg(long)]
    pub histogram_bins: Option<usize>,
    /// Skip writing per-class feature histograms
    #[arg(long)]
    pub no_histograms: bool,
    #[command(flatten)]
    pub extractor: ExtractorFlags,
}

pub type ExtractorFlags = super::ExtractorArgs;

pub fn run(args: ExtractArgs, cfg: &FileConfig) -> CliResult<()> {
    let extractor = args.extractor.build(cfg)?;
    let seed = cfg.resolve(args.seed, "seed", 0u64)?;
    let root = super::required(cfg, args.root, "root")?;
    let out = super::required(cfg, args.out, "out")?;
    let manifest = scan(&root).map_err(CliError::data)?;
    for warning in &manifest.warnings {
        eprintln!("warning: {warning}");
    }
    let outcome = build_feature_table(&manifest, &extractor, seed, &out).map_err(CliError::data)?;
    for (path, reason) in &outcome.failures {
        eprintln!("warning: failed {}: {reason}", path.display());
    }
    println!("{} extracted, {} cached", outcome.extracted, outcome.cached);
    println!("feature cache: {}", out.display());

    if !args.no_histograms {
        let bins = cfg.resolve(args.histogram_bins, "histogram-bins", 32usize)?;
        let mut dir = out.clone();
        dir.set_extension("histograms");
        write_feature_histograms(&outcome.table, &dir, bins).map_err(CliError::data)?;
        println!("feature histograms: {}", dir.display());
    }
    Ok(())
}
