use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use manipkit_core::metrics::{self, MaskPairScore, MetricsReport};
use manipkit_core::raster;
use serde::Serialize;

use crate::error::{write_output, CliError, CliResult, EXIT_UNMATCHED};

/// Category of masks stored directly in the compared directories.
const ROOT_CATEGORY: &str = "all";

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predicted masks; subdirectories are categories
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Ground-truth masks with matching relative paths
    #[arg(long)]
    pub gt_dir: PathBuf,
    /// Report JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Method name shown in the table
    #[arg(long, default_value = "pred")]
    pub method: String,
    /// Skip unmatched files without failing
    #[arg(long)]
    pub allow_missing: bool,
}

#[derive(Debug, Serialize)]
struct PairOutput {
    name: String,
    category: String,
    #[serde(flatten)]
    score: MaskPairScore,
}

#[derive(Debug, Serialize)]
struct MetricsOutput {
    pairs: Vec<PairOutput>,
    report: MetricsReport,
    missing_gt: Vec<String>,
    missing_pred: Vec<String>,
}

/// Relative paths of all PNG files under `root`, `/`-separated.
fn png_files(root: &Path) -> CliResult<BTreeSet<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeSet<String>) -> CliResult<()> {
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                let rel = path.strip_prefix(root).expect("walked below root");
                let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.insert(parts.join("/"));
            }
        }
        Ok(())
    }
    let mut out = BTreeSet::new();
    walk(root, root, &mut out)?;
    Ok(out)
}

fn category_of(rel: &str) -> String {
    rel.split_once('/').map_or(ROOT_CATEGORY, |(c, _)| c).to_string()
}

pub fn run(args: &MetricsArgs) -> CliResult<()> {
    let pred = png_files(&args.pred_dir)?;
    let gt = png_files(&args.gt_dir)?;
    if pred.is_empty() && gt.is_empty() {
        return Err(CliError::input("both mask directories are empty"));
    }
    let missing_gt: Vec<String> = pred.difference(&gt).cloned().collect();
    let missing_pred: Vec<String> = gt.difference(&pred).cloned().collect();
    for f in &missing_gt {
        eprintln!("unmatched prediction (no ground truth): {f}");
    }
    for f in &missing_pred {
        eprintln!("unmatched ground truth (no prediction): {f}");
    }

    let mut pairs = Vec::new();
    for name in pred.intersection(&gt) {
        let p = raster::load_mask(args.pred_dir.join(name))?;
        let g = raster::load_mask(args.gt_dir.join(name))?;
        pairs.push(PairOutput {
            name: name.clone(),
            category: category_of(name),
            score: metrics::score_pair(&p, &g)?,
        });
    }
    if pairs.is_empty() {
        return Err(CliError::new(EXIT_UNMATCHED, "no file names match between the directories"));
    }
    let scored: Vec<(String, MaskPairScore)> = pairs.iter().map(|p| (p.category.clone(), p.score)).collect();
    let report = metrics::aggregate(&scored)?;
    print!("{}", report.to_table(&args.method));

    let unmatched = missing_gt.len() + missing_pred.len();
    let out = MetricsOutput {
        pairs,
        report,
        missing_gt,
        missing_pred,
    };
    write_output(&args.out, &(serde_json::to_string_pretty(&out).expect("serializable") + "\n"))?;
    if unmatched > 0 && !args.allow_missing {
        return Err(CliError::new(
            EXIT_UNMATCHED,
            format!("{unmatched} unmatched file(s); rerun with --allow-missing to accept"),
        ));
    }
    Ok(())
}
