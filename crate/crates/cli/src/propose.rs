use std::path::{Path, PathBuf};

use clap::Args;
use image::{Luma, RgbImage};
use manipkit_core::normals::{self, CameraIntrinsics};
use manipkit_core::proposer::{self, BoxRule, ProposalRecord, ProposerConfig};
use manipkit_core::raster::{self, DepthMap, NormalMap};
use serde::Serialize;

use crate::error::{write_output, CliError, CliResult};
use crate::overlay;

#[derive(Debug, Args)]
pub struct ProposeArgs {
    /// RGB-encoded normal map (PNG)
    #[arg(long, conflicts_with_all = ["depth", "intrinsics"], required_unless_present = "depth")]
    pub normal_map: Option<PathBuf>,
    /// 16-bit depth PNG with a JSON sidecar
    #[arg(long, requires = "intrinsics")]
    pub depth: Option<PathBuf>,
    /// Camera intrinsics JSON: {"fx", "fy", "cx", "cy"}
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Binary part mask (PNG)
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub filter_value: f64,
    #[arg(long, env = "MANIPKIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Accept the search box only when every pixel in it is valid
    #[arg(long)]
    pub strict_bbox: bool,
    /// Proposal JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Overlay PNG; defaults to the output path with an `.overlay.png` suffix
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ProposalOutput {
    #[serde(flatten)]
    record: ProposalRecord,
    filter_value: f64,
    box_rule: BoxRule,
    width: usize,
    height: usize,
}

fn load_intrinsics(path: &Path) -> CliResult<CameraIntrinsics> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let k: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    k.validate()?;
    Ok(k)
}

fn depth_preview(depth: &DepthMap) -> RgbImage {
    let max = depth.data().iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let gray = image::GrayImage::from_fn(depth.width() as u32, depth.height() as u32, |x, y| {
        let z = depth.at(x as usize, y as usize);
        Luma([if z > 0.0 { (255.0 - 200.0 * z / max) as u8 } else { 0 }])
    });
    image::DynamicImage::ImageLuma8(gray).to_rgb8()
}

pub fn run(args: &ProposeArgs) -> CliResult<()> {
    let (normal_map, base): (NormalMap, RgbImage) = match (&args.normal_map, &args.depth) {
        (Some(path), _) => {
            let n = raster::load_normal_map(path)?;
            let img = raster::encode_normal_map(&n);
            (n, img)
        }
        (None, Some(path)) => {
            let k = load_intrinsics(args.intrinsics.as_deref().expect("clap requires intrinsics with depth"))?;
            let depth = raster::load_depth(path)?;
            (normals::normals_from_depth(&depth, &k)?, depth_preview(&depth))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let mask = raster::load_mask(&args.mask)?;
    mask.ensure_same_dims(normal_map.dims())?;

    let cfg = ProposerConfig {
        filter_value: args.filter_value,
        rng_seed: args.seed,
        box_rule: if args.strict_bbox { BoxRule::AllValid } else { BoxRule::AnyValid },
        ..ProposerConfig::default()
    };
    let proposal = proposer::propose(&normal_map, &mask, &cfg)?;
    let out = ProposalOutput {
        record: proposal.record(args.seed),
        filter_value: cfg.filter_value,
        box_rule: cfg.box_rule,
        width: mask.width(),
        height: mask.height(),
    };
    write_output(&args.out, &(serde_json::to_string_pretty(&out).expect("serializable") + "\n"))?;

    let overlay_path = args.overlay.clone().unwrap_or_else(|| args.out.with_extension("overlay.png"));
    let img = overlay::draw(base, &mask, proposal.contact, &proposal.direction);
    img.save(&overlay_path)
        .map_err(|e| CliError::input(format!("{}: {e}", overlay_path.display())))?;
    println!(
        "contact ({}, {}) direction [{:.4}, {:.4}, {:.4}] via {}",
        proposal.contact.x,
        proposal.contact.y,
        proposal.direction.x,
        proposal.direction.y,
        proposal.direction.z,
        proposal.used_fallback.as_str()
    );
    Ok(())
}
