use std::path::PathBuf;

use clap::{Args, ValueEnum};
use manipkit_core::predictor::PredictorSpec;
use manipkit_core::raster;
use manipkit_core::sim::policy::NormalSource;
use manipkit_core::sim::{self, PolicyConfig, PolicyKind, PolicyTrace, Scene};

use crate::error::{write_output, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Onestep,
    Multistep,
    Random,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Onestep => PolicyKind::OneStep,
            PolicyArg::Multistep => PolicyKind::MultiStep,
            PolicyArg::Random => PolicyKind::RandomPoint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalsArg {
    Rendered,
    Depth,
}

/// Options shared by `simulate` and `bench`.
#[derive(Debug, Args)]
pub struct PolicyOptions {
    /// `oracle`, `noisy:dilate=N,erode=N,flip=P,seed=S` or `file:<dir>`
    #[arg(long, default_value = "oracle", value_parser = parse_predictor)]
    pub predictor: PredictorSpec,
    #[arg(long, env = "MANIPKIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Keep the multi-step pull direction fixed instead of re-aiming it
    #[arg(long)]
    pub no_adapt: bool,
    /// Normals fed to the proposer
    #[arg(long, value_enum, default_value_t = NormalsArg::Rendered)]
    pub normals: NormalsArg,
}

impl PolicyOptions {
    pub fn config(&self) -> PolicyConfig {
        PolicyConfig {
            seed: self.seed,
            adaptive: !self.no_adapt,
            normal_source: match self.normals {
                NormalsArg::Rendered => NormalSource::Rendered,
                NormalsArg::Depth => NormalSource::Depth,
            },
            ..PolicyConfig::default()
        }
    }
}

pub fn parse_predictor(s: &str) -> Result<PredictorSpec, String> {
    s.parse().map_err(|e: manipkit_core::predictor::PredictError| e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene JSON
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub options: PolicyOptions,
    /// Trace JSON; printed to stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a normal-map PNG of the scene before and after every step
    #[arg(long)]
    pub dump_frames: Option<PathBuf>,
}

pub fn load_scene(path: &std::path::Path) -> CliResult<Scene> {
    Scene::load(path).map_err(|e| match e.field_path() {
        Some(field) => CliError::input(format!("invalid scene {}: at `{field}`: {e}", path.display())),
        None => CliError::input(format!("invalid scene {}: {e}", path.display())),
    })
}

fn dump_frames(scene: &Scene, trace: &PolicyTrace, dir: &std::path::Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let mut world = scene.clone();
    let link = world.target();
    let save = |world: &Scene, k: usize| -> CliResult<()> {
        let obs = sim::render(world);
        raster::save_normal_map(&obs.normals, dir.join(format!("frame_{k:03}.png")))?;
        Ok(())
    };
    save(&world, 0)?;
    for (k, step) in trace.steps.iter().enumerate() {
        if let Some(j) = world.joint_mut(link) {
            let q = j.q() + step.dq;
            j.set_q(q);
        }
        save(&world, k + 1)?;
    }
    Ok(())
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let scene = load_scene(&args.scene)?;
    let predictor = args.options.predictor.build();
    let trace = sim::run_policy(args.policy.into(), &scene, predictor.as_ref(), &args.options.config());
    let json = serde_json::to_string_pretty(&trace).expect("serializable") + "\n";
    match &args.out {
        Some(path) => {
            write_output(path, &json)?;
            eprintln!(
                "{} on {}: success={} dq={:.4}{}",
                trace.policy,
                trace.scene,
                trace.success,
                trace.total_dq,
                trace.failure.map_or(String::new(), |f| format!(" failure={f:?}"))
            );
        }
        None => print!("{json}"),
    }
    if let Some(dir) = &args.dump_frames {
        dump_frames(&scene, &trace, dir)?;
    }
    Ok(())
}
