//! Manipulation policies evaluated against a scene.
//!
//! Every run follows the same front half: render, predict a mask, gate it
//! against ground truth on the false-positive ratio, keep its largest region,
//! choose a contact and direction, and attach. The policies differ in how
//! the contact is chosen and in how many steps are taken. Every failure is
//! reported in the trace; nothing here returns an error.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::kinematics::{self, StepOptions, StepRecord, DEFAULT_SUBSTEP};
use super::render::{self, Observation};
use super::scene::{JointKind, Scene};
use crate::metrics;
use crate::predictor::MaskPredictor;
use crate::proposer::{self, Fallback, ProposeError, ProposerConfig};
use crate::raster::{BinaryMask, NormalMap, PixelCoord};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[serde(rename = "onestep")]
    OneStep,
    #[serde(rename = "multistep")]
    MultiStep,
    #[serde(rename = "random")]
    RandomPoint,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::OneStep, PolicyKind::MultiStep, PolicyKind::RandomPoint];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::OneStep => "onestep",
            PolicyKind::MultiStep => "multistep",
            PolicyKind::RandomPoint => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown policy {s:?} (expected onestep, multistep or random)"))
    }
}

/// Success thresholds per joint kind: scene units for prismatic, radians for revolute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub prismatic: f64,
    pub revolute: f64,
}

impl Threshold {
    pub fn for_kind(&self, kind: JointKind) -> f64 {
        match kind {
            JointKind::Prismatic => self.prismatic,
            JointKind::Revolute => self.revolute,
        }
    }
}

/// Where the proposer reads normals from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalSource {
    /// Analytic face normals from the renderer.
    #[default]
    Rendered,
    /// Normals estimated from the rendered depth.
    Depth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Per-trial seed; also used as the proposer seed.
    pub seed: u64,
    pub proposer: ProposerConfig,
    pub normal_source: NormalSource,
    pub one_step_length: f64,
    pub one_step_threshold: Threshold,
    pub multi_step_count: usize,
    pub multi_step_length: f64,
    pub multi_step_threshold: Threshold,
    /// Re-aim each step along the previous realized motion.
    pub adaptive: bool,
    pub substep: f64,
    pub detach_angle: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            proposer: ProposerConfig::default(),
            normal_source: NormalSource::Rendered,
            one_step_length: 0.18,
            one_step_threshold: Threshold {
                prismatic: 0.1,
                revolute: 0.1,
            },
            multi_step_count: 7,
            multi_step_length: 0.05,
            multi_step_threshold: Threshold {
                prismatic: 0.3,
                revolute: 0.3,
            },
            adaptive: true,
            substep: DEFAULT_SUBSTEP,
            detach_angle: None,
        }
    }
}

impl PolicyConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn step_options(&self) -> StepOptions {
        StepOptions {
            max_substep: self.substep,
            detach_angle: self.detach_angle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Predictor,
    GatedOut,
    EmptyMask,
    NoProposal,
    Attach,
    Degenerate,
    BelowThreshold,
}

/// Record of one rollout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub policy: PolicyKind,
    pub scene: String,
    pub seed: u64,
    pub joint_kind: JointKind,
    pub fpr_union: Option<f64>,
    pub gated_out: bool,
    pub contact_px: Option<[usize; 2]>,
    pub fallback: Option<Fallback>,
    /// Chosen surface normal, camera frame.
    pub direction: Option<[f64; 3]>,
    pub steps: Vec<StepRecord>,
    pub total_dq: f64,
    pub threshold: f64,
    pub success: bool,
    pub failure: Option<Failure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl PolicyTrace {
    fn new(policy: PolicyKind, scene: &Scene, cfg: &PolicyConfig) -> Self {
        let kind = scene.target_joint().kind;
        let threshold = match policy {
            PolicyKind::MultiStep => cfg.multi_step_threshold.for_kind(kind),
            _ => cfg.one_step_threshold.for_kind(kind),
        };
        Self {
            policy,
            scene: scene.name.clone(),
            seed: cfg.seed,
            joint_kind: kind,
            fpr_union: None,
            gated_out: false,
            contact_px: None,
            fallback: None,
            direction: None,
            steps: Vec::new(),
            total_dq: 0.0,
            threshold,
            success: false,
            failure: None,
            detail: None,
        }
    }

    fn fail(mut self, failure: Failure, detail: impl Into<Option<String>>) -> Self {
        self.success = false;
        self.failure = Some(failure);
        self.detail = detail.into();
        self
    }
}

/// Motion of the surface point that moves it toward the camera: the
/// camera-facing normal itself, expressed in the world frame.
pub fn pull_direction(scene: &Scene, normal_cam: &Vector3<f64>) -> Unit<Vector3<f64>> {
    Unit::new_normalize(scene.camera.to_world(normal_cam))
}

/// Opposite of [`pull_direction`].
pub fn push_direction(scene: &Scene, normal_cam: &Vector3<f64>) -> Unit<Vector3<f64>> {
    Unit::new_normalize(-scene.camera.to_world(normal_cam))
}

struct Prepared {
    obs: Observation,
    mask: BinaryMask,
}

/// Render, predict, gate and keep the largest region.
fn prepare(
    scene: &Scene,
    predictor: &dyn MaskPredictor,
    trace: &mut PolicyTrace,
) -> Result<Prepared, (Failure, Option<String>)> {
    let obs = render::render(scene);
    let gt = obs.target_mask(scene);
    let pred = predictor
        .predict(scene, &obs, trace.seed)
        .map_err(|e| (Failure::Predictor, Some(e.to_string())))?;
    let score = metrics::score_pair(&pred, &gt).map_err(|e| (Failure::Predictor, Some(e.to_string())))?;
    trace.fpr_union = Some(score.fpr_union);
    if !metrics::gate(&score) {
        trace.gated_out = true;
        return Err((Failure::GatedOut, None));
    }
    let mask = metrics::largest_region(&pred);
    if mask.is_blank() {
        return Err((Failure::EmptyMask, None));
    }
    Ok(Prepared { obs, mask })
}

fn normals_for(obs: &Observation, scene: &Scene, source: NormalSource) -> Result<NormalMap, String> {
    match source {
        NormalSource::Rendered => Ok(obs.normals.clone()),
        NormalSource::Depth => crate::normals::normals_from_depth(&obs.depth, &scene.camera.intrinsics)
            .map_err(|e| e.to_string()),
    }
}

/// Contact + direction chosen by the proposer.
fn proposer_contact(
    prep: &Prepared,
    scene: &Scene,
    cfg: &PolicyConfig,
    trace: &mut PolicyTrace,
) -> Result<(PixelCoord, Vector3<f64>), (Failure, Option<String>)> {
    let normals = normals_for(&prep.obs, scene, cfg.normal_source).map_err(|e| (Failure::NoProposal, Some(e)))?;
    let pcfg = ProposerConfig {
        rng_seed: cfg.seed,
        ..cfg.proposer.clone()
    };
    let p = proposer::propose(&normals, &prep.mask, &pcfg).map_err(|e| match e {
        ProposeError::EmptyMask => (Failure::EmptyMask, None),
        other => (Failure::NoProposal, Some(other.to_string())),
    })?;
    trace.fallback = Some(p.used_fallback);
    Ok((p.contact, p.direction))
}

/// Uniform mask pixel and its rendered surface normal.
fn random_contact(prep: &Prepared, cfg: &PolicyConfig) -> Result<(PixelCoord, Vector3<f64>), (Failure, Option<String>)> {
    let pixels: Vec<PixelCoord> = prep.mask.foreground().collect();
    let contact = seed::pick(cfg.seed, &pixels, seed::tag::RANDOM_POINT).ok_or((Failure::EmptyMask, None))?;
    let n = prep
        .obs
        .normals
        .valid_at(contact)
        .ok_or((Failure::NoProposal, Some(format!("no surface at {contact:?}"))))?;
    Ok((contact, n))
}

fn rollout(
    policy: PolicyKind,
    scene: &Scene,
    predictor: &dyn MaskPredictor,
    cfg: &PolicyConfig,
) -> PolicyTrace {
    let mut trace = PolicyTrace::new(policy, scene, cfg);
    let prep = match prepare(scene, predictor, &mut trace) {
        Ok(p) => p,
        Err((f, d)) => return trace.fail(f, d),
    };
    let chosen = match policy {
        PolicyKind::RandomPoint => random_contact(&prep, cfg),
        _ => proposer_contact(&prep, scene, cfg, &mut trace),
    };
    let (contact, normal) = match chosen {
        Ok(c) => c,
        Err((f, d)) => return trace.fail(f, d),
    };
    trace.contact_px = Some([contact.x, contact.y]);
    trace.direction = Some([normal.x, normal.y, normal.z]);

    let mut world = scene.clone();
    let att = match kinematics::attach(&world, contact, &prep.obs.depth, &world.camera.intrinsics) {
        Ok(a) => a,
        Err(e) => return trace.fail(Failure::Attach, Some(e.to_string())),
    };

    let (count, length) = match policy {
        PolicyKind::MultiStep => (cfg.multi_step_count, cfg.multi_step_length),
        _ => (1, cfg.one_step_length),
    };
    let mut dir = pull_direction(&world, &normal);
    let q0 = world.joint(att.link).map_or(0.0, |j| j.q());
    for _ in 0..count {
        let rec = kinematics::step_with(&mut world, &att, &dir, length, cfg.step_options());
        let realized = rec.realized();
        let stop = rec.degenerate || rec.detached;
        trace.steps.push(rec);
        if stop {
            break;
        }
        if cfg.adaptive && realized.norm() > 1e-4 {
            dir = Unit::new_normalize(realized);
        }
    }
    let q1 = world.joint(att.link).map_or(0.0, |j| j.q());
    trace.total_dq = q1 - q0;

    if trace.steps.iter().any(|s| s.degenerate) {
        return trace.fail(Failure::Degenerate, None);
    }
    trace.success = trace.total_dq >= trace.threshold;
    if !trace.success {
        trace.failure = Some(Failure::BelowThreshold);
    }
    trace
}

/// Gate, propose, attach, and pull once by the one-step length.
pub fn run_one_step(scene: &Scene, predictor: &dyn MaskPredictor, cfg: &PolicyConfig) -> PolicyTrace {
    rollout(PolicyKind::OneStep, scene, predictor, cfg)
}

/// Gate, propose, attach, and take the multi-step schedule, re-aiming after
/// each step when `cfg.adaptive` is set.
pub fn run_multi_step(scene: &Scene, predictor: &dyn MaskPredictor, cfg: &PolicyConfig) -> PolicyTrace {
    rollout(PolicyKind::MultiStep, scene, predictor, cfg)
}

/// One-step protocol from a uniformly random mask pixel and its raw normal.
pub fn random_point_policy(scene: &Scene, predictor: &dyn MaskPredictor, cfg: &PolicyConfig) -> PolicyTrace {
    rollout(PolicyKind::RandomPoint, scene, predictor, cfg)
}

pub fn run_policy(
    policy: PolicyKind,
    scene: &Scene,
    predictor: &dyn MaskPredictor,
    cfg: &PolicyConfig,
) -> PolicyTrace {
    rollout(policy, scene, predictor, cfg)
}
