//! Suction attachment and quasi-static constrained motion.
//!
//! The gripper tip is glued to a material point of the part. A commanded
//! displacement is projected onto the only motion the joint allows at that
//! point (its tangent); pushing against the tangent produces no motion.

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::render;
use super::scene::{Joint, JointKind, Scene};
use crate::normals::CameraIntrinsics;
use crate::raster::{DepthMap, PixelCoord};

/// Largest integration substep, in scene units of commanded travel.
pub const DEFAULT_SUBSTEP: f64 = 0.005;

/// Contacts closer than this to a hinge line cannot be moved.
pub const MIN_LEVER_ARM: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttachError {
    #[error("contact pixel {0:?} is outside the image")]
    OutOfImage(PixelCoord),
    #[error("no valid depth at contact pixel {0:?}")]
    InvalidDepth(PixelCoord),
    #[error("contact pixel {0:?} does not hit any part")]
    NoPart(PixelCoord),
    #[error("contact lies on fixed part {0:?}")]
    FixedPart(String),
}

/// Gripper bound to a material point of an articulated link.
#[derive(Clone, Debug, PartialEq)]
pub struct Attachment {
    pub part: usize,
    pub link: usize,
    /// Attached point expressed in the link's `q = 0` configuration.
    pub local: Point3<f64>,
}

impl Attachment {
    pub fn world_point(&self, scene: &Scene) -> Point3<f64> {
        scene.link_transform(self.link) * self.local
    }
}

/// Back-project `contact` with `depth` and bind it to the part it lies on.
pub fn attach(
    scene: &Scene,
    contact: PixelCoord,
    depth: &DepthMap,
    k: &CameraIntrinsics,
) -> Result<Attachment, AttachError> {
    if contact.x >= depth.width() || contact.y >= depth.height() {
        return Err(AttachError::OutOfImage(contact));
    }
    let z = depth.at(contact.x, contact.y);
    if z <= 0.0 {
        return Err(AttachError::InvalidDepth(contact));
    }
    let hit = render::cast(scene, contact.x as f64, contact.y as f64)
        .ok_or(AttachError::NoPart(contact))?;
    let link = scene.link_of(hit.part);
    if scene.joint(link).is_none() {
        return Err(AttachError::FixedPart(scene.parts[hit.part].id.clone()));
    }
    let p_cam = k.back_project(contact.x as f64, contact.y as f64, z);
    let p_world = scene.camera.pose * Point3::from(p_cam);
    Ok(Attachment {
        part: hit.part,
        link,
        local: scene.link_transform(link).inverse() * p_world,
    })
}

/// Outcome of one commanded motion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub commanded_dir: [f64; 3],
    pub commanded_len: f64,
    pub realized_disp: [f64; 3],
    pub dq: f64,
    /// Contact on the hinge line; nothing can move.
    #[serde(default)]
    pub degenerate: bool,
    /// Gripper let go because the command deviated too far from the tangent.
    #[serde(default)]
    pub detached: bool,
}

impl StepRecord {
    pub fn realized(&self) -> Vector3<f64> {
        Vector3::from(self.realized_disp)
    }
}

/// Feasible unit motion direction of `local` at configuration `q`, and the
/// joint rate per unit of travel along it.
fn tangent(joint: &Joint, local: &Point3<f64>, q: f64) -> Option<(Vector3<f64>, f64)> {
    match joint.kind {
        JointKind::Prismatic => Some((joint.axis.into_inner(), 1.0)),
        JointKind::Revolute => {
            let p = joint.transform_at(q) * local;
            let a = joint.axis.into_inner();
            let r = p - joint.anchor;
            let r_perp = r - a * a.dot(&r);
            let radius = r_perp.norm();
            (radius >= MIN_LEVER_ARM).then(|| (a.cross(&r_perp) / radius, 1.0 / radius))
        }
    }
}

/// Options for [`step_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub max_substep: f64,
    /// Detach when the angle between command and tangent exceeds this.
    pub detach_angle: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            max_substep: DEFAULT_SUBSTEP,
            detach_angle: None,
        }
    }
}

pub fn step(scene: &mut Scene, att: &Attachment, dir: &Unit<Vector3<f64>>, length: f64) -> StepRecord {
    step_with(scene, att, dir, length, StepOptions::default())
}

/// Move the attached point by `length` along `dir`, projected onto the joint
/// tangent. Revolute joints integrate in substeps of at most
/// `opts.max_substep` (midpoint rule).
pub fn step_with(
    scene: &mut Scene,
    att: &Attachment,
    dir: &Unit<Vector3<f64>>,
    length: f64,
    opts: StepOptions,
) -> StepRecord {
    let joint = scene
        .joint(att.link)
        .expect("attachments are always on articulated links")
        .clone();
    let start = joint.transform() * att.local;
    let mut record = StepRecord {
        commanded_dir: [dir.x, dir.y, dir.z],
        commanded_len: length,
        realized_disp: [0.0; 3],
        dq: 0.0,
        degenerate: false,
        detached: false,
    };
    if !(length > 0.0) {
        return record;
    }
    if tangent(&joint, &att.local, joint.q()).is_none() {
        record.degenerate = true;
        return record;
    }

    // Joint velocity per unit of commanded travel.
    let rate = |q: f64| -> (f64, f64) {
        tangent(&joint, &att.local, q).map_or((0.0, 0.0), |(t, per_unit)| {
            let along = dir.dot(&t);
            (along.max(0.0) * per_unit, along)
        })
    };

    let n = (length / opts.max_substep - 1e-9).ceil().max(1.0) as usize;
    let h = length / n as f64;
    let q0 = joint.q();
    let mut q = q0;
    let detaches = |along: f64| opts.detach_angle.is_some_and(|limit| along.clamp(-1.0, 1.0).acos() > limit);
    if joint.kind == JointKind::Prismatic {
        let (k, along) = rate(q);
        record.detached = detaches(along);
        if !record.detached {
            q = joint.clamp(q + length * k);
        }
    }
    let substeps = if joint.kind == JointKind::Revolute { n } else { 0 };
    for _ in 0..substeps {
        let (k1, along) = rate(q);
        if detaches(along) {
            record.detached = true;
            break;
        }
        let mid = joint.clamp(q + 0.5 * h * k1);
        let (k2, _) = rate(mid);
        q = joint.clamp(q + h * k2);
    }

    let joint_mut = scene.joint_mut(att.link).expect("link is articulated");
    joint_mut.set_q(q);
    let end = joint_mut.transform() * att.local;
    let disp = end - start;
    record.realized_disp = [disp.x, disp.y, disp.z];
    record.dq = q - q0;
    record
}
