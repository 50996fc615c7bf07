//! Articulated box scenes and their JSON form.

use std::fs;
use std::path::Path;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::OrientedBox;
use crate::normals::CameraIntrinsics;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SceneError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        SceneError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// JSON path of the offending field.
    pub fn field_path(&self) -> Option<&str> {
        match self {
            SceneError::Parse { path, .. } | SceneError::Invalid { path, .. } => Some(path),
            SceneError::Io { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Prismatic,
    Revolute,
}

/// One-degree-of-freedom joint. Prismatic `q` is in scene units, revolute in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
    /// Point on the hinge line; unused for prismatic joints.
    pub anchor: Point3<f64>,
    pub limits: [f64; 2],
    q: f64,
}

impl Joint {
    pub fn new(
        kind: JointKind,
        axis: Unit<Vector3<f64>>,
        anchor: Point3<f64>,
        limits: [f64; 2],
        q: f64,
    ) -> Result<Self, String> {
        if !(limits[0].is_finite() && limits[1].is_finite() && limits[0] <= limits[1]) {
            return Err(format!("limits must satisfy min <= max, got {limits:?}"));
        }
        if !(limits[0]..=limits[1]).contains(&q) {
            return Err(format!("q = {q} outside limits {limits:?}"));
        }
        Ok(Self {
            kind,
            axis,
            anchor,
            limits,
            q,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }

    /// Set `q`, clamped to the limits. Returns the stored value.
    pub fn set_q(&mut self, q: f64) -> f64 {
        self.q = self.clamp(q);
        self.q
    }

    /// Rigid motion taking the `q = 0` geometry to configuration `q`.
    pub fn transform_at(&self, q: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Prismatic => Isometry3::from_parts(
                Translation3::from(self.axis.into_inner() * q),
                UnitQuaternion::identity(),
            ),
            JointKind::Revolute => {
                let rot = UnitQuaternion::from_axis_angle(&self.axis, q);
                let a = self.anchor.coords;
                Isometry3::from_parts(Translation3::from(a - rot * a), rot)
            }
        }
    }

    pub fn transform(&self) -> Isometry3<f64> {
        self.transform_at(self.q)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub id: String,
    /// Geometry at `q = 0`, world frame.
    pub shape: OrientedBox,
    pub joint: Option<Joint>,
    /// Index of the part this one is rigidly mounted on (handles, knobs).
    pub parent: Option<usize>,
}

/// Camera pose (`world_from_camera`) and pinhole model.
///
/// Camera frame: `x` right, `y` down, `z` along the optical axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub pose: Isometry3<f64>,
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn origin(&self) -> Point3<f64> {
        self.pose * Point3::origin()
    }

    /// World-frame ray through pixel `(u, v)`, scaled so the camera-frame
    /// `z` component is 1 (the ray parameter equals depth).
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        self.pose.rotation * self.intrinsics.ray(u, v)
    }

    pub fn to_camera(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.pose.rotation.inverse() * v
    }

    pub fn to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.pose.rotation * v
    }
}

/// Camera pose looking from `eye` toward `target`, world `+z` up.
pub fn look_at(eye: Point3<f64>, target: Point3<f64>) -> Isometry3<f64> {
    let forward = (target - eye).normalize();
    let up = Vector3::z();
    let right = forward.cross(&up).normalize();
    let down = forward.cross(&right);
    let m = nalgebra::Matrix3::from_columns(&[right, down, forward]);
    let rot = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m));
    Isometry3::from_parts(Translation3::from(eye.coords), rot)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub parts: Vec<Part>,
    pub camera: Camera,
    target: usize,
}

impl Scene {
    /// Index of the articulated part manipulated in this scene.
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn target_id(&self) -> &str {
        &self.parts[self.target].id
    }

    /// The part whose joint moves `part` (itself, or its parent).
    pub fn link_of(&self, part: usize) -> usize {
        self.parts[part].parent.unwrap_or(part)
    }

    pub fn joint(&self, link: usize) -> Option<&Joint> {
        self.parts[link].joint.as_ref()
    }

    pub fn joint_mut(&mut self, link: usize) -> Option<&mut Joint> {
        self.parts[link].joint.as_mut()
    }

    pub fn target_joint(&self) -> &Joint {
        self.parts[self.target]
            .joint
            .as_ref()
            .expect("target part is articulated")
    }

    /// Current world transform of a link (identity for fixed parts).
    pub fn link_transform(&self, link: usize) -> Isometry3<f64> {
        self.parts[link]
            .joint
            .as_ref()
            .map_or_else(Isometry3::identity, Joint::transform)
    }

    /// Current world geometry of a part.
    pub fn part_box(&self, part: usize) -> OrientedBox {
        let t = self.link_transform(self.link_of(part));
        self.parts[part].shape.transformed(&t)
    }

    pub fn part_index(&self, id: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.id == id)
    }

    pub fn from_json_str(text: &str) -> Result<Scene, SceneError> {
        SceneDoc::from_json_str(text)?.build()
    }

    /// Load a scene; its name defaults to the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut doc = SceneDoc::from_json_str(&text)?;
        if doc.name.is_none() {
            doc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        doc.build()
    }
}

/// JSON scene document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Id of the part to manipulate; defaults to the first articulated part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub parts: Vec<PartDoc>,
    pub camera: CameraDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDoc {
    pub id: String,
    #[serde(rename = "box")]
    pub shape: BoxDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    /// Roll, pitch, yaw in radians; rotation = Rz(yaw) * Ry(pitch) * Rx(roll).
    #[serde(default)]
    pub rotation_rpy: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default)]
    pub anchor: [f64; 3],
    pub limits: [f64; 2],
    #[serde(default)]
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDoc {
    pub position: [f64; 3],
    #[serde(default)]
    pub rotation_rpy: [f64; 3],
}

impl PoseDoc {
    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let (r, p, y) = iso.rotation.euler_angles();
        let t = iso.translation.vector;
        PoseDoc {
            position: [t.x, t.y, t.z],
            rotation_rpy: [r, p, y],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDoc {
    pub pose: PoseDoc,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

fn finite3(v: &[f64; 3], path: &str) -> Result<Vector3<f64>, SceneError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(Vector3::new(v[0], v[1], v[2]))
    } else {
        Err(SceneError::invalid(path, "components must be finite"))
    }
}

fn rotation(rpy: &[f64; 3], path: &str) -> Result<UnitQuaternion<f64>, SceneError> {
    let v = finite3(rpy, path)?;
    Ok(UnitQuaternion::from_euler_angles(v.x, v.y, v.z))
}

impl SceneDoc {
    pub fn from_json_str(text: &str) -> Result<SceneDoc, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| SceneError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene documents always serialize")
    }

    /// Validate and convert into a [`Scene`].
    pub fn build(&self) -> Result<Scene, SceneError> {
        let mut parts = Vec::with_capacity(self.parts.len());
        for (i, p) in self.parts.iter().enumerate() {
            let base = format!("parts[{i}]");
            if p.id.is_empty() {
                return Err(SceneError::invalid(format!("{base}.id"), "id must not be empty"));
            }
            if self.parts[..i].iter().any(|q| q.id == p.id) {
                return Err(SceneError::invalid(
                    format!("{base}.id"),
                    format!("duplicate part id {:?}", p.id),
                ));
            }
            let center = finite3(&p.shape.center, &format!("{base}.box.center"))?;
            let half = finite3(&p.shape.half_extents, &format!("{base}.box.half_extents"))?;
            if half.iter().any(|&h| h <= 0.0) {
                return Err(SceneError::invalid(
                    format!("{base}.box.half_extents"),
                    "half extents must be > 0",
                ));
            }
            let shape = OrientedBox {
                center: Point3::from(center),
                half_extents: half,
                rotation: rotation(&p.shape.rotation_rpy, &format!("{base}.box.rotation_rpy"))?,
            };
            let joint = match &p.joint {
                None => None,
                Some(j) => {
                    let axis = finite3(&j.axis, &format!("{base}.joint.axis"))?;
                    if (axis.norm() - 1.0).abs() > 1e-6 {
                        return Err(SceneError::invalid(
                            format!("{base}.joint.axis"),
                            format!("axis must have unit length, got {}", axis.norm()),
                        ));
                    }
                    let anchor = finite3(&j.anchor, &format!("{base}.joint.anchor"))?;
                    let joint = Joint::new(
                        j.kind,
                        Unit::new_normalize(axis),
                        Point3::from(anchor),
                        j.limits,
                        j.q,
                    )
                    .map_err(|m| SceneError::invalid(format!("{base}.joint"), m))?;
                    Some(joint)
                }
            };
            let parent = match &p.parent {
                None => None,
                Some(pid) => {
                    let path = format!("{base}.parent");
                    let idx = self
                        .parts
                        .iter()
                        .position(|q| &q.id == pid)
                        .ok_or_else(|| SceneError::invalid(&path, format!("unknown part {pid:?}")))?;
                    if idx == i || self.parts[idx].parent.is_some() {
                        return Err(SceneError::invalid(
                            &path,
                            "parent must be a different part without a parent of its own",
                        ));
                    }
                    if joint.is_some() {
                        return Err(SceneError::invalid(
                            format!("{base}.joint"),
                            "a part mounted on a parent cannot have its own joint",
                        ));
                    }
                    Some(idx)
                }
            };
            parts.push(Part {
                id: p.id.clone(),
                shape,
                joint,
                parent,
            });
        }

        let c = &self.camera;
        let intrinsics = CameraIntrinsics::new(c.fx, c.fy, c.cx, c.cy)
            .map_err(|e| SceneError::invalid("camera", e.to_string()))?;
        if c.width == 0 || c.height == 0 {
            return Err(SceneError::invalid("camera.width", "image size must be at least 1x1"));
        }
        let position = finite3(&c.pose.position, "camera.pose.position")?;
        let camera = Camera {
            pose: Isometry3::from_parts(
                Translation3::from(position),
                rotation(&c.pose.rotation_rpy, "camera.pose.rotation_rpy")?,
            ),
            intrinsics,
            width: c.width,
            height: c.height,
        };

        let target = match &self.target {
            Some(id) => parts
                .iter()
                .position(|p| &p.id == id)
                .ok_or_else(|| SceneError::invalid("target", format!("unknown part {id:?}")))?,
            None => parts
                .iter()
                .position(|p| p.joint.is_some())
                .ok_or_else(|| SceneError::invalid("parts", "scene needs at least one articulated part"))?,
        };
        if parts[target].joint.is_none() {
            return Err(SceneError::invalid("target", "target part has no joint"));
        }

        let scene = Scene {
            name: self.name.clone().unwrap_or_else(|| "scene".to_string()),
            parts,
            camera,
            target,
        };
        let obs = super::render::render(&scene);
        if obs.link_mask(target).is_blank() {
            return Err(SceneError::invalid("camera", "target part is not visible"));
        }
        Ok(scene)
    }
}
