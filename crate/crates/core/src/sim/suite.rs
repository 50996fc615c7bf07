//! Parametric scene generators for the bundled benchmark suites.
//!
//! World frame is `z` up; objects face `-y` and the camera looks at them
//! from the `-y` side. Every generated scene is 160x120 pixels.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use super::scene::{look_at, BoxDoc, CameraDoc, JointDoc, JointKind, PartDoc, PoseDoc, SceneDoc};

pub const IMAGE_WIDTH: usize = 160;
pub const IMAGE_HEIGHT: usize = 120;
pub const FOCAL: f64 = 160.0;

/// Pinhole camera at `eye` looking at `target`.
pub fn camera(eye: [f64; 3], target: [f64; 3]) -> CameraDoc {
    let pose = look_at(Point3::from(eye), Point3::from(target));
    CameraDoc {
        pose: PoseDoc::from_isometry(&pose),
        fx: FOCAL,
        fy: FOCAL,
        cx: (IMAGE_WIDTH as f64 - 1.0) / 2.0,
        cy: (IMAGE_HEIGHT as f64 - 1.0) / 2.0,
        width: IMAGE_WIDTH,
        height: IMAGE_HEIGHT,
    }
}

fn shape(center: [f64; 3], half: [f64; 3]) -> BoxDoc {
    BoxDoc {
        center,
        half_extents: half,
        rotation_rpy: [0.0; 3],
    }
}

fn fixed(id: &str, center: [f64; 3], half: [f64; 3]) -> PartDoc {
    PartDoc {
        id: id.into(),
        shape: shape(center, half),
        joint: None,
        parent: None,
    }
}

fn jointed(id: &str, center: [f64; 3], half: [f64; 3], joint: JointDoc) -> PartDoc {
    PartDoc {
        joint: Some(joint),
        ..fixed(id, center, half)
    }
}

fn child(id: &str, parent: &str, center: [f64; 3], half: [f64; 3]) -> PartDoc {
    PartDoc {
        parent: Some(parent.into()),
        ..fixed(id, center, half)
    }
}

fn prismatic(axis: [f64; 3], travel: f64) -> JointDoc {
    JointDoc {
        kind: JointKind::Prismatic,
        axis,
        anchor: [0.0; 3],
        limits: [0.0, travel],
        q: 0.0,
    }
}

fn revolute(axis: [f64; 3], anchor: [f64; 3], max: f64) -> JointDoc {
    JointDoc {
        kind: JointKind::Revolute,
        axis,
        anchor,
        limits: [0.0, max],
        q: 0.0,
    }
}

fn scene(name: String, target: &str, parts: Vec<PartDoc>, camera: CameraDoc) -> SceneDoc {
    SceneDoc {
        name: Some(name),
        target: Some(target.into()),
        parts,
        camera,
    }
}

/// Which vertical edge of a door carries the hinge, seen from the front.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HingeSide {
    Left,
    Right,
}

/// A cabinet with one vertical-hinged door.
#[derive(Clone, Debug, PartialEq)]
pub struct DoorParams {
    pub name: String,
    /// Full door width; the hinge-to-centre lever arm is `width / 2`.
    pub width: f64,
    pub height: f64,
    pub thickness: f64,
    pub hinge: HingeSide,
    /// Handle bar near the free edge.
    pub handle: bool,
    pub eye: [f64; 3],
    pub max_angle: f64,
}

impl DoorParams {
    pub fn new(name: impl Into<String>, width: f64) -> Self {
        Self {
            name: name.into(),
            width,
            height: 0.6,
            thickness: 0.02,
            hinge: HingeSide::Right,
            handle: false,
            eye: [0.0, -1.6, 0.45],
            max_angle: 2.5,
        }
    }
}

/// Door panel in front of a fixed body. The hinge pin runs along the front
/// corner of the panel's hinge-side edge, and the door opens toward `-y`.
pub fn door_scene(p: &DoorParams) -> SceneDoc {
    let depth = 0.25;
    let (hw, hh, ht) = (p.width / 2.0, p.height / 2.0, p.thickness / 2.0);
    let zc = 0.05 + hh;
    let yc = -depth - ht;
    let (hinge_x, axis, free_x) = match p.hinge {
        HingeSide::Right => (hw, [0.0, 0.0, 1.0], -hw),
        HingeSide::Left => (-hw, [0.0, 0.0, -1.0], hw),
    };
    let mut parts = vec![
        fixed("body", [0.0, 0.0, zc], [hw + 0.02, depth, hh + 0.05]),
        jointed(
            "door",
            [0.0, yc, zc],
            [hw, ht, hh],
            revolute(axis, [hinge_x, yc - ht, zc], p.max_angle),
        ),
    ];
    if p.handle {
        let hx = free_x - free_x.signum() * 0.05;
        parts.push(child(
            "handle",
            "door",
            [hx, yc - ht - 0.02, zc],
            [0.015, 0.02, 0.12_f64.min(hh * 0.6)],
        ));
    }
    scene(p.name.clone(), "door", parts, camera(p.eye, [0.0, yc, zc]))
}

/// A cabinet with one drawer pulled along `-y`.
pub fn drawer_scene(name: impl Into<String>, width: f64, height: f64, eye: [f64; 3], handle: bool) -> SceneDoc {
    let (bw, bd, bh) = (width / 2.0 + 0.04, 0.25, 0.35);
    let (hw, hh, ht) = (width / 2.0, height / 2.0, 0.02);
    let zc = 2.0 * bh - 0.04 - hh;
    let yc = -bd - ht;
    let mut parts = vec![
        fixed("body", [0.0, 0.0, bh], [bw, bd, bh]),
        jointed("drawer", [0.0, yc, zc], [hw, ht, hh], prismatic([0.0, -1.0, 0.0], 0.4)),
    ];
    if handle {
        parts.push(child("handle", "drawer", [0.0, yc - ht - 0.015, zc], [hw * 0.4, 0.015, 0.015]));
    }
    scene(name.into(), "drawer", parts, camera(eye, [0.0, yc, zc - 0.1]))
}

fn lid_scene(name: String, width: f64, depth: f64, eye: [f64; 3]) -> SceneDoc {
    let (bw, bd, bh, t) = (width / 2.0, depth / 2.0, 0.2, 0.02);
    let parts = vec![
        fixed("body", [0.0, 0.0, bh], [bw, bd, bh]),
        jointed(
            "lid",
            [0.0, 0.0, 2.0 * bh + t],
            [bw, bd, t],
            revolute([-1.0, 0.0, 0.0], [0.0, bd, 2.0 * bh], 1.8),
        ),
    ];
    scene(name, "lid", parts, camera(eye, [0.0, 0.0, 2.0 * bh]))
}

fn oven_scene(name: String, width: f64, height: f64, eye: [f64; 3]) -> SceneDoc {
    let (bw, bd, bh, t) = (width / 2.0 + 0.03, 0.3, height / 2.0 + 0.12, 0.02);
    let (hw, hh) = (width / 2.0, height / 2.0);
    let z0 = 0.06;
    let yc = -bd - t;
    let parts = vec![
        fixed("body", [0.0, 0.0, bh], [bw, bd, bh]),
        fixed("panel", [0.0, -bd - 0.005, 2.0 * bh - 0.06], [bw - 0.02, 0.005, 0.04]),
        jointed(
            "door",
            [0.0, yc, z0 + hh],
            [hw, t, hh],
            revolute([1.0, 0.0, 0.0], [0.0, -bd, z0], 1.5),
        ),
    ];
    scene(name, "door", parts, camera(eye, [0.0, yc, z0 + hh]))
}

fn microwave_scene(name: String, width: f64, height: f64, eye: [f64; 3]) -> SceneDoc {
    let (bd, t) = (0.22, 0.015);
    let panel = 0.12;
    let (hw, hh) = (width / 2.0, height / 2.0);
    let bw = hw + panel / 2.0 + 0.02;
    let zc = 0.03 + hh;
    let x0 = -bw + 0.02;
    let yc = -bd - t;
    let parts = vec![
        fixed("body", [0.0, 0.0, zc], [bw, bd, hh + 0.03]),
        fixed("controls", [bw - 0.02 - panel / 2.0, -bd - 0.005, zc], [panel / 2.0 - 0.01, 0.005, hh]),
        jointed(
            "door",
            [x0 + hw, yc, zc],
            [hw, t, hh],
            revolute([0.0, 0.0, -1.0], [x0, yc - t, zc], 1.9),
        ),
    ];
    scene(name, "door", parts, camera(eye, [0.0, yc, zc]))
}

fn table_scene(name: String, width: f64, drawer_width: f64, eye: [f64; 3]) -> SceneDoc {
    let (tw, td, top) = (width / 2.0, 0.32, 0.72);
    let leg = 0.025;
    let mut parts = vec![fixed("top", [0.0, 0.0, top], [tw, td, 0.025])];
    for (i, (sx, sy)) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)].into_iter().enumerate() {
        parts.push(fixed(
            &format!("leg{i}"),
            [sx * (tw - leg), sy * (td - leg), (top - 0.025) / 2.0],
            [leg, leg, (top - 0.025) / 2.0],
        ));
    }
    let apron_z = top - 0.025 - 0.06;
    parts.push(fixed("apron", [0.0, 0.0, apron_z], [tw - 0.06, td - 0.06, 0.06]));
    let yc = -(td - 0.06) - 0.015;
    parts.push(jointed(
        "drawer",
        [0.0, yc, apron_z],
        [drawer_width / 2.0, 0.015, 0.05],
        prismatic([0.0, -1.0, 0.0], 0.35),
    ));
    scene(name, "drawer", parts, camera(eye, [0.0, yc, apron_z]))
}

/// Categories of the desk suite, each with three variants.
pub const DESK_CATEGORIES: [&str; 6] = ["door", "drawer", "lid", "microwave", "oven", "table"];

/// Six-category suite of prismatic and revolute objects.
pub fn desk_suite() -> BTreeMap<String, Vec<SceneDoc>> {
    let mut suite = BTreeMap::new();
    let name = |cat: &str, i: usize| format!("{cat}_{i}");

    let doors = [
        (0.44, HingeSide::Right, [0.0, -1.6, 0.45]),
        (0.56, HingeSide::Right, [0.35, -1.7, 0.6]),
        (0.36, HingeSide::Left, [-0.2, -1.5, 0.5]),
    ];
    suite.insert(
        "door".to_string(),
        doors
            .iter()
            .enumerate()
            .map(|(i, &(w, hinge, eye))| {
                door_scene(&DoorParams {
                    hinge,
                    eye,
                    handle: i == 1,
                    ..DoorParams::new(name("door", i), w)
                })
            })
            .collect(),
    );

    let drawers = [
        (0.5, 0.16, [0.0, -1.5, 0.9], false),
        (0.4, 0.2, [0.3, -1.4, 1.0], true),
        (0.6, 0.12, [-0.25, -1.6, 0.8], false),
    ];
    suite.insert(
        "drawer".to_string(),
        drawers
            .iter()
            .enumerate()
            .map(|(i, &(w, h, eye, handle))| drawer_scene(name("drawer", i), w, h, eye, handle))
            .collect(),
    );

    let lids = [(0.6, 0.4, [0.0, -1.0, 1.5]), (0.5, 0.5, [0.3, -1.1, 1.4]), (0.7, 0.36, [-0.2, -0.9, 1.6])];
    suite.insert(
        "lid".to_string(),
        lids.iter()
            .enumerate()
            .map(|(i, &(w, d, eye))| lid_scene(name("lid", i), w, d, eye))
            .collect(),
    );

    let ovens = [(0.5, 0.36, [0.0, -1.6, 0.7]), (0.56, 0.4, [0.25, -1.7, 0.8]), (0.44, 0.3, [-0.2, -1.5, 0.6])];
    suite.insert(
        "oven".to_string(),
        ovens
            .iter()
            .enumerate()
            .map(|(i, &(w, h, eye))| oven_scene(name("oven", i), w, h, eye))
            .collect(),
    );

    let microwaves = [(0.4, 0.28, [0.0, -1.3, 0.5]), (0.46, 0.3, [0.2, -1.4, 0.6]), (0.36, 0.26, [-0.15, -1.2, 0.45])];
    suite.insert(
        "microwave".to_string(),
        microwaves
            .iter()
            .enumerate()
            .map(|(i, &(w, h, eye))| microwave_scene(name("microwave", i), w, h, eye))
            .collect(),
    );

    let tables = [(1.0, 0.4, [0.0, -1.6, 1.0]), (1.2, 0.5, [0.3, -1.8, 1.1]), (0.9, 0.36, [-0.2, -1.5, 0.9])];
    suite.insert(
        "table".to_string(),
        tables
            .iter()
            .enumerate()
            .map(|(i, &(w, dw, eye))| table_scene(name("table", i), w, dw, eye))
            .collect(),
    );
    suite
}

/// Doors seen from their hinge side, so the hinge-side edge of the panel
/// is in view, each with a handle near the free edge.
pub fn hinge_door_suite() -> BTreeMap<String, Vec<SceneDoc>> {
    let variants = [
        (0.4, 0.08, [-0.9, -1.3, 0.6]),
        (0.5, 0.09, [-1.0, -1.4, 0.7]),
        (0.36, 0.08, [-0.8, -1.2, 0.5]),
        (0.46, 0.1, [-1.1, -1.3, 0.65]),
    ];
    let doors = variants
        .iter()
        .enumerate()
        .map(|(i, &(w, t, eye))| {
            door_scene(&DoorParams {
                thickness: t,
                hinge: HingeSide::Left,
                handle: true,
                eye,
                ..DoorParams::new(format!("hinge_door_{i}"), w)
            })
        })
        .collect();
    BTreeMap::from([("door".to_string(), doors)])
}

/// Write `<dir>/<category>/<name>.json` for every scene.
pub fn write_suite(dir: impl AsRef<Path>, suite: &BTreeMap<String, Vec<SceneDoc>>) -> std::io::Result<()> {
    for (category, scenes) in suite {
        let sub = dir.as_ref().join(category);
        fs::create_dir_all(&sub)?;
        for doc in scenes {
            let name = doc.name.as_deref().unwrap_or(category);
            fs::write(sub.join(format!("{name}.json")), doc.to_json_pretty() + "\n")?;
        }
    }
    Ok(())
}
