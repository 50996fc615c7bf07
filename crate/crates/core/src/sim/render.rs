//! Per-pixel ray casting of a scene.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use super::scene::Scene;
use crate::raster::{BinaryMask, DepthMap, NormalMap, PixelCoord};

/// Nearest intersection along one pixel ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub part: usize,
    pub face: u8,
    /// Camera-frame depth (`z`) of the hit.
    pub depth: f64,
    pub point: Point3<f64>,
    /// Outward face normal, camera frame.
    pub normal_cam: Vector3<f64>,
}

pub fn cast(scene: &Scene, u: f64, v: f64) -> Option<RayHit> {
    let origin = scene.camera.origin();
    let dir = scene.camera.ray(u, v);
    let mut best: Option<RayHit> = None;
    for part in 0..scene.parts.len() {
        let Some(hit) = scene.part_box(part).ray_hit(&origin, &dir) else {
            continue;
        };
        if best.is_some_and(|b| b.depth <= hit.t) {
            continue;
        }
        best = Some(RayHit {
            part,
            face: hit.face,
            depth: hit.t,
            point: origin + dir * hit.t,
            normal_cam: scene.camera.to_camera(&hit.normal),
        });
    }
    best
}

/// Rendered depth, analytic normals and ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub depth: DepthMap,
    pub normals: NormalMap,
    parts: Vec<Option<usize>>,
    links: Vec<Option<usize>>,
    faces: Vec<u8>,
}

impl Observation {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn part_at(&self, p: PixelCoord) -> Option<usize> {
        self.parts[p.index(self.width())]
    }

    pub fn link_at(&self, p: PixelCoord) -> Option<usize> {
        self.links[p.index(self.width())]
    }

    pub fn part_mask(&self, part: usize) -> BinaryMask {
        self.mask_where(&self.parts, part)
    }

    /// Pixels of a link together with every part mounted on it.
    pub fn link_mask(&self, link: usize) -> BinaryMask {
        self.mask_where(&self.links, link)
    }

    pub fn part_masks(&self, scene: &Scene) -> BTreeMap<String, BinaryMask> {
        (0..scene.parts.len())
            .map(|i| (scene.parts[i].id.clone(), self.part_mask(i)))
            .collect()
    }

    /// Ground-truth affordance mask of the scene's target.
    pub fn target_mask(&self, scene: &Scene) -> BinaryMask {
        self.link_mask(scene.target())
    }

    /// True if every pixel within `radius` of `p` shows the same face of the
    /// same part (so `p` is away from silhouettes and creases).
    pub fn is_face_interior(&self, p: PixelCoord, radius: usize) -> bool {
        let (w, h) = (self.width(), self.height());
        if p.x < radius || p.y < radius || p.x + radius >= w || p.y + radius >= h {
            return false;
        }
        let i0 = p.index(w);
        let Some(part) = self.parts[i0] else {
            return false;
        };
        let face = self.faces[i0];
        (p.y - radius..=p.y + radius).all(|y| {
            (p.x - radius..=p.x + radius).all(|x| {
                let i = y * w + x;
                self.parts[i] == Some(part) && self.faces[i] == face
            })
        })
    }

    fn mask_where(&self, labels: &[Option<usize>], id: usize) -> BinaryMask {
        let data = labels.iter().map(|&l| l == Some(id)).collect();
        BinaryMask::new(self.width(), self.height(), data).expect("observation dimensions are valid")
    }
}

pub fn render(scene: &Scene) -> Observation {
    let (w, h) = (scene.camera.width, scene.camera.height);
    let mut depth = vec![0.0; w * h];
    let mut normals = vec![Vector3::zeros(); w * h];
    let mut parts = vec![None; w * h];
    let mut links = vec![None; w * h];
    let mut faces = vec![u8::MAX; w * h];
    for y in 0..h {
        for x in 0..w {
            if let Some(hit) = cast(scene, x as f64, y as f64) {
                let i = y * w + x;
                depth[i] = hit.depth;
                normals[i] = hit.normal_cam.normalize();
                parts[i] = Some(hit.part);
                links[i] = Some(scene.link_of(hit.part));
                faces[i] = hit.face;
            }
        }
    }
    Observation {
        depth: DepthMap::new(w, h, depth).expect("ray depths are finite and positive"),
        normals: NormalMap::new(w, h, normals).expect("face normals have unit length"),
        parts,
        links,
        faces,
    }
}
