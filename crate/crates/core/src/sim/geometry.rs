use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector3};

/// Oriented cuboid in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Point3<f64>,
    pub half_extents: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

/// Ray-box intersection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxHit {
    /// Ray parameter of the entry point.
    pub t: f64,
    /// Outward normal of the entered face, world frame.
    pub normal: Vector3<f64>,
    /// Entered face: `2 * axis + (1 if the positive side)`.
    pub face: u8,
}

impl OrientedBox {
    pub fn transformed(&self, iso: &Isometry3<f64>) -> OrientedBox {
        OrientedBox {
            center: iso * self.center,
            half_extents: self.half_extents,
            rotation: iso.rotation * self.rotation,
        }
    }

    /// Whether `p` lies inside or on the box, with slack `eps`.
    pub fn contains(&self, p: &Point3<f64>, eps: f64) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i] + eps)
    }

    /// Slab test. Rays starting inside the box do not hit it.
    pub fn ray_hit(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<BoxHit> {
        let inv = self.rotation.inverse();
        let o = inv * (origin - self.center);
        let d = inv * dir;
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        let mut entry = (0usize, 0.0f64);
        for i in 0..3 {
            let h = self.half_extents[i];
            if d[i].abs() < 1e-15 {
                if o[i].abs() > h {
                    return None;
                }
                continue;
            }
            let t1 = (-h - o[i]) / d[i];
            let t2 = (h - o[i]) / d[i];
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            if lo > t_near {
                t_near = lo;
                entry = (i, -d[i].signum());
            }
            t_far = t_far.min(hi);
            if t_near > t_far {
                return None;
            }
        }
        if t_near <= 0.0 || !t_near.is_finite() {
            return None;
        }
        let (axis, sign) = entry;
        let mut local_n = Vector3::zeros();
        local_n[axis] = sign;
        Some(BoxHit {
            t: t_near,
            normal: self.rotation * local_n,
            face: 2 * axis as u8 + u8::from(sign > 0.0),
        })
    }
}
