use manipkit_core::normals::CameraIntrinsics;
use manipkit_core::raster::PixelCoord;
use manipkit_core::sim::{self, attach, render, step, step_with, AttachError, Attachment, Scene, StepOptions};
use nalgebra::{Point3, Unit, Vector3};
use proptest::prelude::*;

/// Camera at the origin looking along +z; a panel hinged about a vertical
/// line through `anchor`, and a drawer on the right.
fn bench_scene() -> Scene {
    Scene::from_json_str(
        r#"{
        "name": "kin",
        "target": "door",
        "parts": [
            {"id": "body", "box": {"center": [0, 0, 2.3], "half_extents": [0.8, 0.5, 0.2]}},
            {"id": "door", "box": {"center": [-0.25, 0, 2.09], "half_extents": [0.25, 0.25, 0.01]},
             "joint": {"kind": "revolute", "axis": [0, 1, 0], "anchor": [-0.5, 0, 2.1], "limits": [-3, 3]}},
            {"id": "drawer", "box": {"center": [0.4, 0, 2.05], "half_extents": [0.12, 0.1, 0.05]},
             "joint": {"kind": "prismatic", "axis": [0, 0, -1], "limits": [0, 0.5]}}
        ],
        "camera": {"pose": {"position": [0, 0, 0]}, "fx": 100, "fy": 100, "cx": 40, "cy": 30,
                   "width": 81, "height": 61}
    }"#,
    )
    .unwrap()
}

fn att(scene: &Scene, id: &str, local: [f64; 3]) -> Attachment {
    let part = scene.part_index(id).unwrap();
    Attachment {
        part,
        link: scene.link_of(part),
        local: Point3::from(local),
    }
}

/// Door contact at lever arm `r` from the hinge line, on the hinge plane.
fn door_contact(scene: &Scene, r: f64) -> Attachment {
    att(scene, "door", [-0.5 + r, 0.0, 2.1])
}

/// Reference integration of dq/ds = max(0, d·t(q)) / r for a fixed command
/// `d` with RK4 at step `h`.
fn ode_oracle(r: f64, d: Vector3<f64>, length: f64, h: f64) -> f64 {
    // Tangent of the contact at angle q about +y with lever along +x.
    let t = |q: f64| Vector3::new(-q.sin(), 0.0, -q.cos());
    let f = |q: f64| d.dot(&t(q)).max(0.0) / r;
    let n = (length / h).round() as usize;
    let h = length / n as f64;
    let mut q = 0.0;
    for _ in 0..n {
        let k1 = f(q);
        let k2 = f(q + 0.5 * h * k1);
        let k3 = f(q + 0.5 * h * k2);
        let k4 = f(q + h * k3);
        q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    q
}

#[test]
fn principal_ray_back_projects_to_optical_axis() {
    let k = CameraIntrinsics::new(100.0, 90.0, 40.0, 30.0).unwrap();
    assert_eq!(k.back_project(40.0, 30.0, 1.7), Vector3::new(0.0, 0.0, 1.7));
}

#[test]
fn fronto_parallel_face_renders_flat() {
    let scene = bench_scene();
    let obs = render(&scene);
    let c = PixelCoord::new(50, 30);
    let body = scene.part_index("body").unwrap();
    assert_eq!(obs.part_at(c), Some(body));
    assert!((obs.depth.at(50, 30) - 2.1).abs() < 1e-12);
    assert!((obs.normals.at(50, 30) - Vector3::new(0.0, 0.0, -1.0)).amax() < 1e-12);
    // The door sits in front of the body and hides it.
    let door = scene.part_index("door").unwrap();
    assert_eq!(obs.part_at(PixelCoord::new(28, 30)), Some(door));
    assert!((obs.depth.at(28, 30) - 2.08).abs() < 1e-12);
    assert_eq!(obs.part_at(PixelCoord::new(0, 0)), None);
    assert_eq!(obs.depth.at(0, 0), 0.0);
}

#[test]
fn attachment_follows_rigid_transport() {
    let mut scene = bench_scene();
    let obs = render(&scene);
    let px = PixelCoord::new(59, 30);
    let drawer = scene.part_index("drawer").unwrap();
    assert_eq!(obs.part_at(px), Some(drawer));
    let a = attach(&scene, px, &obs.depth, &scene.camera.intrinsics).unwrap();
    assert_eq!(a.link, scene.link_of(drawer));
    let before = a.world_point(&scene);
    assert!((before.z - 2.0).abs() < 1e-12);
    scene.joint_mut(a.link).unwrap().set_q(0.2);
    let moved = a.world_point(&scene) - before;
    assert!((moved - Vector3::new(0.0, 0.0, -0.2)).amax() < 1e-12);
}

#[test]
fn attaching_off_the_articulation_is_an_error() {
    let scene = bench_scene();
    let obs = render(&scene);
    let k = &scene.camera.intrinsics;
    assert!(matches!(attach(&scene, PixelCoord::new(0, 0), &obs.depth, k), Err(AttachError::InvalidDepth(_))));
    assert!(matches!(attach(&scene, PixelCoord::new(81, 3), &obs.depth, k), Err(AttachError::OutOfImage(_))));
    assert!(matches!(attach(&scene, PixelCoord::new(50, 12), &obs.depth, k), Err(AttachError::FixedPart(_))));
}

#[test]
fn aligned_prismatic_pull_is_exact() {
    let mut scene = bench_scene();
    let a = att(&scene, "drawer", [0.4, 0.0, 2.0]);
    let rec = step(&mut scene, &a, &-Vector3::z_axis(), 0.18);
    assert!((rec.dq - 0.18).abs() <= 1e-12);
    assert!(rec.dq >= 0.1);
    assert!((rec.realized() - Vector3::new(0.0, 0.0, -0.18)).amax() <= 1e-12);
    // Oblique pulls move by the projection.
    let mut scene = bench_scene();
    let d = Unit::new_normalize(Vector3::new(0.6, 0.0, -0.8));
    assert!((step(&mut scene, &a, &d, 0.1).dq - 0.08).abs() <= 1e-12);
}

#[test]
fn fixed_tangential_revolute_pull_matches_ode_oracle() {
    let mut scene = bench_scene();
    let a = door_contact(&scene, 0.5);
    let t0 = -Vector3::z_axis();
    let rec = step(&mut scene, &a, &t0, 0.18);
    let reference = ode_oracle(0.5, t0.into_inner(), 0.18, 1e-5);
    assert!((rec.dq - reference).abs() <= 1e-5, "{} vs {reference}", rec.dq);
    // Exact solution of r dq = cos(q) ds.
    let gd = 2.0 * (0.36f64 / 2.0).tanh().atan();
    assert!((reference - gd).abs() <= 1e-9);

    let err = |h: f64| {
        let mut s = bench_scene();
        let opts = StepOptions { max_substep: h, ..StepOptions::default() };
        (step_with(&mut s, &a, &t0, 0.18, opts).dq - reference).abs()
    };
    let (coarse, fine) = (err(0.02), err(0.01));
    assert!(fine < coarse && fine <= 0.5 * coarse + 1e-12);
}

#[test]
fn perpendicular_or_backward_commands_do_not_move() {
    for d in [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()] {
        let mut scene = bench_scene();
        let a = door_contact(&scene, 0.3);
        let rec = step(&mut scene, &a, &d, 0.18);
        assert_eq!(rec.dq, 0.0);
        assert_eq!(rec.realized(), Vector3::zeros());
    }
}

#[test]
fn contact_on_hinge_line_is_degenerate() {
    let mut scene = bench_scene();
    let a = att(&scene, "door", [-0.5, 0.1, 2.1]);
    let rec = step(&mut scene, &a, &-Vector3::z_axis(), 0.18);
    assert!(rec.degenerate);
    assert_eq!((rec.dq, rec.realized()), (0.0, Vector3::zeros()));
}

#[test]
fn detach_angle_releases_oblique_pulls() {
    let a = door_contact(&bench_scene(), 0.4);
    let oblique = Unit::new_normalize(Vector3::new(1.0, 0.0, -1.0));
    let opts = StepOptions { detach_angle: Some(0.5), ..StepOptions::default() };
    let rec = step_with(&mut bench_scene(), &a, &oblique, 0.1, opts);
    assert!(rec.detached && rec.dq == 0.0);
    assert!(!step(&mut bench_scene(), &a, &oblique, 0.1).detached);
}

#[test]
fn suite_geometry_is_reachable_from_public_api() {
    let scene = sim::suite::drawer_scene("d", 0.3, 0.2, [0.0, -1.0, 0.6], false).build().unwrap();
    assert_eq!(scene.target_joint().kind, sim::JointKind::Prismatic);
}

proptest! {
    #[test]
    fn steps_never_amplify_motion_or_break_limits(
        r in 0.05f64..0.5,
        q0 in -2.5f64..2.5,
        dir in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        length in 0.001f64..0.4,
        prismatic in any::<bool>(),
    ) {
        let v = Vector3::new(dir.0, dir.1, dir.2);
        prop_assume!(v.norm() > 1e-3);
        let d = Unit::new_normalize(v);
        let mut scene = bench_scene();
        let a = if prismatic { att(&scene, "drawer", [0.4, 0.0, 2.0]) } else { door_contact(&scene, r) };
        scene.joint_mut(a.link).unwrap().set_q(q0);
        let start = a.world_point(&scene);
        let rec = step(&mut scene, &a, &d, length);
        let j = scene.joint(a.link).unwrap();
        prop_assert!(rec.realized().norm() <= length + 1e-9);
        prop_assert!(j.limits[0] <= j.q() && j.q() <= j.limits[1]);
        prop_assert!(((a.world_point(&scene) - start) - rec.realized()).amax() < 1e-12);
        prop_assert!(rec.dq >= 0.0);
    }
}
