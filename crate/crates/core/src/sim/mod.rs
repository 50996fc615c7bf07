//! Quasi-static articulated-object simulator.

pub mod bench;
pub mod geometry;
pub mod kinematics;
pub mod policy;
pub mod render;
pub mod scene;
pub mod suite;

pub use bench::{run_benchmark, BenchConfig, BenchError, BenchmarkReport, Suite};
pub use geometry::{BoxHit, OrientedBox};
pub use kinematics::{attach, step, step_with, AttachError, Attachment, StepOptions, StepRecord};
pub use policy::{
    random_point_policy, run_multi_step, run_one_step, run_policy, Failure, PolicyConfig, PolicyKind, PolicyTrace,
};
pub use render::{cast, render, Observation, RayHit};
pub use scene::{look_at, Camera, Joint, JointKind, Part, Scene, SceneDoc, SceneError};
