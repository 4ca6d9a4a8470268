//! Math foundation shared by every simsync crate.
//!
//! Conventions: right-handed frames, radians everywhere, Euler angles as roll/pitch/yaw applied
//! extrinsically about X then Y then Z. Quaternions that represent rotations are kept
//! normalized with `w >= 0`.

mod color;
mod geometry;
mod interp;
mod pose;
mod quaternion;
mod vector;

pub use color::Color;
pub use geometry::{
    frustum_contains, frustum_from_camera, ray_plane_intersect, Frustum, Plane, Ray,
    FRUSTUM_EPSILON, PARALLEL_EPSILON,
};
pub use interp::{lerp, lerp_angle, wrap_angle, wrap_angle_delta};
pub use pose::{pose_compose, Pose, Twist};
pub use quaternion::{
    euler_from_quat, quat_from_euler, quat_rotate, EulerRPY, Quaternion, NORM_TOLERANCE,
};
pub use vector::{Point, Vector3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MathError {
    #[error("direction vector has zero length")]
    ZeroDirection,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid frustum: {0}")]
    InvalidFrustum(&'static str),
}
