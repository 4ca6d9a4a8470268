use serde::{Deserialize, Serialize};

use crate::quaternion::Quaternion;
use crate::vector::Vector3;

/// Position (m) and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3,
    pub orientation: Quaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vector3::ZERO,
        orientation: Quaternion::IDENTITY,
    };

    pub const fn new(position: Vector3, orientation: Quaternion) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_position(position: Vector3) -> Self {
        Self::new(position, Quaternion::IDENTITY)
    }

    /// `child` expressed in this pose's frame, mapped to the parent frame.
    pub fn compose(&self, child: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation.rotate(&child.position),
            orientation: (self.orientation * child.orientation)
                .try_normalize()
                .unwrap_or(Quaternion::IDENTITY),
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.conjugate();
        Pose {
            position: -inv.rotate(&self.position),
            orientation: inv.canonical(),
        }
    }

    /// Maps a point from this pose's local frame to the parent frame.
    pub fn transform_point(&self, p: &Vector3) -> Vector3 {
        self.position + self.orientation.rotate(p)
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: &Vector3) -> Vector3 {
        self.orientation.conjugate().rotate(&(*p - self.position))
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.orientation.is_finite()
    }
}

/// Free-function form of [`Pose::compose`].
pub fn pose_compose(parent: &Pose, child: &Pose) -> Pose {
    parent.compose(child)
}

/// Linear (m/s) and angular (rad/s) velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vector3,
    pub angular: Vector3,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        linear: Vector3::ZERO,
        angular: Vector3::ZERO,
    };

    pub const fn new(linear: Vector3, angular: Vector3) -> Self {
        Self { linear, angular }
    }

    pub fn is_zero(&self) -> bool {
        *self == Twist::ZERO
    }

    pub fn is_finite(&self) -> bool {
        self.linear.is_finite() && self.angular.is_finite()
    }

    /// Advances `pose` by `dt` seconds, treating both velocities as world-frame.
    pub fn integrate(&self, pose: &Pose, dt: f64) -> Pose {
        let delta = Quaternion::from_rotation_vector(&(self.angular * dt));
        Pose {
            position: pose.position + self.linear * dt,
            orientation: (delta * pose.orientation)
                .try_normalize()
                .unwrap_or(pose.orientation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EulerRPY;

    #[test]
    fn identity_is_neutral() {
        let p = Pose::new(
            Vector3::new(1.0, -2.0, 0.5),
            Quaternion::from_euler(&EulerRPY::new(0.1, 0.2, 0.3)),
        );
        assert_eq!(Pose::IDENTITY.compose(&p).position, p.position);
        assert!(Pose::IDENTITY.compose(&p).orientation.same_rotation(&p.orientation, 1e-15));
        assert_eq!(p.compose(&Pose::IDENTITY).position, p.position);
    }

    #[test]
    fn translations_sum() {
        let a = Pose::from_position(Vector3::new(1.0, 2.0, 3.0));
        let b = Pose::from_position(Vector3::new(-4.0, 0.5, 1.0));
        assert_eq!(a.compose(&b).position, Vector3::new(-3.0, 2.5, 4.0));
    }

    #[test]
    fn inverse_round_trip() {
        let p = Pose::new(
            Vector3::new(3.0, 1.0, -2.0),
            Quaternion::from_euler(&EulerRPY::new(-0.5, 1.0, 2.5)),
        );
        let id = p.compose(&p.inverse());
        assert!(id.position.norm() < 1e-12);
        assert!(id.orientation.same_rotation(&Quaternion::IDENTITY, 1e-12));
        let q = Vector3::new(0.3, 0.3, 9.0);
        let back = p.inverse_transform_point(&p.transform_point(&q));
        assert!((back - q).norm() < 1e-12);
    }

    #[test]
    fn integrate_linear() {
        let t = Twist::new(Vector3::new(1.0, 0.0, 0.0), Vector3::ZERO);
        let p = t.integrate(&Pose::IDENTITY, 0.5);
        assert_eq!(p.position, Vector3::new(0.5, 0.0, 0.0));
        assert_eq!(p.orientation, Quaternion::IDENTITY);
    }
}
