use std::f64::consts::FRAC_PI_2;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::interp::wrap_angle;
use crate::vector::Vector3;

/// Tolerance on `|q|` for a quaternion to count as a rotation.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Rotation quaternion stored as `(x, y, z, w)`.
///
/// Constructors that promise a rotation return a normalized quaternion with `w >= 0`.
/// [`Quaternion::new`] stores raw components and makes no such promise; use
/// [`Quaternion::is_normalized`] to check wire input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

/// Roll/pitch/yaw angles in radians, applied extrinsically about X, then Y, then Z.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerRPY {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerRPY {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    /// Raw components, not normalized.
    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    /// Normalizes the components and canonicalizes the sign. `None` for a zero or non-finite input.
    pub fn from_components(x: f64, y: f64, z: f64, w: f64) -> Option<Self> {
        Quaternion::new(x, y, z, w).try_normalize()
    }

    /// Rotation of `angle` radians about `axis`. `None` if the axis has no direction.
    pub fn from_axis_angle(axis: &Vector3, angle: f64) -> Option<Self> {
        let axis = axis.try_normalize()?;
        let (s, c) = (angle * 0.5).sin_cos();
        Some(Quaternion::new(axis.x * s, axis.y * s, axis.z * s, c).canonical())
    }

    /// Rotation by a rotation vector (axis scaled by angle). Zero maps to identity.
    pub fn from_rotation_vector(v: &Vector3) -> Self {
        let angle = v.norm();
        if angle < 1e-300 {
            return Quaternion::IDENTITY;
        }
        let (s, c) = (angle * 0.5).sin_cos();
        let axis = *v / angle;
        Quaternion::new(axis.x * s, axis.y * s, axis.z * s, c)
            .try_normalize()
            .unwrap_or(Quaternion::IDENTITY)
    }

    /// Extrinsic X(roll) then Y(pitch) then Z(yaw); equivalently `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_euler(e: &EulerRPY) -> Self {
        let (sr, cr) = (e.roll * 0.5).sin_cos();
        let (sp, cp) = (e.pitch * 0.5).sin_cos();
        let (sy, cy) = (e.yaw * 0.5).sin_cos();
        let q = Quaternion::new(
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
            cr * cp * cy + sr * sp * sy,
        );
        q.try_normalize().unwrap_or(Quaternion::IDENTITY)
    }

    /// Inverse of [`Quaternion::from_euler`] up to rotation equivalence.
    ///
    /// Output ranges: roll and yaw in `[-π, π)`, pitch in `[-π/2, π/2]`. At gimbal lock
    /// (`|pitch| = π/2`) roll is set to zero and the remaining rotation folded into yaw.
    pub fn to_euler(&self) -> EulerRPY {
        let Quaternion { x, y, z, w } = *self;
        let sin_pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
        if sin_pitch.abs() >= 1.0 - 1e-12 {
            // R01 = -sin(yaw) and R11 = cos(yaw) once roll is pinned to zero.
            let r01 = 2.0 * (x * y - w * z);
            let r11 = 1.0 - 2.0 * (x * x + z * z);
            return EulerRPY {
                roll: 0.0,
                pitch: FRAC_PI_2.copysign(sin_pitch),
                yaw: wrap_angle((-r01).atan2(r11)),
            };
        }
        EulerRPY {
            roll: wrap_angle((2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y))),
            pitch: sin_pitch.asin(),
            yaw: wrap_angle((2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    /// `|q|` within [`NORM_TOLERANCE`] of one.
    pub fn is_normalized(&self) -> bool {
        self.is_finite() && (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn try_normalize(&self) -> Option<Quaternion> {
        let n = self.norm();
        if !n.is_finite() || n < f64::EPSILON {
            return None;
        }
        Some(Quaternion::new(self.x / n, self.y / n, self.z / n, self.w / n).canonical())
    }

    /// Same rotation with `w >= 0`.
    pub fn canonical(&self) -> Quaternion {
        if self.w < 0.0 {
            Quaternion::new(-self.x, -self.y, -self.z, -self.w)
        } else {
            *self
        }
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion::new(-self.x, -self.y, -self.z, self.w)
    }

    /// Inverse rotation. For unit quaternions this is the conjugate.
    pub fn inverse(&self) -> Quaternion {
        let n2 = self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w;
        let c = self.conjugate();
        Quaternion::new(c.x / n2, c.y / n2, c.z / n2, c.w / n2)
    }

    /// Rotates `v`, computing `q v q⁻¹`.
    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        // v' = v + 2w(u × v) + 2u × (u × v)
        let u = Vector3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        *v + t * self.w + u.cross(&t)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    /// Angle of the relative rotation between `self` and `other`, in `[0, π]`.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        let d = self.dot(other).abs().min(1.0);
        2.0 * d.acos()
    }

    /// Compares rotations rather than components, so `q` and `-q` are equal.
    pub fn same_rotation(&self, other: &Quaternion, tolerance: f64) -> bool {
        [Vector3::UNIT_X, Vector3::UNIT_Y, Vector3::UNIT_Z].iter().all(|b| {
            let d = self.rotate(b) - other.rotate(b);
            d.x.abs() <= tolerance && d.y.abs() <= tolerance && d.z.abs() <= tolerance
        })
    }
}

/// Hamilton product: `(a * b).rotate(v) == a.rotate(&b.rotate(v))`.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        )
    }
}

/// Free-function form of [`Quaternion::from_euler`].
pub fn quat_from_euler(e: &EulerRPY) -> Quaternion {
    Quaternion::from_euler(e)
}

/// Free-function form of [`Quaternion::to_euler`].
pub fn euler_from_quat(q: &Quaternion) -> EulerRPY {
    q.to_euler()
}

/// Free-function form of [`Quaternion::rotate`].
pub fn quat_rotate(q: &Quaternion, v: &Vector3) -> Vector3 {
    q.rotate(v)
}
