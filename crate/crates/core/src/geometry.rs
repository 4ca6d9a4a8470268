//! Rays, planes and view frustums.

use serde::{Deserialize, Serialize};

use crate::pose::Pose;
use crate::vector::Vector3;
use crate::MathError;

/// Below this `|normal · direction|` a ray counts as parallel to a plane.
pub const PARALLEL_EPSILON: f64 = 1e-12;

/// Boundary slack for [`Frustum::contains`].
pub const FRUSTUM_EPSILON: f64 = 1e-9;

/// Half-line from `origin` along a unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    origin: Vector3,
    direction: Vector3,
}

impl Ray {
    /// Normalizes `direction`; fails if it has no length.
    pub fn new(origin: Vector3, direction: Vector3) -> Result<Self, MathError> {
        if !origin.is_finite() {
            return Err(MathError::NonFinite("ray origin"));
        }
        let direction = direction.try_normalize().ok_or(MathError::ZeroDirection)?;
        Ok(Self { origin, direction })
    }

    pub fn origin(&self) -> Vector3 {
        self.origin
    }

    pub fn direction(&self) -> Vector3 {
        self.direction
    }

    pub fn point_at(&self, t: f64) -> Vector3 {
        self.origin + self.direction * t
    }
}

/// The set `{p : normal · p + distance = 0}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    normal: Vector3,
    distance: f64,
}

impl Plane {
    /// Normalizes `normal`, rescaling `distance` so the plane is unchanged.
    pub fn new(normal: Vector3, distance: f64) -> Result<Self, MathError> {
        let len = normal.norm();
        if !len.is_finite() || len <= f64::EPSILON {
            return Err(MathError::ZeroDirection);
        }
        if !distance.is_finite() {
            return Err(MathError::NonFinite("plane distance"));
        }
        Ok(Self {
            normal: normal / len,
            distance: distance / len,
        })
    }

    pub fn from_point_normal(point: &Vector3, normal: &Vector3) -> Result<Self, MathError> {
        let n = normal.try_normalize().ok_or(MathError::ZeroDirection)?;
        Plane::new(n, -n.dot(point))
    }

    pub fn normal(&self) -> Vector3 {
        self.normal
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Signed distance; positive on the side the normal points to.
    pub fn signed_distance(&self, p: &Vector3) -> f64 {
        self.normal.dot(p) + self.distance
    }

    /// Smallest `t >= 0` where the ray meets the plane, if any.
    pub fn intersect_ray(&self, ray: &Ray) -> Option<f64> {
        let denom = self.normal.dot(&ray.direction);
        if denom.abs() < PARALLEL_EPSILON {
            return None;
        }
        let t = -self.signed_distance(&ray.origin) / denom;
        (t >= 0.0).then_some(t)
    }
}

/// Free-function form of [`Plane::intersect_ray`].
pub fn ray_plane_intersect(ray: &Ray, plane: &Plane) -> Option<f64> {
    plane.intersect_ray(ray)
}

/// Six inward-facing planes: near, far, left, right, top, bottom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    planes: [Plane; 6],
}

impl Frustum {
    pub const NEAR: usize = 0;
    pub const FAR: usize = 1;
    pub const LEFT: usize = 2;
    pub const RIGHT: usize = 3;
    pub const TOP: usize = 4;
    pub const BOTTOM: usize = 5;

    pub fn from_planes(planes: [Plane; 6]) -> Self {
        Self { planes }
    }

    /// Viewing volume of a camera looking along its local +x with +z up.
    ///
    /// `hfov` spans the horizontal (local y) extent; the vertical field of view follows from
    /// `tan(vfov/2) = tan(hfov/2) / aspect`.
    pub fn from_camera(
        camera: &Pose,
        near: f64,
        far: f64,
        hfov: f64,
        aspect: f64,
    ) -> Result<Self, MathError> {
        if !(near > 0.0 && near < far && far.is_finite()) {
            return Err(MathError::InvalidFrustum("require 0 < near < far"));
        }
        if !(hfov > 0.0 && hfov < std::f64::consts::PI) {
            return Err(MathError::InvalidFrustum("hfov must lie in (0, π)"));
        }
        if !(aspect > 0.0 && aspect.is_finite()) {
            return Err(MathError::InvalidFrustum("aspect must be positive"));
        }
        if !camera.is_finite() {
            return Err(MathError::NonFinite("camera pose"));
        }

        let q = camera.orientation;
        let c = camera.position;
        let forward = q.rotate(&Vector3::UNIT_X);
        let up = q.rotate(&Vector3::UNIT_Z);
        let right = q.rotate(&-Vector3::UNIT_Y);

        let half_h = hfov * 0.5;
        let half_v = (half_h.tan() / aspect).atan();
        let (sh, ch) = half_h.sin_cos();
        let (sv, cv) = half_v.sin_cos();

        let through_eye = |n: Vector3| Plane::from_point_normal(&c, &n);
        Ok(Self {
            planes: [
                Plane::from_point_normal(&(c + forward * near), &forward)?,
                Plane::from_point_normal(&(c + forward * far), &-forward)?,
                through_eye(forward * sh + right * ch)?,
                through_eye(forward * sh - right * ch)?,
                through_eye(forward * sv - up * cv)?,
                through_eye(forward * sv + up * cv)?,
            ],
        })
    }

    pub fn planes(&self) -> &[Plane; 6] {
        &self.planes
    }

    pub fn contains(&self, p: &Vector3) -> bool {
        self.planes
            .iter()
            .all(|plane| plane.signed_distance(p) >= -FRUSTUM_EPSILON)
    }
}

/// Free-function form of [`Frustum::from_camera`].
pub fn frustum_from_camera(
    camera: &Pose,
    near: f64,
    far: f64,
    hfov: f64,
    aspect: f64,
) -> Result<Frustum, MathError> {
    Frustum::from_camera(camera, near, far, hfov, aspect)
}

/// Free-function form of [`Frustum::contains`].
pub fn frustum_contains(frustum: &Frustum, p: &Vector3) -> bool {
    frustum.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn z0() -> Plane {
        Plane::new(Vector3::UNIT_Z, 0.0).unwrap()
    }

    #[test]
    fn ray_hits_plane_below() {
        let ray = Ray::new(Vector3::new(0.0, 0.0, 5.0), -Vector3::UNIT_Z).unwrap();
        assert_eq!(ray_plane_intersect(&ray, &z0()), Some(5.0));
    }

    #[test]
    fn ray_parallel_misses() {
        let ray = Ray::new(Vector3::ZERO, Vector3::UNIT_X).unwrap();
        assert_eq!(ray_plane_intersect(&ray, &z0()), None);
    }

    #[test]
    fn ray_pointing_away_misses() {
        let ray = Ray::new(Vector3::new(0.0, 0.0, 5.0), Vector3::UNIT_Z).unwrap();
        assert_eq!(ray_plane_intersect(&ray, &z0()), None);
    }

    #[test]
    fn plane_normalizes() {
        let p = Plane::new(Vector3::new(0.0, 0.0, 2.0), -4.0).unwrap();
        assert_eq!(p.normal(), Vector3::UNIT_Z);
        assert_eq!(p.distance(), -2.0);
        assert!(Plane::new(Vector3::ZERO, 1.0).is_err());
        assert!(Ray::new(Vector3::ZERO, Vector3::ZERO).is_err());
    }

    #[test]
    fn frustum_examples() {
        let f = Frustum::from_camera(&Pose::IDENTITY, 0.5, 10.0, FRAC_PI_2, 1.0).unwrap();
        assert!(f.contains(&Vector3::new(5.0, 0.0, 0.0)));
        assert!(!f.contains(&Vector3::new(-1.0, 0.0, 0.0)));
        // Half-width at depth 5 is 5 for a 90° field of view.
        assert!(!f.contains(&Vector3::new(5.0, 5.1, 0.0)));
        assert!(f.contains(&Vector3::new(5.0, 4.9, 0.0)));
        assert!(!f.contains(&Vector3::new(11.0, 0.0, 0.0)));
        assert!(!f.contains(&Vector3::new(5.0, 0.0, 5.1)));
    }

    #[test]
    fn frustum_rejects_bad_parameters() {
        let p = Pose::IDENTITY;
        assert!(Frustum::from_camera(&p, 0.0, 10.0, 1.0, 1.0).is_err());
        assert!(Frustum::from_camera(&p, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(Frustum::from_camera(&p, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(Frustum::from_camera(&p, 0.1, 1.0, std::f64::consts::PI, 1.0).is_err());
        assert!(Frustum::from_camera(&p, 0.1, 1.0, 1.0, 0.0).is_err());
    }
}
