//! Analytic colliders attached to transforms or fixed poses.
//!
//! All shapes are closed sets: touching counts as intersecting. 2D shapes live in the world
//! X-Y plane and use only the x, y and yaw of their effective pose. Polygon-polygon tests and
//! polygon containers of polygons require convex polygons; circle/polygon and point tests work
//! for any simple polygon.

use simsync_core::{pose_compose, Pose, Ray, Vector3};

use crate::transform::Transform;

/// Slack applied in favour of "touching" on boundary comparisons.
pub const BOUNDARY_EPSILON: f64 = 1e-12;

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColliderError {
    #[error("cannot mix 2D and 3D colliders")]
    DimensionMismatch,
    #[error("polygon must be convex for this test")]
    NonConvex,
    #[error("raycast is only supported on 3D colliders")]
    Unsupported2dRaycast,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("collider target '{0}' is not alive")]
    NotAlive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape2D {
    Rectangle { half_extents: Point2 },
    Circle { radius: f64 },
    /// Simple, counter-clockwise, local coordinates.
    Polygon { vertices: Vec<Point2> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape3D {
    Box { half_extents: Vector3 },
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColliderShape {
    D2(Shape2D),
    D3(Shape3D),
}

fn positive(v: f64, what: &str) -> Result<(), ColliderError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ColliderError::InvalidShape(format!("{what} must be positive, got {v}")))
    }
}

impl ColliderShape {
    pub fn rectangle(half_x: f64, half_y: f64) -> Result<Self, ColliderError> {
        positive(half_x, "half extent")?;
        positive(half_y, "half extent")?;
        Ok(ColliderShape::D2(Shape2D::Rectangle {
            half_extents: [half_x, half_y],
        }))
    }

    pub fn circle(radius: f64) -> Result<Self, ColliderError> {
        positive(radius, "radius")?;
        Ok(ColliderShape::D2(Shape2D::Circle { radius }))
    }

    /// Rejects fewer than 3 vertices, clockwise winding and self-intersection.
    pub fn polygon(vertices: Vec<Point2>) -> Result<Self, ColliderError> {
        if vertices.len() < 3 {
            return Err(ColliderError::InvalidShape("a polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ColliderError::InvalidShape("non-finite vertex".into()));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(ColliderError::InvalidShape("polygon must be counter-clockwise".into()));
        }
        if !is_simple(&vertices) {
            return Err(ColliderError::InvalidShape("polygon self-intersects".into()));
        }
        Ok(ColliderShape::D2(Shape2D::Polygon { vertices }))
    }

    pub fn cuboid(half_x: f64, half_y: f64, half_z: f64) -> Result<Self, ColliderError> {
        for h in [half_x, half_y, half_z] {
            positive(h, "half extent")?;
        }
        Ok(ColliderShape::D3(Shape3D::Box {
            half_extents: Vector3::new(half_x, half_y, half_z),
        }))
    }

    pub fn sphere(radius: f64) -> Result<Self, ColliderError> {
        positive(radius, "radius")?;
        Ok(ColliderShape::D3(Shape3D::Sphere { radius }))
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, ColliderShape::D2(_))
    }

    /// The shape placed at `pose`.
    pub fn at(&self, pose: &Pose) -> WorldShape {
        match self {
            ColliderShape::D2(s) => {
                let yaw = pose.orientation.to_euler().yaw;
                let (sin, cos) = yaw.sin_cos();
                let (x, y) = (pose.position.x, pose.position.y);
                let place = |p: &Point2| [x + cos * p[0] - sin * p[1], y + sin * p[0] + cos * p[1]];
                match s {
                    Shape2D::Circle { radius } => WorldShape::Circle {
                        center: [x, y],
                        radius: *radius,
                    },
                    Shape2D::Rectangle { half_extents: [hx, hy] } => {
                        let corners = [[-hx, -hy], [*hx, -hy], [*hx, *hy], [-hx, *hy]];
                        WorldShape::Polygon {
                            vertices: corners.iter().map(place).collect(),
                            convex: true,
                        }
                    }
                    Shape2D::Polygon { vertices } => WorldShape::Polygon {
                        convex: is_convex(vertices),
                        vertices: vertices.iter().map(place).collect(),
                    },
                }
            }
            ColliderShape::D3(s) => match s {
                Shape3D::Sphere { radius } => WorldShape::Sphere {
                    center: pose.position,
                    radius: *radius,
                },
                Shape3D::Box { half_extents } => {
                    let q = pose.orientation;
                    WorldShape::Obb {
                        center: pose.position,
                        axes: [
                            q.rotate(&Vector3::UNIT_X),
                            q.rotate(&Vector3::UNIT_Y),
                            q.rotate(&Vector3::UNIT_Z),
                        ],
                        half: half_extents.to_array(),
                    }
                }
            },
        }
    }
}

/// What a collider follows.
#[derive(Debug, Clone)]
pub enum ColliderTarget {
    Transform(Transform),
    Fixed(Pose),
}

/// Raycast result.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub entity_name: String,
    pub distance: f64,
    pub point: Vector3,
}

/// A shape attached to a target with a pose offset. The effective pose is recomputed on
/// every query.
#[derive(Debug, Clone)]
pub struct Collider {
    name: String,
    shape: ColliderShape,
    target: ColliderTarget,
    offset: Pose,
}

impl Collider {
    pub fn new(name: impl Into<String>, shape: ColliderShape, target: ColliderTarget) -> Self {
        Collider {
            name: name.into(),
            shape,
            target,
            offset: Pose::IDENTITY,
        }
    }

    pub fn fixed(name: impl Into<String>, shape: ColliderShape, pose: Pose) -> Self {
        Self::new(name, shape, ColliderTarget::Fixed(pose))
    }

    pub fn attached(name: impl Into<String>, shape: ColliderShape, transform: &Transform) -> Self {
        Self::new(name, shape, ColliderTarget::Transform(transform.clone()))
    }

    pub fn with_offset(mut self, offset: Pose) -> Self {
        self.offset = offset;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &ColliderShape {
        &self.shape
    }

    pub fn offset(&self) -> Pose {
        self.offset
    }

    pub fn effective_pose(&self) -> Result<Pose, ColliderError> {
        let base = match &self.target {
            ColliderTarget::Fixed(p) => *p,
            ColliderTarget::Transform(t) => t
                .live_pose()
                .ok_or_else(|| ColliderError::NotAlive(t.model_name()))?,
        };
        Ok(pose_compose(&base, &self.offset))
    }

    pub fn world_shape(&self) -> Result<WorldShape, ColliderError> {
        Ok(self.shape.at(&self.effective_pose()?))
    }

    pub fn intersects(&self, other: &Collider) -> Result<bool, ColliderError> {
        self.world_shape()?.intersects(&other.world_shape()?)
    }

    pub fn contains(&self, other: &Collider) -> Result<bool, ColliderError> {
        self.world_shape()?.contains(&other.world_shape()?)
    }

    /// 2D colliders use the point's x and y.
    pub fn intersects_point(&self, p: &Vector3) -> Result<bool, ColliderError> {
        Ok(self.world_shape()?.contains_point(p))
    }

    /// Same as [`intersects_point`](Self::intersects_point) for closed shapes.
    pub fn contains_point(&self, p: &Vector3) -> Result<bool, ColliderError> {
        Ok(self.world_shape()?.contains_point(p))
    }

    pub fn raycast(&self, ray: &Ray) -> Result<Option<Hit>, ColliderError> {
        Ok(self.world_shape()?.raycast(ray)?.map(|distance| Hit {
            entity_name: self.name.clone(),
            distance,
            point: ray.point_at(distance),
        }))
    }
}

/// A shape resolved in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldShape {
    Circle { center: Point2, radius: f64 },
    /// Counter-clockwise.
    Polygon { vertices: Vec<Point2>, convex: bool },
    Sphere { center: Vector3, radius: f64 },
    /// Oriented box: unit axes and half extents along them.
    Obb { center: Vector3, axes: [Vector3; 3], half: [f64; 3] },
}

impl WorldShape {
    pub fn is_2d(&self) -> bool {
        matches!(self, WorldShape::Circle { .. } | WorldShape::Polygon { .. })
    }

    pub fn contains_point(&self, p: &Vector3) -> bool {
        match self {
            WorldShape::Circle { center, radius } => dist2(center, &[p.x, p.y]) <= radius + BOUNDARY_EPSILON,
            WorldShape::Polygon { vertices, .. } => point_in_polygon(vertices, &[p.x, p.y]),
            WorldShape::Sphere { center, radius } => center.distance(p) <= radius + BOUNDARY_EPSILON,
            WorldShape::Obb { center, axes, half } => {
                let d = *p - *center;
                (0..3).all(|i| d.dot(&axes[i]).abs() <= half[i] + BOUNDARY_EPSILON)
            }
        }
    }

    /// True iff the closed shapes share a point. Symmetric.
    pub fn intersects(&self, other: &WorldShape) -> Result<bool, ColliderError> {
        use WorldShape::*;
        if self.is_2d() != other.is_2d() {
            return Err(ColliderError::DimensionMismatch);
        }
        Ok(match (self, other) {
            (Circle { center: a, radius: ra }, Circle { center: b, radius: rb }) => {
                dist2(a, b) <= ra + rb + BOUNDARY_EPSILON
            }
            (Circle { center, radius }, Polygon { vertices, .. })
            | (Polygon { vertices, .. }, Circle { center, radius }) => {
                point_in_polygon(vertices, center) || boundary_distance(vertices, center) <= radius + BOUNDARY_EPSILON
            }
            (Polygon { vertices: a, convex: ca }, Polygon { vertices: b, convex: cb }) => {
                if !(*ca && *cb) {
                    return Err(ColliderError::NonConvex);
                }
                !separated_2d(a, b)
            }
            (Sphere { center: a, radius: ra }, Sphere { center: b, radius: rb }) => {
                a.distance(b) <= ra + rb + BOUNDARY_EPSILON
            }
            (Sphere { center, radius }, Obb { center: bc, axes, half })
            | (Obb { center: bc, axes, half }, Sphere { center, radius }) => {
                obb_closest_point(bc, axes, half, center).distance(center) <= radius + BOUNDARY_EPSILON
            }
            (Obb { center: ac, axes: aa, half: ah }, Obb { center: bc, axes: ba, half: bh }) => {
                !obbs_separated(ac, aa, ah, bc, ba, bh)
            }
            _ => unreachable!("dimensionality checked above"),
        })
    }

    /// True iff every point of `other` lies in this closed shape.
    pub fn contains(&self, other: &WorldShape) -> Result<bool, ColliderError> {
        use WorldShape::*;
        if self.is_2d() != other.is_2d() {
            return Err(ColliderError::DimensionMismatch);
        }
        Ok(match (self, other) {
            (Circle { center: a, radius: ra }, Circle { center: b, radius: rb }) => {
                dist2(a, b) + rb <= ra + BOUNDARY_EPSILON
            }
            (Circle { center, radius }, Polygon { vertices, .. }) => {
                vertices.iter().all(|v| dist2(center, v) <= radius + BOUNDARY_EPSILON)
            }
            (Polygon { vertices, .. }, Circle { center, radius }) => {
                point_in_polygon(vertices, center) && boundary_distance(vertices, center) + BOUNDARY_EPSILON >= *radius
            }
            (Polygon { vertices: a, convex }, Polygon { vertices: b, .. }) => {
                if !*convex {
                    return Err(ColliderError::NonConvex);
                }
                b.iter().all(|v| point_in_polygon(a, v))
            }
            (Sphere { center: a, radius: ra }, Sphere { center: b, radius: rb }) => {
                a.distance(b) + rb <= ra + BOUNDARY_EPSILON
            }
            (Sphere { center, radius }, Obb { center: bc, axes, half }) => obb_corners(bc, axes, half)
                .iter()
                .all(|c| c.distance(center) <= radius + BOUNDARY_EPSILON),
            (Obb { center: bc, axes, half }, Sphere { center, radius }) => {
                let d = *center - *bc;
                (0..3).all(|i| d.dot(&axes[i]).abs() + radius <= half[i] + BOUNDARY_EPSILON)
            }
            (Obb { .. }, Obb { center, axes, half }) => obb_corners(center, axes, half)
                .iter()
                .all(|c| self.contains_point(c)),
            _ => unreachable!("dimensionality checked above"),
        })
    }

    /// Distance along the ray to the first boundary crossing with `t >= 0`. A ray starting
    /// inside returns the exit.
    pub fn raycast(&self, ray: &Ray) -> Result<Option<f64>, ColliderError> {
        let o = ray.origin();
        let d = ray.direction();
        Ok(match self {
            WorldShape::Circle { .. } | WorldShape::Polygon { .. } => {
                return Err(ColliderError::Unsupported2dRaycast)
            }
            WorldShape::Sphere { center, radius } => {
                let oc = o - *center;
                let a = d.dot(&d);
                let b = oc.dot(&d);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    None
                } else {
                    let sq = disc.sqrt();
                    let (t0, t1) = ((-b - sq) / a, (-b + sq) / a);
                    if t0 >= 0.0 {
                        Some(t0)
                    } else if t1 >= 0.0 {
                        Some(t1)
                    } else {
                        None
                    }
                }
            }
            WorldShape::Obb { center, axes, half } => {
                let rel = o - *center;
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for i in 0..3 {
                    let oi = rel.dot(&axes[i]);
                    let di = d.dot(&axes[i]);
                    if di.abs() < 1e-15 {
                        if oi.abs() > half[i] {
                            return Ok(None);
                        }
                        continue;
                    }
                    let (mut t1, mut t2) = ((-half[i] - oi) / di, (half[i] - oi) / di);
                    if t1 > t2 {
                        std::mem::swap(&mut t1, &mut t2);
                    }
                    t_near = t_near.max(t1);
                    t_far = t_far.min(t2);
                    if t_near > t_far {
                        return Ok(None);
                    }
                }
                if t_far < 0.0 {
                    None
                } else if t_near >= 0.0 {
                    Some(t_near)
                } else {
                    Some(t_far)
                }
            }
        })
    }
}

fn dist2(a: &Point2, b: &Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross2(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn is_convex(v: &[Point2]) -> bool {
    let n = v.len();
    (0..n).all(|i| cross2(&v[i], &v[(i + 1) % n], &v[(i + 2) % n]) >= 0.0)
}

fn on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = cross2(q1, q2, p1);
    let d2 = cross2(q1, q2, p2);
    let d3 = cross2(p1, p2, q1);
    let d4 = cross2(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

fn is_simple(v: &[Point2]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(&v[i], &v[(i + 1) % n], &v[j], &v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    };
    dist2(p, &[a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn boundary_distance(v: &[Point2], p: &Point2) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| point_segment_distance(p, &v[i], &v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Crossing number, with boundary points counted as inside.
fn point_in_polygon(v: &[Point2], p: &Point2) -> bool {
    if boundary_distance(v, p) <= BOUNDARY_EPSILON {
        return true;
    }
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn project(v: &[Point2], axis: &Point2) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p[0] * axis[0] + p[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}

fn separated_2d(a: &[Point2], b: &[Point2]) -> bool {
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            let edge = [q[0] - p[0], q[1] - p[1]];
            let len = edge[0].hypot(edge[1]);
            if len == 0.0 {
                continue;
            }
            let axis = [-edge[1] / len, edge[0] / len];
            let (amin, amax) = project(a, &axis);
            let (bmin, bmax) = project(b, &axis);
            if amax < bmin - BOUNDARY_EPSILON || bmax < amin - BOUNDARY_EPSILON {
                return true;
            }
        }
    }
    false
}

fn obb_closest_point(center: &Vector3, axes: &[Vector3; 3], half: &[f64; 3], p: &Vector3) -> Vector3 {
    let d = *p - *center;
    let mut q = *center;
    for i in 0..3 {
        q += axes[i] * d.dot(&axes[i]).clamp(-half[i], half[i]);
    }
    q
}

fn obb_corners(center: &Vector3, axes: &[Vector3; 3], half: &[f64; 3]) -> Vec<Vector3> {
    let mut out = Vec::with_capacity(8);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out.push(*center + axes[0] * (sx * half[0]) + axes[1] * (sy * half[1]) + axes[2] * (sz * half[2]));
            }
        }
    }
    out
}

fn obb_radius(axes: &[Vector3; 3], half: &[f64; 3], l: &Vector3) -> f64 {
    (0..3).map(|i| half[i] * axes[i].dot(l).abs()).sum()
}

/// Separating axis test over the 6 face normals and 9 edge cross products.
fn obbs_separated(
    ac: &Vector3,
    aa: &[Vector3; 3],
    ah: &[f64; 3],
    bc: &Vector3,
    ba: &[Vector3; 3],
    bh: &[f64; 3],
) -> bool {
    let t = *bc - *ac;
    let mut candidates: Vec<Vector3> = aa.iter().chain(ba.iter()).copied().collect();
    for a in aa {
        for b in ba {
            let c = a.cross(b);
            // Near-parallel edges: the face axes already cover this direction.
            if c.norm() > 1e-9 {
                candidates.push(c / c.norm());
            }
        }
    }
    candidates
        .iter()
        .any(|l| t.dot(l).abs() > obb_radius(aa, ah, l) + obb_radius(ba, bh, l) + BOUNDARY_EPSILON)
}
