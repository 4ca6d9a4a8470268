use std::f64::consts::PI;

use proptest::prelude::*;
use simsync_core::{EulerRPY, Pose, Quaternion, Ray, Vector3};
use simsync_framework::colliders::*;
use simsync_framework::model_xml::ModelXmlDocument;
use simsync_framework::{Behaviour, ContextConfig, SyncContext};
use simsync_server::Server;

fn planar(x: f64, y: f64, yaw: f64) -> Pose {
    Pose::new(Vector3::new(x, y, 0.0), Quaternion::from_euler(&EulerRPY::new(0.0, 0.0, yaw)))
}

fn shape2d() -> impl Strategy<Value = ColliderShape> {
    prop_oneof![
        (0.1f64..2.0).prop_map(|r| ColliderShape::circle(r).unwrap()),
        (0.1f64..2.0, 0.1f64..2.0).prop_map(|(a, b)| ColliderShape::rectangle(a, b).unwrap()),
        (3usize..8, 0.2f64..2.0, 0.0f64..1.0).prop_map(|(n, r, phase)| {
            let v = (0..n)
                .map(|i| {
                    let a = phase + 2.0 * PI * i as f64 / n as f64;
                    [r * a.cos(), r * a.sin()]
                })
                .collect();
            ColliderShape::polygon(v).unwrap()
        }),
    ]
}

fn shape3d() -> impl Strategy<Value = ColliderShape> {
    prop_oneof![
        (0.1f64..2.0).prop_map(|r| ColliderShape::sphere(r).unwrap()),
        (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0).prop_map(|(a, b, c)| ColliderShape::cuboid(a, b, c).unwrap()),
    ]
}

fn pose2d() -> impl Strategy<Value = Pose> {
    (-3.0f64..3.0, -3.0f64..3.0, -PI..PI).prop_map(|(x, y, yaw)| planar(x, y, yaw))
}

fn pose3d() -> impl Strategy<Value = Pose> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -PI..PI, -1.5f64..1.5, -PI..PI).prop_map(|(x, y, z, r, p, yw)| {
        Pose::new(Vector3::new(x, y, z), Quaternion::from_euler(&EulerRPY::new(r, p, yw)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn intersects_is_symmetric_2d(a in shape2d(), pa in pose2d(), b in shape2d(), pb in pose2d()) {
        let ca = Collider::fixed("a", a, pa);
        let cb = Collider::fixed("b", b, pb);
        prop_assert_eq!(ca.intersects(&cb).unwrap(), cb.intersects(&ca).unwrap());
        if ca.contains(&cb).unwrap() {
            prop_assert!(ca.intersects(&cb).unwrap());
        }
        prop_assert!(ca.contains(&ca).unwrap());
    }

    #[test]
    fn intersects_is_symmetric_3d(a in shape3d(), pa in pose3d(), b in shape3d(), pb in pose3d()) {
        let ca = Collider::fixed("a", a, pa);
        let cb = Collider::fixed("b", b, pb);
        prop_assert_eq!(ca.intersects(&cb).unwrap(), cb.intersects(&ca).unwrap());
        if ca.contains(&cb).unwrap() {
            prop_assert!(ca.intersects(&cb).unwrap());
        }
    }

    #[test]
    fn rigid_motion_preserves_predicates_2d(
        a in shape2d(), pa in pose2d(), b in shape2d(), pb in pose2d(),
        m in pose2d(), px in -4.0f64..4.0, py in -4.0f64..4.0,
    ) {
        let ca = Collider::fixed("a", a.clone(), pa);
        let cb = Collider::fixed("b", b.clone(), pb);
        let ma = Collider::fixed("a", a, m.compose(&pa));
        let mb = Collider::fixed("b", b, m.compose(&pb));
        let p = Vector3::new(px, py, 0.0);
        let mp = m.transform_point(&p);
        // Skip configurations that sit on a boundary within rounding.
        let s = ca.world_shape().unwrap();
        let inside = s.contains_point(&p);
        let clear = [[1e-7, 0.0], [-1e-7, 0.0], [0.0, 1e-7], [0.0, -1e-7]]
            .iter()
            .all(|d| s.contains_point(&(p + Vector3::new(d[0], d[1], 0.0))) == inside);
        if clear {
            prop_assert_eq!(inside, ma.contains_point(&mp).unwrap());
        }
        let nudged = Collider::fixed("b", cb.shape().clone(), pb.compose(&Pose::from_position(Vector3::new(1e-7, 1e-7, 0.0))));
        prop_assume!(ca.intersects(&cb).unwrap() == ca.intersects(&nudged).unwrap());
        prop_assert_eq!(ca.intersects(&cb).unwrap(), ma.intersects(&mb).unwrap());
    }

    #[test]
    fn rigid_motion_preserves_predicates_3d(
        a in shape3d(), pa in pose3d(), b in shape3d(), pb in pose3d(), m in pose3d(),
    ) {
        let ca = Collider::fixed("a", a.clone(), pa);
        let cb = Collider::fixed("b", b.clone(), pb);
        let ma = Collider::fixed("a", a, m.compose(&pa));
        let mb = Collider::fixed("b", b, m.compose(&pb));
        let nudged = Collider::fixed("b", cb.shape().clone(), pb.compose(&Pose::from_position(Vector3::new(1e-7, 1e-7, 1e-7))));
        prop_assume!(ca.intersects(&cb).unwrap() == ca.intersects(&nudged).unwrap());
        prop_assert_eq!(ca.intersects(&cb).unwrap(), ma.intersects(&mb).unwrap());
    }

    #[test]
    fn raycast_hits_lie_on_boundary(
        s in shape3d(), p in pose3d(),
        ox in -6.0f64..6.0, oy in -6.0f64..6.0, oz in -6.0f64..6.0,
        dx in -1.0f64..1.0, dy in -1.0f64..1.0, dz in -1.0f64..1.0,
    ) {
        prop_assume!(Vector3::new(dx, dy, dz).norm() > 1e-3);
        let c = Collider::fixed("s", s, p);
        let ray = Ray::new(Vector3::new(ox, oy, oz), Vector3::new(dx, dy, dz)).unwrap();
        if let Some(hit) = c.raycast(&ray).unwrap() {
            prop_assert!(hit.distance >= 0.0);
            prop_assert!(hit.point.distance(&ray.point_at(hit.distance)) < 1e-9);
            let world = c.world_shape().unwrap();
            prop_assert!(boundary_gap(&world, &hit.point) < 1e-6);
        }
    }
}

/// Distance from `p` to the shape's surface.
fn boundary_gap(s: &WorldShape, p: &Vector3) -> f64 {
    match s {
        WorldShape::Sphere { center, radius } => (center.distance(p) - radius).abs(),
        WorldShape::Obb { center, axes, half } => {
            let d = *p - *center;
            let local: Vec<f64> = (0..3).map(|i| d.dot(&axes[i])).collect();
            let outside: f64 = (0..3)
                .map(|i| (local[i].abs() - half[i]).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            if outside > 0.0 {
                outside
            } else {
                (0..3).map(|i| half[i] - local[i].abs()).fold(f64::INFINITY, f64::min)
            }
        }
        _ => unreachable!(),
    }
}

#[test]
fn attached_collider_follows_transform() {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    let b = Behaviour::new(
        "mover",
        "agent",
        ctx.model_spawner(&ModelXmlDocument::single_box("b", Vector3::ONE)),
        (),
    )
    .unwrap();
    let c = Collider::attached("mover", ColliderShape::circle(1.0).unwrap(), b.transform());
    assert!(matches!(c.world_shape(), Err(ColliderError::NotAlive(_))));
    ctx.spawn_behaviour(&b, planar(3.0, 4.0, 0.0)).unwrap();
    match c.world_shape().unwrap() {
        WorldShape::Circle { center, .. } => assert_eq!(center, [3.0, 4.0]),
        other => panic!("{other:?}"),
    }
    b.transform().set_pose(planar(-1.0, 0.0, 0.0)).unwrap();
    assert!(c.contains_point(&Vector3::new(-1.5, 0.0, 0.0)).unwrap());
    let fixed = Collider::fixed("wall", ColliderShape::rectangle(0.5, 5.0).unwrap(), planar(5.0, 0.0, 0.0));
    assert!(!c.intersects(&fixed).unwrap());
    b.transform().set_pose(planar(3.6, 0.0, 0.0)).unwrap();
    assert!(c.intersects(&fixed).unwrap());
    ctx.delete_behaviour(&b).unwrap();
    assert!(c.intersects(&fixed).is_err());
}

#[test]
fn attachment_offset_composes_with_yaw() {
    let c = Collider::fixed("c", ColliderShape::circle(1.0).unwrap(), planar(3.0, 4.0, PI / 2.0))
        .with_offset(Pose::from_position(Vector3::new(1.0, 0.0, 0.0)));
    match c.world_shape().unwrap() {
        WorldShape::Circle { center, .. } => {
            assert!((center[0] - 3.0).abs() < 1e-12);
            assert!((center[1] - 5.0).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn polygon_contains_polygon() {
    let big = Collider::fixed("big", ColliderShape::rectangle(2.0, 2.0).unwrap(), Pose::IDENTITY);
    let tri = ColliderShape::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let inside = Collider::fixed("t", tri.clone(), planar(0.5, 0.5, 0.3));
    let poking = Collider::fixed("t", tri, planar(1.5, 1.5, 0.0));
    assert!(big.contains(&inside).unwrap());
    assert!(!big.contains(&poking).unwrap());
    assert!(big.intersects(&poking).unwrap());
    assert!(!inside.contains(&big).unwrap());
}
