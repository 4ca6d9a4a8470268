//! Client-side mirror of one model's pose and twist.

use std::sync::Arc;

use parking_lot::RwLock;
use simsync_core::{Pose, Quaternion, Twist, Vector3};
use simsync_protocol::ModelState;

use crate::FrameworkError;

#[derive(Debug)]
struct Inner {
    state: ModelState,
    pose_dirty: bool,
    twist_dirty: bool,
    generation: u64,
    stale: bool,
    alive: bool,
}

/// Shared handle to a cached model state. Clones refer to the same transform.
///
/// Local writes are visible immediately and flagged dirty until the setter flushes them.
/// The getter overwrites only fields that are not dirty.
#[derive(Debug, Clone)]
pub struct Transform {
    inner: Arc<RwLock<Inner>>,
}

/// A dirty transform captured for flushing.
#[derive(Debug, Clone)]
pub(crate) struct DirtySnapshot {
    pub state: ModelState,
    pub generation: u64,
}

impl Transform {
    /// An inert transform; becomes writable once its behaviour is spawned.
    pub fn new(model_name: impl Into<String>) -> Self {
        Transform {
            inner: Arc::new(RwLock::new(Inner {
                state: ModelState::new(model_name, Pose::IDENTITY, Twist::ZERO),
                pose_dirty: false,
                twist_dirty: false,
                generation: 0,
                stale: false,
                alive: false,
            })),
        }
    }

    pub fn model_name(&self) -> String {
        self.inner.read().state.name.clone()
    }

    pub fn state(&self) -> ModelState {
        self.inner.read().state.clone()
    }

    pub fn pose(&self) -> Pose {
        self.inner.read().state.pose
    }

    pub fn twist(&self) -> Twist {
        self.inner.read().state.twist
    }

    pub fn position(&self) -> Vector3 {
        self.inner.read().state.pose.position
    }

    pub fn orientation(&self) -> Quaternion {
        self.inner.read().state.pose.orientation
    }

    /// The pose, read atomically with the liveness check.
    pub fn live_pose(&self) -> Option<Pose> {
        let g = self.inner.read();
        g.alive.then_some(g.state.pose)
    }

    pub fn is_alive(&self) -> bool {
        self.inner.read().alive
    }

    /// True after a failed refresh, until the next successful one.
    pub fn is_stale(&self) -> bool {
        self.inner.read().stale
    }

    pub fn is_dirty(&self) -> bool {
        let g = self.inner.read();
        g.pose_dirty || g.twist_dirty
    }

    pub fn is_pose_dirty(&self) -> bool {
        self.inner.read().pose_dirty
    }

    pub fn is_twist_dirty(&self) -> bool {
        self.inner.read().twist_dirty
    }

    fn write(&self, f: impl FnOnce(&mut Inner)) -> Result<(), FrameworkError> {
        let mut g = self.inner.write();
        if !g.alive {
            return Err(FrameworkError::NotAlive(g.state.name.clone()));
        }
        f(&mut g);
        g.generation += 1;
        Ok(())
    }

    pub fn set_pose(&self, pose: Pose) -> Result<(), FrameworkError> {
        self.write(|g| {
            g.state.pose = pose;
            g.pose_dirty = true;
        })
    }

    pub fn set_position(&self, position: Vector3) -> Result<(), FrameworkError> {
        self.write(|g| {
            g.state.pose.position = position;
            g.pose_dirty = true;
        })
    }

    pub fn set_orientation(&self, orientation: Quaternion) -> Result<(), FrameworkError> {
        self.write(|g| {
            g.state.pose.orientation = orientation;
            g.pose_dirty = true;
        })
    }

    pub fn set_twist(&self, twist: Twist) -> Result<(), FrameworkError> {
        self.write(|g| {
            g.state.twist = twist;
            g.twist_dirty = true;
        })
    }

    pub(crate) fn activate(&self, state: ModelState) {
        let mut g = self.inner.write();
        g.state = state;
        g.pose_dirty = false;
        g.twist_dirty = false;
        g.stale = false;
        g.alive = true;
        g.generation += 1;
    }

    pub(crate) fn deactivate(&self) {
        let mut g = self.inner.write();
        g.alive = false;
        g.pose_dirty = false;
        g.twist_dirty = false;
    }

    /// Local-dirty-wins merge of a server state.
    pub(crate) fn merge_from_server(&self, server: &ModelState) {
        let mut g = self.inner.write();
        if !g.alive {
            return;
        }
        if !g.pose_dirty {
            g.state.pose = server.pose;
        }
        if !g.twist_dirty {
            g.state.twist = server.twist;
        }
        g.stale = false;
    }

    pub(crate) fn mark_stale(&self) {
        self.inner.write().stale = true;
    }

    pub(crate) fn dirty_snapshot(&self) -> Option<DirtySnapshot> {
        let g = self.inner.read();
        (g.alive && (g.pose_dirty || g.twist_dirty)).then(|| DirtySnapshot {
            state: g.state.clone(),
            generation: g.generation,
        })
    }

    /// Clears dirty flags unless the transform was written again after the snapshot.
    pub(crate) fn clear_dirty_if(&self, generation: u64) {
        let mut g = self.inner.write();
        if g.generation == generation {
            g.pose_dirty = false;
            g.twist_dirty = false;
        }
    }

    pub fn same_as(&self, other: &Transform) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}
