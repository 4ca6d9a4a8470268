//! Behaviours: named, tagged entities that mirror one server model.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use simsync_core::Pose;
use simsync_protocol::model_xml::{load_model_xml, ModelXmlDocument};
use simsync_protocol::{Client, ClientError, LinkKey, VisualKey};

use crate::tracker::panic_message;
use crate::transform::Transform;
use crate::FrameworkError;

pub type HookResult = Result<(), Box<dyn std::error::Error + Send + Sync>>;

/// User hooks of a behaviour. Both default to doing nothing.
pub trait BehaviourScript: Send {
    /// Invoked manually or once per environment step.
    fn update(&mut self, _behaviour: &Behaviour) -> HookResult {
        Ok(())
    }

    /// Invoked once per simulation tick, in the NORMAL tracker phase.
    fn fixed_update(&mut self, _behaviour: &Behaviour, _sim_time_ns: u64) -> HookResult {
        Ok(())
    }
}

impl BehaviourScript for () {}

/// Creates and removes a behaviour's model on the server.
pub trait Spawner: Send + Sync {
    fn spawn(&self, name: &str, pose: Pose) -> Result<(), ClientError>;
    fn delete(&self, name: &str) -> Result<(), ClientError>;
}

/// Spawns a fixed model document under the behaviour's name.
pub struct ModelSpawner {
    client: Arc<Client>,
    xml: String,
}

impl ModelSpawner {
    pub fn new(client: Arc<Client>, document: &ModelXmlDocument) -> Self {
        ModelSpawner {
            client,
            xml: document.to_xml(),
        }
    }

    /// `source` is XML text or a path to a `.model.xml` file.
    pub fn from_source(client: Arc<Client>, source: &str) -> Result<Self, FrameworkError> {
        let doc = load_model_xml(source)?;
        Ok(Self::new(client, &doc))
    }

    pub fn xml(&self) -> &str {
        &self.xml
    }
}

impl Spawner for ModelSpawner {
    fn spawn(&self, name: &str, pose: Pose) -> Result<(), ClientError> {
        self.client.spawn_model(name, &self.xml, pose)
    }

    fn delete(&self, name: &str) -> Result<(), ClientError> {
        self.client.delete_model(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifecycle {
    Created,
    Spawned,
    Deleted,
}

struct BehaviourInner {
    name: String,
    tag: String,
    transform: Transform,
    spawner: Arc<dyn Spawner>,
    script: Mutex<Box<dyn BehaviourScript>>,
    lifecycle: Mutex<Lifecycle>,
    links: RwLock<Vec<LinkKey>>,
    visuals: RwLock<Vec<VisualKey>>,
}

/// Shared handle; clones refer to the same behaviour.
#[derive(Clone)]
pub struct Behaviour {
    inner: Arc<BehaviourInner>,
}

impl std::fmt::Debug for Behaviour {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Behaviour")
            .field("name", &self.inner.name)
            .field("tag", &self.inner.tag)
            .field("lifecycle", &self.lifecycle())
            .finish()
    }
}

impl Behaviour {
    /// Name and tag must both be non-empty.
    pub fn new(
        name: impl Into<String>,
        tag: impl Into<String>,
        spawner: Arc<dyn Spawner>,
        script: impl BehaviourScript + 'static,
    ) -> Result<Self, FrameworkError> {
        let name = name.into();
        let tag = tag.into();
        if name.trim().is_empty() || tag.trim().is_empty() {
            return Err(FrameworkError::Config(
                "a behaviour needs a non-empty name and tag".into(),
            ));
        }
        Ok(Behaviour {
            inner: Arc::new(BehaviourInner {
                transform: Transform::new(name.clone()),
                name,
                tag,
                spawner,
                script: Mutex::new(Box::new(script)),
                lifecycle: Mutex::new(Lifecycle::Created),
                links: RwLock::new(Vec::new()),
                visuals: RwLock::new(Vec::new()),
            }),
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn tag(&self) -> &str {
        &self.inner.tag
    }

    pub fn transform(&self) -> &Transform {
        &self.inner.transform
    }

    pub fn spawner(&self) -> &Arc<dyn Spawner> {
        &self.inner.spawner
    }

    pub fn lifecycle(&self) -> Lifecycle {
        *self.inner.lifecycle.lock()
    }

    pub fn is_spawned(&self) -> bool {
        self.lifecycle() == Lifecycle::Spawned
    }

    /// Links discovered at spawn time.
    pub fn links(&self) -> Vec<LinkKey> {
        self.inner.links.read().clone()
    }

    /// Visuals discovered at spawn time.
    pub fn visuals(&self) -> Vec<VisualKey> {
        self.inner.visuals.read().clone()
    }

    pub fn same_as(&self, other: &Behaviour) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Runs the script's `update` hook.
    pub fn update(&self) -> HookResult {
        let mut script = self.inner.script.lock();
        script.update(self)
    }

    /// Runs the script's `fixed_update` hook.
    pub fn fixed_update(&self, sim_time_ns: u64) -> HookResult {
        let mut script = self.inner.script.lock();
        script.fixed_update(self, sim_time_ns)
    }

    pub(crate) fn set_lifecycle(&self, l: Lifecycle) {
        *self.inner.lifecycle.lock() = l;
    }

    pub(crate) fn set_parts(&self, links: Vec<LinkKey>, visuals: Vec<VisualKey>) {
        *self.inner.links.write() = links;
        *self.inner.visuals.write() = visuals;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchKind {
    Update,
    FixedUpdate,
}

/// A hook failure caught during dispatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HookFailure {
    pub behaviour: String,
    pub kind: DispatchKind,
    pub message: String,
}

/// Name-unique registry of behaviours, kept in registration order.
#[derive(Default)]
pub struct BehaviourManager {
    registered: RwLock<Vec<Behaviour>>,
    cycle_snapshot: Mutex<Vec<Behaviour>>,
}

impl BehaviourManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, b: &Behaviour) -> Result<(), FrameworkError> {
        let mut reg = self.registered.write();
        if reg.iter().any(|x| x.name() == b.name()) {
            return Err(FrameworkError::DuplicateBehaviour(b.name().to_string()));
        }
        reg.push(b.clone());
        Ok(())
    }

    /// Removes by name; returns the removed behaviour.
    pub fn unregister(&self, name: &str) -> Option<Behaviour> {
        let mut reg = self.registered.write();
        let idx = reg.iter().position(|b| b.name() == name)?;
        Some(reg.remove(idx))
    }

    pub fn is_registered(&self, b: &Behaviour) -> bool {
        self.registered.read().iter().any(|x| x.same_as(b))
    }

    pub fn get(&self, name: &str) -> Option<Behaviour> {
        self.registered.read().iter().find(|b| b.name() == name).cloned()
    }

    /// All behaviours with this tag, in registration order.
    pub fn find_by_tag(&self, tag: &str) -> Vec<Behaviour> {
        self.registered
            .read()
            .iter()
            .filter(|b| b.tag() == tag)
            .cloned()
            .collect()
    }

    pub fn all(&self) -> Vec<Behaviour> {
        self.registered.read().clone()
    }

    pub fn len(&self) -> usize {
        self.registered.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Freezes the list that the next FIXED_UPDATE dispatch will use.
    pub fn begin_cycle(&self) {
        *self.cycle_snapshot.lock() = self.all();
    }

    /// Calls each behaviour's hook once in registration order. FIXED_UPDATE uses the list
    /// frozen by the last [`begin_cycle`](Self::begin_cycle), so behaviours registered during a
    /// cycle are first invoked in the next one.
    pub fn dispatch(&self, kind: DispatchKind, sim_time_ns: u64) -> Vec<HookFailure> {
        let list = match kind {
            DispatchKind::Update => self.all(),
            DispatchKind::FixedUpdate => self.cycle_snapshot.lock().clone(),
        };
        let mut failures = Vec::new();
        for b in list {
            if kind == DispatchKind::FixedUpdate && !self.is_registered(&b) {
                continue;
            }
            let outcome = catch_unwind(AssertUnwindSafe(|| match kind {
                DispatchKind::Update => b.update(),
                DispatchKind::FixedUpdate => b.fixed_update(sim_time_ns),
            }));
            let message = match outcome {
                Ok(Ok(())) => continue,
                Ok(Err(e)) => e.to_string(),
                Err(p) => panic_message(p.as_ref()),
            };
            log::warn!("{kind:?} hook of '{}' failed: {message}", b.name());
            failures.push(HookFailure {
                behaviour: b.name().to_string(),
                kind,
                message,
            });
        }
        failures
    }
}
