//! Client-side synchronization framework.
//!
//! A [`SyncContext`] owns one server connection and drives a tick cycle: the getter tracker
//! (HIGH) refreshes every tracked transform and cached record in one batched get per record
//! kind, behaviours' `fixed_update` hooks and attached effects run (NORMAL), and the setter
//! tracker (LOW) flushes all local writes in one batched set per record kind.

pub mod behaviour;
pub mod cache;
pub mod colliders;
pub mod context;
pub mod effects;
mod error;
pub mod randomizer;
pub mod tracker;
pub mod transform;

pub use behaviour::{
    Behaviour, BehaviourManager, BehaviourScript, DispatchKind, HookFailure, HookResult, Lifecycle,
    ModelSpawner, Spawner,
};
pub use cache::SceneCache;
pub use colliders::{Collider, ColliderError, ColliderShape, ColliderTarget, Hit, WorldShape};
pub use context::{ClockFollower, ContextConfig, Diagnostic, SyncContext};
pub use effects::{Effect, EffectHandle, EffectManager, VisibilityEffect, VisualSelector};
pub use error::FrameworkError;
pub use randomizer::{
    LightRandomizer, LightRandomizerConfig, ModelVisualRandomizer, ModelVisualRandomizerConfig,
    RandomSource, Randomizer, RandomizerConfig, RandomizerLevel, RandomizerWrites, ValueRange,
};
pub use simsync_protocol::model_xml;
pub use tracker::{
    FnTracker, TickOutcome, Tracker, TrackerError, TrackerHandle, TrackerManager, TrackerPriority,
    UpdateLoop,
};
pub use transform::Transform;
