//! Tick-driven visual effects and the manager that advances them.
//!
//! Built-ins toggle the `visible` flag of a behaviour's visuals: [`VisibilityEffect::blink`]
//! and [`VisibilityEffect::invisible`]. Durations are simulation time. Custom effects implement
//! [`Effect`].

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use simsync_protocol::{VisualKey, VisualState};

use crate::behaviour::BehaviourManager;
use crate::cache::SceneCache;
use crate::tracker::panic_message;
use crate::FrameworkError;

pub type EffectError = Box<dyn std::error::Error + Send + Sync>;

/// What an effect sees while attached, detached or updated.
pub struct EffectEnv<'a> {
    pub cache: &'a SceneCache,
    pub behaviours: &'a BehaviourManager,
    pub step_ns: u64,
    pub sim_time_ns: u64,
}

impl EffectEnv<'_> {
    /// Tracked visuals of a spawned behaviour that match `selector`.
    pub fn target_visuals(
        &self,
        target: &str,
        selector: &VisualSelector,
    ) -> Result<Vec<VisualKey>, FrameworkError> {
        let b = self
            .behaviours
            .get(target)
            .filter(|b| b.is_spawned())
            .ok_or_else(|| FrameworkError::NotAlive(target.to_string()))?;
        Ok(b.visuals().into_iter().filter(|k| selector.matches(k)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectStatus {
    Running,
    /// Detach after this update.
    Expired,
}

pub trait Effect: Send {
    fn on_attach(&mut self, env: &EffectEnv) -> Result<(), EffectError>;
    fn on_update(&mut self, env: &EffectEnv) -> Result<EffectStatus, EffectError>;
    fn on_detach(&mut self, env: &EffectEnv) -> Result<(), EffectError>;
}

/// Restricts an effect to some links and/or visuals of its target. Empty selects all.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisualSelector {
    pub links: Vec<String>,
    pub visuals: Vec<String>,
}

impl VisualSelector {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn matches(&self, key: &VisualKey) -> bool {
        (self.links.is_empty() || self.links.contains(&key.link_name))
            && (self.visuals.is_empty() || self.visuals.contains(&key.visual_name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VisibilityMode {
    Blink { interval_ns: u64 },
    Invisible,
}

/// Blink or invisible effect on one behaviour.
#[derive(Debug, Clone)]
pub struct VisibilityEffect {
    target: String,
    selector: VisualSelector,
    mode: VisibilityMode,
    duration_ns: Option<u64>,
    start_ns: u64,
    ticks: u64,
    half_period: u64,
    snapshot: Vec<VisualState>,
}

fn seconds_to_ns(s: f64, what: &str) -> Result<u64, FrameworkError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(FrameworkError::Config(format!("{what} must be positive, got {s}")));
    }
    Ok((s * 1e9).round() as u64)
}

impl VisibilityEffect {
    /// Toggles visibility every `floor(interval / 2 / step)` ticks (at least 1), starting visible.
    /// `duration_s` of `None` runs until detached.
    pub fn blink(
        target: impl Into<String>,
        interval_s: f64,
        duration_s: Option<f64>,
    ) -> Result<Self, FrameworkError> {
        let interval_ns = seconds_to_ns(interval_s, "blink interval")?;
        Self::build(target.into(), VisibilityMode::Blink { interval_ns }, duration_s)
    }

    /// Holds visibility false; the original visibility is restored on detach.
    pub fn invisible(target: impl Into<String>, duration_s: Option<f64>) -> Result<Self, FrameworkError> {
        Self::build(target.into(), VisibilityMode::Invisible, duration_s)
    }

    fn build(target: String, mode: VisibilityMode, duration_s: Option<f64>) -> Result<Self, FrameworkError> {
        let duration_ns = duration_s.map(|d| seconds_to_ns(d, "effect duration")).transpose()?;
        Ok(VisibilityEffect {
            target,
            selector: VisualSelector::all(),
            mode,
            duration_ns,
            start_ns: 0,
            ticks: 0,
            half_period: 1,
            snapshot: Vec::new(),
        })
    }

    pub fn with_selector(mut self, selector: VisualSelector) -> Self {
        self.selector = selector;
        self
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn mode(&self) -> VisibilityMode {
        self.mode
    }

    /// Ticks between toggles; meaningful once attached.
    pub fn half_period_ticks(&self) -> u64 {
        self.half_period
    }

    fn apply(&self, env: &EffectEnv, visible: bool) {
        for snap in &self.snapshot {
            if let Some(mut current) = env.cache.visual(&snap.key()) {
                current.visible = visible;
                env.cache.write_visual(current);
            }
        }
    }
}

impl Effect for VisibilityEffect {
    fn on_attach(&mut self, env: &EffectEnv) -> Result<(), EffectError> {
        let keys = env.target_visuals(&self.target, &self.selector)?;
        self.snapshot = keys.iter().filter_map(|k| env.cache.visual(k)).collect();
        self.start_ns = env.sim_time_ns;
        self.ticks = 0;
        if let VisibilityMode::Blink { interval_ns } = self.mode {
            self.half_period = (interval_ns / 2 / env.step_ns.max(1)).max(1);
        }
        Ok(())
    }

    fn on_update(&mut self, env: &EffectEnv) -> Result<EffectStatus, EffectError> {
        if env.behaviours.get(&self.target).filter(|b| b.is_spawned()).is_none() {
            self.snapshot.clear();
            return Ok(EffectStatus::Expired);
        }
        let visible = match self.mode {
            VisibilityMode::Blink { .. } => (self.ticks / self.half_period) % 2 == 0,
            VisibilityMode::Invisible => false,
        };
        self.ticks += 1;
        self.apply(env, visible);
        let elapsed = env.sim_time_ns.saturating_sub(self.start_ns);
        match self.duration_ns {
            Some(d) if elapsed >= d => Ok(EffectStatus::Expired),
            _ => Ok(EffectStatus::Running),
        }
    }

    fn on_detach(&mut self, env: &EffectEnv) -> Result<(), EffectError> {
        for snap in self.snapshot.drain(..) {
            env.cache.write_visual(snap);
        }
        Ok(())
    }
}

struct Slot {
    id: u64,
    attached: AtomicBool,
    effect: Mutex<Box<dyn Effect>>,
}

/// Shared handle to an effect; attach and detach through [`EffectManager`].
#[derive(Clone)]
pub struct EffectHandle {
    slot: Arc<Slot>,
}

static NEXT_EFFECT_ID: AtomicU64 = AtomicU64::new(1);

impl EffectHandle {
    pub fn new(effect: impl Effect + 'static) -> Self {
        EffectHandle {
            slot: Arc::new(Slot {
                id: NEXT_EFFECT_ID.fetch_add(1, Ordering::Relaxed),
                attached: AtomicBool::new(false),
                effect: Mutex::new(Box::new(effect)),
            }),
        }
    }

    pub fn is_attached(&self) -> bool {
        self.slot.attached.load(Ordering::SeqCst)
    }

    pub fn id(&self) -> u64 {
        self.slot.id
    }
}

impl std::fmt::Debug for EffectHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectHandle")
            .field("id", &self.slot.id)
            .field("attached", &self.is_attached())
            .finish()
    }
}

/// An effect failure caught during an update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectFailure {
    pub effect_id: u64,
    pub message: String,
}

/// Advances every attached effect once per tick, in attach order.
pub struct EffectManager {
    cache: Arc<SceneCache>,
    behaviours: Arc<BehaviourManager>,
    step_ns: u64,
    sim_time_ns: AtomicU64,
    attached: Mutex<Vec<EffectHandle>>,
}

impl EffectManager {
    pub fn new(cache: Arc<SceneCache>, behaviours: Arc<BehaviourManager>, step_ns: u64) -> Self {
        EffectManager {
            cache,
            behaviours,
            step_ns,
            sim_time_ns: AtomicU64::new(0),
            attached: Mutex::new(Vec::new()),
        }
    }

    fn env(&self) -> EffectEnv<'_> {
        EffectEnv {
            cache: &self.cache,
            behaviours: &self.behaviours,
            step_ns: self.step_ns,
            sim_time_ns: self.sim_time_ns.load(Ordering::SeqCst),
        }
    }

    /// Latest known simulation time; attach uses it as the effect's start.
    pub fn set_sim_time(&self, sim_time_ns: u64) {
        self.sim_time_ns.store(sim_time_ns, Ordering::SeqCst);
    }

    pub fn len(&self) -> usize {
        self.attached.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn attach(&self, handle: &EffectHandle) -> Result<(), FrameworkError> {
        let mut list = self.attached.lock();
        if handle.is_attached() {
            return Err(FrameworkError::EffectAttached);
        }
        handle
            .slot
            .effect
            .lock()
            .on_attach(&self.env())
            .map_err(|e| FrameworkError::Effect(e.to_string()))?;
        handle.slot.attached.store(true, Ordering::SeqCst);
        list.push(handle.clone());
        Ok(())
    }

    pub fn detach(&self, handle: &EffectHandle) -> Result<(), FrameworkError> {
        let mut list = self.attached.lock();
        let idx = list
            .iter()
            .position(|h| Arc::ptr_eq(&h.slot, &handle.slot))
            .ok_or(FrameworkError::EffectNotAttached)?;
        list.remove(idx);
        handle.slot.attached.store(false, Ordering::SeqCst);
        handle
            .slot
            .effect
            .lock()
            .on_detach(&self.env())
            .map_err(|e| FrameworkError::Effect(e.to_string()))
    }

    /// One update of every attached effect; expired effects are detached afterwards.
    pub fn update(&self, sim_time_ns: u64) -> Vec<EffectFailure> {
        self.set_sim_time(sim_time_ns);
        let env = self.env();
        let mut list = self.attached.lock();
        let mut failures = Vec::new();
        let mut expired = Vec::new();
        for (i, h) in list.iter().enumerate() {
            let mut effect = h.slot.effect.lock();
            let outcome = catch_unwind(AssertUnwindSafe(|| effect.on_update(&env)));
            let message = match outcome {
                Ok(Ok(EffectStatus::Running)) => continue,
                Ok(Ok(EffectStatus::Expired)) => {
                    if let Err(e) = effect.on_detach(&env) {
                        failures.push(EffectFailure {
                            effect_id: h.slot.id,
                            message: e.to_string(),
                        });
                    }
                    expired.push(i);
                    continue;
                }
                Ok(Err(e)) => e.to_string(),
                Err(p) => panic_message(p.as_ref()),
            };
            log::warn!("effect {} failed: {message}", h.slot.id);
            failures.push(EffectFailure {
                effect_id: h.slot.id,
                message,
            });
        }
        for i in expired.into_iter().rev() {
            let h = list.remove(i);
            h.slot.attached.store(false, Ordering::SeqCst);
        }
        failures
    }
}
