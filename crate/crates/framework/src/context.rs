//! The framework root: one connection, its trackers, behaviours, effects and caches.

use std::collections::VecDeque;
use std::net::ToSocketAddrs;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Weak};
use std::thread::JoinHandle;

use parking_lot::{Condvar, Mutex, ReentrantMutex};
use simsync_core::Pose;
use simsync_protocol::model_xml::ModelXmlDocument;
use simsync_protocol::{
    Client, ClientError, LinkQuery, SubscriptionId, Topic, TopicMessage, VisualQuery,
};

use crate::behaviour::{Behaviour, BehaviourManager, DispatchKind, HookFailure, Lifecycle, ModelSpawner};
use crate::cache::SceneCache;
use crate::effects::{EffectHandle, EffectManager};
use crate::randomizer::{RandomSource, Randomizer, RandomizerWrites};
use crate::tracker::{TickOutcome, TrackerError, TrackerManager, TrackerPriority, UpdateLoop};
use crate::FrameworkError;

pub const GETTER_TRACKER: &str = "getter";
pub const FIXED_UPDATE_TRACKER: &str = "fixed_update";
pub const EFFECT_TRACKER: &str = "effects";
pub const SETTER_TRACKER: &str = "setter";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextConfig {
    /// Server step size, used to convert effect intervals into ticks.
    pub step_ns: u64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig { step_ns: 1_000_000 }
    }
}

/// Something that went wrong without failing the caller: rejected entries, hook failures,
/// stale refreshes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub sim_time_ns: u64,
    pub source: String,
    pub message: String,
}

const MAX_DIAGNOSTICS: usize = 1024;

struct Inner {
    client: Arc<Client>,
    config: ContextConfig,
    trackers: Arc<TrackerManager>,
    update_loop: UpdateLoop,
    behaviours: Arc<BehaviourManager>,
    cache: Arc<SceneCache>,
    effects: Arc<EffectManager>,
    diagnostics: Mutex<VecDeque<Diagnostic>>,
    sim_time_ns: AtomicU64,
    // Held by each tick cycle and by lifecycle calls, so they never interleave. Reentrant so
    // hooks running inside a cycle may spawn or attach.
    exec: Arc<ReentrantMutex<()>>,
}

/// Cheap to clone; clones share everything.
#[derive(Clone)]
pub struct SyncContext {
    inner: Arc<Inner>,
}

impl SyncContext {
    pub fn connect(addr: impl ToSocketAddrs + std::fmt::Debug, config: ContextConfig) -> Result<Self, FrameworkError> {
        Self::new(Client::connect(addr)?, config)
    }

    /// Registers the default trackers: getter (HIGH), fixed-update dispatcher (NORMAL),
    /// effect manager (NORMAL), setter (LOW).
    pub fn new(client: Client, config: ContextConfig) -> Result<Self, FrameworkError> {
        let now = client.advance_clock(0)?;
        let trackers = Arc::new(TrackerManager::new());
        let behaviours = Arc::new(BehaviourManager::new());
        let cache = Arc::new(SceneCache::new());
        let effects = Arc::new(EffectManager::new(
            Arc::clone(&cache),
            Arc::clone(&behaviours),
            config.step_ns,
        ));
        effects.set_sim_time(now);
        let exec = Arc::new(ReentrantMutex::new(()));
        let inner = Arc::new(Inner {
            client: Arc::new(client),
            config,
            update_loop: UpdateLoop::new(Arc::clone(&trackers)).with_cycle_lock(Arc::clone(&exec)),
            trackers,
            behaviours,
            cache,
            effects,
            diagnostics: Mutex::new(VecDeque::new()),
            sim_time_ns: AtomicU64::new(now),
            exec,
        });

        let weak = Arc::downgrade(&inner);
        inner.update_loop.add_cycle_start_hook(move |t| {
            if let Some(inner) = weak.upgrade() {
                inner.sim_time_ns.store(t, Ordering::SeqCst);
                inner.behaviours.begin_cycle();
            }
        });
        Self::register_default(&inner, GETTER_TRACKER, TrackerPriority::High, Inner::run_getter)?;
        Self::register_default(&inner, FIXED_UPDATE_TRACKER, TrackerPriority::Normal, |inner, t| {
            for f in inner.behaviours.dispatch(DispatchKind::FixedUpdate, t) {
                inner.hook_failure(t, f);
            }
            Ok(())
        })?;
        Self::register_default(&inner, EFFECT_TRACKER, TrackerPriority::Normal, |inner, t| {
            for f in inner.effects.update(t) {
                inner.diagnose(t, format!("effect {}", f.effect_id), f.message);
            }
            Ok(())
        })?;
        Self::register_default(&inner, SETTER_TRACKER, TrackerPriority::Low, Inner::run_setter)?;
        Ok(SyncContext { inner })
    }

    fn register_default(
        inner: &Arc<Inner>,
        name: &str,
        priority: TrackerPriority,
        f: fn(&Inner, u64) -> Result<(), TrackerError>,
    ) -> Result<(), FrameworkError> {
        let weak: Weak<Inner> = Arc::downgrade(inner);
        inner.trackers.register_fn(name, priority, move |t| match weak.upgrade() {
            Some(inner) => f(&inner, t),
            None => Ok(()),
        })?;
        Ok(())
    }

    pub fn client(&self) -> &Arc<Client> {
        &self.inner.client
    }

    pub fn config(&self) -> ContextConfig {
        self.inner.config
    }

    pub fn trackers(&self) -> &Arc<TrackerManager> {
        &self.inner.trackers
    }

    pub fn update_loop(&self) -> &UpdateLoop {
        &self.inner.update_loop
    }

    pub fn behaviours(&self) -> &Arc<BehaviourManager> {
        &self.inner.behaviours
    }

    pub fn cache(&self) -> &Arc<SceneCache> {
        &self.inner.cache
    }

    pub fn effects(&self) -> &Arc<EffectManager> {
        &self.inner.effects
    }

    /// Simulation time of the most recent cycle (or of connection, before any).
    pub fn sim_time_ns(&self) -> u64 {
        self.inner.sim_time_ns.load(Ordering::SeqCst)
    }

    /// Runs one update cycle for a clock tick.
    pub fn on_clock_tick(&self, sim_time_ns: u64) -> TickOutcome {
        self.inner.update_loop.on_clock_tick(sim_time_ns)
    }

    /// Paused-clock stepping: advances the server one tick at a time and runs a cycle after
    /// each. Returns the final simulation time.
    pub fn step_clock(&self, ticks: u64) -> Result<u64, FrameworkError> {
        let mut t = self.sim_time_ns();
        for _ in 0..ticks {
            t = self.inner.client.advance_clock(1)?;
            self.on_clock_tick(t);
        }
        Ok(t)
    }

    /// Runs a cycle per published clock tick until the follower is dropped. Do not combine
    /// with [`step_clock`](Self::step_clock).
    pub fn follow_clock(&self) -> Result<ClockFollower, FrameworkError> {
        ClockFollower::start(self.clone())
    }

    /// Invokes every behaviour's `update` hook once.
    pub fn dispatch_update(&self) -> Vec<HookFailure> {
        let _g = self.inner.exec.lock();
        let t = self.sim_time_ns();
        let failures = self.inner.behaviours.dispatch(DispatchKind::Update, t);
        for f in &failures {
            self.inner.hook_failure(t, f.clone());
        }
        failures
    }

    pub fn register_behaviour(&self, b: &Behaviour) -> Result<(), FrameworkError> {
        self.inner.behaviours.register(b)
    }

    pub fn behaviour(&self, name: &str) -> Option<Behaviour> {
        self.inner.behaviours.get(name)
    }

    pub fn behaviours_with_tag(&self, tag: &str) -> Vec<Behaviour> {
        self.inner.behaviours.find_by_tag(tag)
    }

    /// A spawner for `document` bound to this context's connection.
    pub fn model_spawner(&self, document: &ModelXmlDocument) -> Arc<ModelSpawner> {
        Arc::new(ModelSpawner::new(Arc::clone(&self.inner.client), document))
    }

    /// Registers `b` if needed, spawns its model, discovers its links and visuals and starts
    /// syncing its transform. On failure the behaviour is left unspawned and, if this call
    /// registered it, unregistered again.
    pub fn spawn_behaviour(&self, b: &Behaviour, pose: Pose) -> Result<(), FrameworkError> {
        let _g = self.inner.exec.lock();
        match b.lifecycle() {
            Lifecycle::Created => {}
            Lifecycle::Spawned => return Err(FrameworkError::AlreadySpawned(b.name().into())),
            Lifecycle::Deleted => return Err(FrameworkError::NotAlive(b.name().into())),
        }
        let registered_here = if self.inner.behaviours.is_registered(b) {
            false
        } else {
            self.inner.behaviours.register(b)?;
            true
        };
        let rollback = |spawned: bool| {
            if spawned {
                if let Err(e) = b.spawner().delete(b.name()) {
                    log::warn!("rollback of '{}' failed: {e}", b.name());
                }
            }
            if registered_here {
                self.inner.behaviours.unregister(b.name());
            }
        };
        if let Err(e) = b.spawner().spawn(b.name(), pose) {
            rollback(false);
            return Err(e.into());
        }
        let discovered = (|| -> Result<_, ClientError> {
            let client = &self.inner.client;
            let state = client.get_model_state(b.name())?;
            let links = client.get_link_states(LinkQuery {
                keys: Vec::new(),
                models: vec![b.name().to_string()],
            })?;
            let visuals = client.get_visual_states(VisualQuery {
                keys: Vec::new(),
                models: vec![b.name().to_string()],
            })?;
            Ok((state, links, visuals))
        })();
        let (state, links, visuals) = match discovered {
            Ok(d) => d,
            Err(e) => {
                rollback(true);
                return Err(e.into());
            }
        };
        let links: Vec<_> = links.into_iter().filter_map(|e| e.state).collect();
        let visuals: Vec<_> = visuals.into_iter().filter_map(|e| e.state).collect();
        b.set_parts(
            links.iter().map(|l| l.key()).collect(),
            visuals.iter().map(|v| v.key()).collect(),
        );
        for l in links {
            self.inner.cache.track_link(l);
        }
        for v in visuals {
            self.inner.cache.track_visual(v);
        }
        b.transform().activate(state);
        b.set_lifecycle(Lifecycle::Spawned);
        Ok(())
    }

    /// Deletes the model, deregisters the behaviour and makes its transform inert.
    pub fn delete_behaviour(&self, b: &Behaviour) -> Result<(), FrameworkError> {
        let _g = self.inner.exec.lock();
        if b.lifecycle() != Lifecycle::Spawned {
            return Err(FrameworkError::NotSpawned(b.name().into()));
        }
        b.spawner().delete(b.name())?;
        b.transform().deactivate();
        self.inner.cache.untrack_model(b.name());
        self.inner.behaviours.unregister(b.name());
        b.set_parts(Vec::new(), Vec::new());
        b.set_lifecycle(Lifecycle::Deleted);
        Ok(())
    }

    pub fn attach_effect(&self, effect: &EffectHandle) -> Result<(), FrameworkError> {
        let _g = self.inner.exec.lock();
        self.inner.effects.attach(effect)
    }

    pub fn detach_effect(&self, effect: &EffectHandle) -> Result<(), FrameworkError> {
        let _g = self.inner.exec.lock();
        self.inner.effects.detach(effect)
    }

    /// Starts mirroring server lights. Unknown names fail with a NOT_FOUND rejection.
    pub fn track_lights<S: AsRef<str>>(&self, names: &[S]) -> Result<(), FrameworkError> {
        let _g = self.inner.exec.lock();
        let missing: Vec<String> = names
            .iter()
            .map(|n| n.as_ref().to_string())
            .filter(|n| self.inner.cache.light(n).is_none())
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let results = self.inner.client.get_light_states(&missing)?;
        for (name, entry) in missing.iter().zip(results) {
            match entry.state {
                Some(s) => self.inner.cache.track_light(s),
                None => {
                    return Err(FrameworkError::Rejected {
                        name: name.clone(),
                        status: entry.status,
                    })
                }
            }
        }
        Ok(())
    }

    /// Runs one randomization step and queues its writes for the next flush.
    pub fn randomize(
        &self,
        randomizer: &mut dyn Randomizer,
        rng: &mut RandomSource,
    ) -> Result<RandomizerWrites, FrameworkError> {
        let _g = self.inner.exec.lock();
        self.track_lights(&randomizer.required_lights())?;
        let writes = randomizer.randomize(&self.inner.cache, rng)?;
        for v in &writes.visuals {
            self.inner.cache.write_visual(v.clone());
        }
        for l in &writes.lights {
            self.inner.cache.write_light(l.clone());
        }
        if let Some(d) = &writes.diagnostic {
            self.inner.diagnose(self.sim_time_ns(), "randomizer".into(), d.clone());
        }
        Ok(writes)
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.inner.diagnostics.lock().iter().cloned().collect()
    }

    pub fn take_diagnostics(&self) -> Vec<Diagnostic> {
        self.inner.diagnostics.lock().drain(..).collect()
    }
}

impl Inner {
    fn diagnose(&self, sim_time_ns: u64, source: String, message: String) {
        log::debug!("{source}: {message}");
        let mut d = self.diagnostics.lock();
        if d.len() == MAX_DIAGNOSTICS {
            d.pop_front();
        }
        d.push_back(Diagnostic {
            sim_time_ns,
            source,
            message,
        });
    }

    fn hook_failure(&self, t: u64, f: HookFailure) {
        self.diagnose(t, format!("{:?} '{}'", f.kind, f.behaviour), f.message);
    }

    fn live_behaviours(&self) -> Vec<Behaviour> {
        self.behaviours
            .all()
            .into_iter()
            .filter(|b| b.transform().is_alive())
            .collect()
    }

    fn run_getter(&self, t: u64) -> Result<(), TrackerError> {
        let live = self.live_behaviours();
        if !live.is_empty() {
            let names: Vec<&str> = live.iter().map(|b| b.name()).collect();
            match self.client.get_model_states(&names) {
                Ok(results) => {
                    for (b, entry) in live.iter().zip(results) {
                        match entry.state {
                            Some(s) => b.transform().merge_from_server(&s),
                            None => {
                                b.transform().mark_stale();
                                self.diagnose(t, GETTER_TRACKER.into(), format!("model '{}' not found", b.name()));
                            }
                        }
                    }
                }
                Err(e) => {
                    for b in &live {
                        b.transform().mark_stale();
                    }
                    return Err(e.into());
                }
            }
        }
        self.cache.refresh(&self.client)?;
        Ok(())
    }

    fn run_setter(&self, t: u64) -> Result<(), TrackerError> {
        let dirty: Vec<_> = self
            .live_behaviours()
            .into_iter()
            .filter_map(|b| b.transform().dirty_snapshot().map(|s| (b, s)))
            .collect();
        if !dirty.is_empty() {
            let states: Vec<_> = dirty.iter().map(|(_, s)| s.state.clone()).collect();
            let statuses = self.client.set_model_states(&states)?;
            for ((b, snap), status) in dirty.iter().zip(statuses) {
                if status.is_ok() {
                    b.transform().clear_dirty_if(snap.generation);
                } else {
                    self.diagnose(t, SETTER_TRACKER.into(), format!("model '{}' rejected: {status:?}", b.name()));
                }
            }
        }
        for r in self.cache.flush(&self.client)? {
            self.diagnose(t, SETTER_TRACKER.into(), format!("{} '{}' rejected: {:?}", r.kind, r.name, r.status));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Latest {
    tick: Option<u64>,
    stop: bool,
}

/// Runs the context's update loop from the server's clock topic on a dedicated thread.
/// Ticks that arrive while a cycle runs coalesce into one follow-up cycle.
pub struct ClockFollower {
    ctx: SyncContext,
    subscription: Option<SubscriptionId>,
    shared: Arc<(Mutex<Latest>, Condvar)>,
    running: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ClockFollower {
    fn start(ctx: SyncContext) -> Result<Self, FrameworkError> {
        let shared = Arc::new((Mutex::new(Latest::default()), Condvar::new()));
        let running = Arc::new(AtomicBool::new(true));
        let thread = {
            let ctx = ctx.clone();
            let shared = Arc::clone(&shared);
            let running = Arc::clone(&running);
            std::thread::Builder::new()
                .name("simsync-clock".into())
                .spawn(move || loop {
                    let tick = {
                        let (lock, cv) = &*shared;
                        let mut latest = lock.lock();
                        while latest.tick.is_none() && !latest.stop {
                            cv.wait(&mut latest);
                        }
                        if latest.stop {
                            running.store(false, Ordering::SeqCst);
                            return;
                        }
                        latest.tick.take()
                    };
                    if let Some(t) = tick {
                        ctx.on_clock_tick(t);
                    }
                })
                .map_err(|e| FrameworkError::Client(ClientError::Io(e)))?
        };
        let handler_shared = Arc::clone(&shared);
        let subscription = ctx.client().subscribe(Topic::Clock, move |m| {
            if let TopicMessage::Clock(c) = m {
                let (lock, cv) = &*handler_shared;
                lock.lock().tick = Some(c.sim_time_ns);
                cv.notify_one();
            }
        });
        let mut follower = ClockFollower {
            ctx,
            subscription: None,
            shared,
            running,
            thread: Some(thread),
        };
        follower.subscription = Some(subscription?);
        Ok(follower)
    }

    pub fn is_running(&self) -> bool {
        self.running.load(Ordering::SeqCst)
    }

    /// Unsubscribes and joins the executor thread.
    pub fn stop(&mut self) {
        if let Some(id) = self.subscription.take() {
            let _ = self.ctx.client().unsubscribe(id);
        }
        {
            let (lock, cv) = &*self.shared;
            lock.lock().stop = true;
            cv.notify_all();
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ClockFollower {
    fn drop(&mut self) {
        self.stop();
    }
}
