//! Prioritized per-tick callbacks and the update loop that drives them.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use parking_lot::{Condvar, Mutex, ReentrantMutex};

use crate::FrameworkError;

/// Invocation group. All `High` trackers run before any `Normal`, all `Normal` before any `Low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrackerPriority {
    High,
    Normal,
    Low,
}

impl TrackerPriority {
    pub const ALL: [TrackerPriority; 3] = [
        TrackerPriority::High,
        TrackerPriority::Normal,
        TrackerPriority::Low,
    ];
}

pub type TrackerError = Box<dyn std::error::Error + Send + Sync>;

/// Something to run once per simulation tick.
pub trait Tracker: Send + Sync {
    fn update_tracker(&self, sim_time_ns: u64) -> Result<(), TrackerError>;
}

/// Adapts a closure into a [`Tracker`].
pub struct FnTracker<F>(pub F);

impl<F> Tracker for FnTracker<F>
where
    F: Fn(u64) -> Result<(), TrackerError> + Send + Sync,
{
    fn update_tracker(&self, sim_time_ns: u64) -> Result<(), TrackerError> {
        (self.0)(sim_time_ns)
    }
}

/// Returned by [`TrackerManager::register`]; pass it back to deregister.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrackerHandle(u64);

struct Entry {
    handle: TrackerHandle,
    name: String,
    priority: TrackerPriority,
    tracker: Arc<dyn Tracker>,
}

/// A tracker failure caught during a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackerFailure {
    pub tracker: String,
    pub sim_time_ns: u64,
    pub message: String,
}

/// Registry of trackers in three priority groups; same-priority trackers run in
/// registration order.
#[derive(Default)]
pub struct TrackerManager {
    entries: Mutex<(u64, Vec<Entry>)>,
}

impl TrackerManager {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if a tracker with the same name, or the very same tracker object, is registered.
    pub fn register(
        &self,
        name: impl Into<String>,
        priority: TrackerPriority,
        tracker: Arc<dyn Tracker>,
    ) -> Result<TrackerHandle, FrameworkError> {
        let name = name.into();
        let mut guard = self.entries.lock();
        let (next, entries) = &mut *guard;
        if entries
            .iter()
            .any(|e| e.name == name || Arc::ptr_eq(&e.tracker, &tracker))
        {
            return Err(FrameworkError::DuplicateTracker(name));
        }
        *next += 1;
        let handle = TrackerHandle(*next);
        entries.push(Entry {
            handle,
            name,
            priority,
            tracker,
        });
        Ok(handle)
    }

    /// Registers a closure.
    pub fn register_fn<F>(
        &self,
        name: impl Into<String>,
        priority: TrackerPriority,
        f: F,
    ) -> Result<TrackerHandle, FrameworkError>
    where
        F: Fn(u64) -> Result<(), TrackerError> + Send + Sync + 'static,
    {
        self.register(name, priority, Arc::new(FnTracker(f)))
    }

    /// Returns false if the handle was not registered.
    pub fn deregister(&self, handle: TrackerHandle) -> bool {
        let mut guard = self.entries.lock();
        let before = guard.1.len();
        guard.1.retain(|e| e.handle != handle);
        guard.1.len() != before
    }

    pub fn len(&self) -> usize {
        self.entries.lock().1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tracker names in invocation order.
    pub fn invocation_order(&self) -> Vec<String> {
        self.snapshot().into_iter().map(|(n, _)| n).collect()
    }

    fn snapshot(&self) -> Vec<(String, Arc<dyn Tracker>)> {
        let guard = self.entries.lock();
        let mut out = Vec::with_capacity(guard.1.len());
        for p in TrackerPriority::ALL {
            out.extend(
                guard
                    .1
                    .iter()
                    .filter(|e| e.priority == p)
                    .map(|e| (e.name.clone(), Arc::clone(&e.tracker))),
            );
        }
        out
    }

    /// Runs every tracker once, in priority order. Failures and panics are isolated and
    /// returned; the remaining trackers still run.
    pub fn run_cycle(&self, sim_time_ns: u64) -> Vec<TrackerFailure> {
        let mut failures = Vec::new();
        for (name, tracker) in self.snapshot() {
            let outcome = catch_unwind(AssertUnwindSafe(|| tracker.update_tracker(sim_time_ns)));
            let message = match outcome {
                Ok(Ok(())) => continue,
                Ok(Err(e)) => e.to_string(),
                Err(panic) => panic_message(panic.as_ref()),
            };
            log::warn!("tracker '{name}' failed at {sim_time_ns} ns: {message}");
            failures.push(TrackerFailure {
                tracker: name,
                sim_time_ns,
                message,
            });
        }
        failures
    }
}

pub(crate) fn panic_message(panic: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = panic.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".to_string()
    }
}

#[derive(Default)]
struct Gate {
    running: bool,
    pending: Option<u64>,
    cycles: u64,
}

/// What [`UpdateLoop::on_clock_tick`] did with a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    /// Ran this tick, plus `follow_ups` coalesced cycles that queued up meanwhile.
    Ran { follow_ups: u64 },
    /// A cycle was in progress; the tick was queued, replacing any older queued tick.
    Queued,
}

/// Runs one tracker cycle per clock tick. A tick arriving while a cycle runs is queued; at
/// most one tick is queued, newer ones replacing older.
pub struct UpdateLoop {
    trackers: Arc<TrackerManager>,
    gate: Mutex<Gate>,
    idle: Condvar,
    failures: Mutex<Vec<TrackerFailure>>,
    on_cycle_start: Mutex<Vec<Box<dyn Fn(u64) + Send + Sync>>>,
    cycle_lock: Option<Arc<ReentrantMutex<()>>>,
}

const MAX_KEPT_FAILURES: usize = 1024;

impl UpdateLoop {
    pub fn new(trackers: Arc<TrackerManager>) -> Self {
        UpdateLoop {
            trackers,
            gate: Mutex::new(Gate::default()),
            idle: Condvar::new(),
            failures: Mutex::new(Vec::new()),
            on_cycle_start: Mutex::new(Vec::new()),
            cycle_lock: None,
        }
    }

    /// Each cycle holds `lock` while it runs, serializing it with other holders.
    pub fn with_cycle_lock(mut self, lock: Arc<ReentrantMutex<()>>) -> Self {
        self.cycle_lock = Some(lock);
        self
    }

    pub fn trackers(&self) -> &Arc<TrackerManager> {
        &self.trackers
    }

    /// Adds a hook that runs before the first tracker of every cycle.
    pub fn add_cycle_start_hook(&self, f: impl Fn(u64) + Send + Sync + 'static) {
        self.on_cycle_start.lock().push(Box::new(f));
    }

    pub fn on_clock_tick(&self, sim_time_ns: u64) -> TickOutcome {
        {
            let mut gate = self.gate.lock();
            if gate.running {
                gate.pending = Some(sim_time_ns);
                return TickOutcome::Queued;
            }
            gate.running = true;
        }
        self.cycle(sim_time_ns);
        let mut follow_ups = 0;
        loop {
            let next = {
                let mut gate = self.gate.lock();
                match gate.pending.take() {
                    Some(t) => t,
                    None => {
                        gate.running = false;
                        self.idle.notify_all();
                        break;
                    }
                }
            };
            follow_ups += 1;
            self.cycle(next);
        }
        TickOutcome::Ran { follow_ups }
    }

    fn cycle(&self, sim_time_ns: u64) {
        let _guard = self.cycle_lock.as_ref().map(|l| l.lock());
        for hook in self.on_cycle_start.lock().iter() {
            hook(sim_time_ns);
        }
        let failures = self.trackers.run_cycle(sim_time_ns);
        self.gate.lock().cycles += 1;
        if !failures.is_empty() {
            let mut kept = self.failures.lock();
            kept.extend(failures);
            let excess = kept.len().saturating_sub(MAX_KEPT_FAILURES);
            kept.drain(..excess);
        }
    }

    /// Completed cycles since creation.
    pub fn cycles(&self) -> u64 {
        self.gate.lock().cycles
    }

    /// Blocks until no cycle is running or queued.
    pub fn wait_idle(&self) {
        let mut gate = self.gate.lock();
        while gate.running {
            self.idle.wait(&mut gate);
        }
    }

    /// Removes and returns recorded tracker failures.
    pub fn take_failures(&self) -> Vec<TrackerFailure> {
        std::mem::take(&mut *self.failures.lock())
    }
}
