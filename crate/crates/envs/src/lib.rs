//! Reset/step environments for reinforcement learning over a synchronized scene.
//!
//! An [`Area`] owns [`Agent`]s and knows how to start an episode. [`Environment`] wraps an
//! area and a [`SyncContext`](simsync_framework::SyncContext) on a paused server: each
//! `step` delivers actions, dispatches behaviours' `update` once and advances the clock
//! `ticks_per_step` ticks, so every behaviour's `fixed_update` runs that many times.

pub mod demo;
mod env;
mod space;

pub use env::{Agent, Area, AreaError, EnvConfig, Environment, Info, StepResult};
pub use space::{Action, Observation, Space};

use std::collections::BTreeMap;

use simsync_framework::{FrameworkError, RandomSource};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Framework(#[from] FrameworkError),
    #[error("area failed: {0}")]
    Area(AreaError),
    #[error("invalid environment: {0}")]
    Config(String),
    #[error("invalid space: {0}")]
    Space(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("action {action:?} is outside the action space of {agent:?}")]
    InvalidAction { agent: String, action: Action },
    #[error("call reset before step")]
    NotReset,
    #[error("every agent is done; call reset to start a new episode")]
    EpisodeFinished,
}

/// Runs `steps` steps of uniformly random actions, resetting whenever an episode finishes.
/// Resets first if no episode is running.
pub fn random_rollout<A: Area>(
    env: &mut Environment<A>,
    steps: usize,
    rng: &mut RandomSource,
) -> Result<Vec<StepResult>, EnvError> {
    let mut out = Vec::with_capacity(steps);
    let mut need_reset = true;
    for _ in 0..steps {
        if need_reset {
            env.reset()?;
        }
        let actions: BTreeMap<String, Action> = env
            .action_space()
            .iter()
            .map(|(name, space)| (name.clone(), space.sample(rng)))
            .collect();
        let r = env.step(&actions)?;
        need_reset = r.all_done();
        out.push(r);
    }
    Ok(out)
}
