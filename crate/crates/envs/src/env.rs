use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use simsync_framework::SyncContext;

use crate::{Action, EnvError, Observation, Space};

/// Area-level extra information returned by every step.
pub type Info = BTreeMap<String, serde_json::Value>;

pub type AreaError = Box<dyn std::error::Error + Send + Sync>;

/// One controllable entity of an area.
pub trait Agent: Send {
    fn name(&self) -> &str;
    fn get_next_state(&self) -> Observation;
    fn on_action_received(&mut self, action: &Action);
    fn get_reward(&self) -> f64;
    fn is_done(&self) -> bool;
}

/// A scene: its agents, their spaces and how to start an episode.
pub trait Area: Send {
    fn get_agents(&self) -> Vec<&dyn Agent>;
    fn get_agents_mut(&mut self) -> Vec<&mut dyn Agent>;
    fn get_info(&self) -> Info;
    /// Puts the scene back to a starting state: re-place transforms, reset trees.
    fn reset(&mut self, ctx: &SyncContext) -> Result<(), AreaError>;
    fn observation_space(&self) -> BTreeMap<String, Space>;
    fn action_space(&self) -> BTreeMap<String, Space>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvConfig {
    /// Simulation ticks advanced by one `step`.
    pub ticks_per_step: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { ticks_per_step: 10 }
    }
}

/// What `step` returns. Every map is keyed by exactly the area's agent names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub state: BTreeMap<String, Observation>,
    pub reward: BTreeMap<String, f64>,
    pub done: BTreeMap<String, bool>,
    /// The actions applied, including substituted no-ops.
    pub action: BTreeMap<String, Action>,
    pub info: Info,
}

impl StepResult {
    pub fn all_done(&self) -> bool {
        self.done.values().all(|d| *d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Episode {
    NotStarted,
    Running,
    Finished,
}

/// Reset/step wrapper around an area, driving the paused server clock.
///
/// Done flags latch for the rest of an episode. An agent that is done receives its no-op
/// action; once every agent is done, `step` fails until `reset` is called.
pub struct Environment<A: Area> {
    ctx: SyncContext,
    area: A,
    config: EnvConfig,
    names: Vec<String>,
    observation_space: BTreeMap<String, Space>,
    action_space: BTreeMap<String, Space>,
    done: BTreeMap<String, bool>,
    episode: Episode,
    steps: u64,
}

impl<A: Area> Environment<A> {
    pub fn new(ctx: SyncContext, area: A, config: EnvConfig) -> Result<Self, EnvError> {
        let names: Vec<String> = area.get_agents().iter().map(|a| a.name().to_string()).collect();
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(EnvError::Config("agent names must be unique within an area".into()));
        }
        let observation_space = area.observation_space();
        let action_space = area.action_space();
        for (what, map) in [("observation", &observation_space), ("action", &action_space)] {
            if map.keys().collect::<BTreeSet<_>>() != unique {
                return Err(EnvError::Config(format!("{what} spaces are not keyed by the agent names")));
            }
        }
        if config.ticks_per_step == 0 {
            return Err(EnvError::Config("ticks_per_step must be at least 1".into()));
        }
        Ok(Environment {
            ctx,
            area,
            config,
            names,
            observation_space,
            action_space,
            done: BTreeMap::new(),
            episode: Episode::NotStarted,
            steps: 0,
        })
    }

    pub fn context(&self) -> &SyncContext {
        &self.ctx
    }

    pub fn area(&self) -> &A {
        &self.area
    }

    pub fn area_mut(&mut self) -> &mut A {
        &mut self.area
    }

    pub fn config(&self) -> EnvConfig {
        self.config
    }

    pub fn agent_names(&self) -> &[String] {
        &self.names
    }

    /// Steps taken in the current episode.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn observation_space(&self) -> &BTreeMap<String, Space> {
        &self.observation_space
    }

    pub fn action_space(&self) -> &BTreeMap<String, Space> {
        &self.action_space
    }

    pub fn spaces(&self) -> (&BTreeMap<String, Space>, &BTreeMap<String, Space>) {
        (&self.observation_space, &self.action_space)
    }

    /// Starts a fresh episode and returns every agent's first observation.
    pub fn reset(&mut self) -> Result<BTreeMap<String, Observation>, EnvError> {
        self.episode = Episode::NotStarted;
        self.area.reset(&self.ctx).map_err(EnvError::Area)?;
        self.done = self.names.iter().map(|n| (n.clone(), false)).collect();
        self.steps = 0;
        self.episode = Episode::Running;
        Ok(self.observations())
    }

    fn observations(&self) -> BTreeMap<String, Observation> {
        self.area
            .get_agents()
            .into_iter()
            .map(|a| (a.name().to_string(), a.get_next_state()))
            .collect()
    }

    /// Applies `actions`, dispatches `update` once and advances `ticks_per_step` ticks.
    ///
    /// Unknown agents and actions outside their space are rejected before anything changes.
    pub fn step(&mut self, actions: &BTreeMap<String, Action>) -> Result<StepResult, EnvError> {
        match self.episode {
            Episode::NotStarted => return Err(EnvError::NotReset),
            Episode::Finished => return Err(EnvError::EpisodeFinished),
            Episode::Running => {}
        }
        for (name, action) in actions {
            let space = self
                .action_space
                .get(name)
                .ok_or_else(|| EnvError::UnknownAgent(name.clone()))?;
            if !space.contains(action) {
                return Err(EnvError::InvalidAction {
                    agent: name.clone(),
                    action: action.clone(),
                });
            }
        }
        let applied: BTreeMap<String, Action> = self
            .names
            .iter()
            .map(|n| {
                let a = match actions.get(n) {
                    Some(a) if !self.done[n] => a.clone(),
                    _ => self.action_space[n].noop(),
                };
                (n.clone(), a)
            })
            .collect();
        for agent in self.area.get_agents_mut() {
            agent.on_action_received(&applied[agent.name()]);
        }
        self.ctx.dispatch_update();
        self.ctx.step_clock(self.config.ticks_per_step)?;
        self.steps += 1;

        let mut result = StepResult {
            state: BTreeMap::new(),
            reward: BTreeMap::new(),
            done: BTreeMap::new(),
            action: applied,
            info: self.area.get_info(),
        };
        for agent in self.area.get_agents() {
            let name = agent.name().to_string();
            let done = self.done[&name] || agent.is_done();
            self.done.insert(name.clone(), done);
            result.state.insert(name.clone(), agent.get_next_state());
            result.reward.insert(name.clone(), agent.get_reward());
            result.done.insert(name, done);
        }
        if result.all_done() {
            self.episode = Episode::Finished;
        }
        Ok(result)
    }
}
