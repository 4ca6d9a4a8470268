//! Two agents chasing a wandering goal marker on a plane.
//!
//! Actions are `DISCRETE(5)`: stay, +x, -x, +y, -y. Observations are
//! `[x, y, goal_x, goal_y]`. The reward is minus the distance to the goal; an agent is done
//! within [`CATCH_RADIUS`] of it or after `max_steps` actions. The goal walks between the
//! arena corners, picking the next corner with a seeded random selector.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use simsync_btree::{Node, Status};
use simsync_core::{Pose, Vector3};
use simsync_framework::model_xml::ModelXmlDocument;
use simsync_framework::{Behaviour, BehaviourScript, HookResult, RandomSource, SyncContext, Transform};

use crate::{Action, Agent, Area, AreaError, EnvError, Info, Observation, Space};

pub const ARENA_HALF_WIDTH: f64 = 5.0;
pub const CATCH_RADIUS: f64 = 0.3;
/// Agent speed in m/s.
pub const AGENT_SPEED: f64 = 20.0;
pub const GOAL_SPEED: f64 = 2.0;

type Shared<T> = Arc<Mutex<T>>;

struct Mover {
    velocity: Shared<[f64; 2]>,
    dt: f64,
}

impl BehaviourScript for Mover {
    fn fixed_update(&mut self, b: &Behaviour, _t: u64) -> HookResult {
        let v = *self.velocity.lock().unwrap();
        if v == [0.0, 0.0] {
            return Ok(());
        }
        let p = b.transform().position();
        let clamp = |x: f64| x.clamp(-ARENA_HALF_WIDTH, ARENA_HALF_WIDTH);
        b.transform()
            .set_position(Vector3::new(clamp(p.x + v[0] * self.dt), clamp(p.y + v[1] * self.dt), p.z))?;
        Ok(())
    }
}

struct GoalScript {
    tree: Shared<Node>,
    position: Shared<[f64; 2]>,
}

impl BehaviourScript for GoalScript {
    fn fixed_update(&mut self, b: &Behaviour, _t: u64) -> HookResult {
        self.tree.lock().unwrap().tick();
        let [x, y] = *self.position.lock().unwrap();
        b.transform().set_position(Vector3::new(x, y, 0.5))?;
        Ok(())
    }
}

fn corner_walk(position: Shared<[f64; 2]>, dt: f64, seed: u64) -> Node {
    let h = ARENA_HALF_WIDTH - 1.0;
    let corners = [[h, h], [-h, h], [-h, -h], [h, -h]];
    let legs = corners
        .iter()
        .enumerate()
        .map(|(i, target)| {
            let position = position.clone();
            let target = *target;
            Node::action(format!("walk_to_corner{i}"), move || {
                let mut p = position.lock().unwrap();
                let (dx, dy) = (target[0] - p[0], target[1] - p[1]);
                let d = dx.hypot(dy);
                let step = GOAL_SPEED * dt;
                if d <= step {
                    *p = target;
                    Status::Success
                } else {
                    p[0] += dx / d * step;
                    p[1] += dy / d * step;
                    Status::Running
                }
            })
        })
        .collect();
    Node::random_selector(legs, seed)
}

pub struct ChaseAgent {
    name: String,
    behaviour: Behaviour,
    velocity: Shared<[f64; 2]>,
    goal: Transform,
    steps: u32,
    max_steps: u32,
}

impl ChaseAgent {
    pub fn behaviour(&self) -> &Behaviour {
        &self.behaviour
    }

    fn distance(&self) -> f64 {
        let a = self.behaviour.transform().position();
        let g = self.goal.position();
        (a.x - g.x).hypot(a.y - g.y)
    }
}

impl Agent for ChaseAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn get_next_state(&self) -> Observation {
        let a = self.behaviour.transform().position();
        let g = self.goal.position();
        vec![a.x, a.y, g.x, g.y]
    }

    fn on_action_received(&mut self, action: &Action) {
        self.steps += 1;
        let dir = match action {
            Action::Discrete(1) => [1.0, 0.0],
            Action::Discrete(2) => [-1.0, 0.0],
            Action::Discrete(3) => [0.0, 1.0],
            Action::Discrete(4) => [0.0, -1.0],
            _ => [0.0, 0.0],
        };
        *self.velocity.lock().unwrap() = [dir[0] * AGENT_SPEED, dir[1] * AGENT_SPEED];
    }

    fn get_reward(&self) -> f64 {
        -self.distance()
    }

    fn is_done(&self) -> bool {
        self.distance() < CATCH_RADIUS || self.steps >= self.max_steps
    }
}

pub struct ChaseArea {
    agents: Vec<ChaseAgent>,
    goal: Behaviour,
    goal_position: Shared<[f64; 2]>,
    goal_tree: Shared<Node>,
    rng: RandomSource,
    episodes: u64,
}

impl ChaseArea {
    /// Spawns `agent0`, `agent1` and the goal marker.
    pub fn spawn(ctx: &SyncContext, seed: u64, max_steps: u32) -> Result<Self, EnvError> {
        let dt = ctx.config().step_ns as f64 * 1e-9;
        let goal_position = Arc::new(Mutex::new([0.0, 0.0]));
        let goal_tree = Arc::new(Mutex::new(corner_walk(goal_position.clone(), dt, seed)));
        let goal = Behaviour::new(
            "goal",
            "goal",
            ctx.model_spawner(&ModelXmlDocument::single_box("goal", Vector3::new(0.2, 0.2, 1.0))),
            GoalScript {
                tree: goal_tree.clone(),
                position: goal_position.clone(),
            },
        )?;
        ctx.spawn_behaviour(&goal, Pose::from_position(Vector3::new(0.0, 0.0, 0.5)))?;
        let body = ModelXmlDocument::single_box("agent", Vector3::new(0.4, 0.4, 0.4));
        let mut agents = Vec::new();
        for i in 0..2 {
            let name = format!("agent{i}");
            let velocity = Arc::new(Mutex::new([0.0, 0.0]));
            let b = Behaviour::new(
                name.clone(),
                "agent",
                ctx.model_spawner(&body),
                Mover {
                    velocity: velocity.clone(),
                    dt,
                },
            )?;
            ctx.spawn_behaviour(&b, Pose::from_position(Vector3::new(0.0, 0.0, 0.2)))?;
            agents.push(ChaseAgent {
                name,
                goal: goal.transform().clone(),
                behaviour: b,
                velocity,
                steps: 0,
                max_steps,
            });
        }
        Ok(ChaseArea {
            agents,
            goal,
            goal_position,
            goal_tree,
            rng: RandomSource::new(seed),
            episodes: 0,
        })
    }

    pub fn goal(&self) -> &Behaviour {
        &self.goal
    }

    pub fn agents(&self) -> &[ChaseAgent] {
        &self.agents
    }
}

impl Area for ChaseArea {
    fn get_agents(&self) -> Vec<&dyn Agent> {
        self.agents.iter().map(|a| a as &dyn Agent).collect()
    }

    fn get_agents_mut(&mut self) -> Vec<&mut dyn Agent> {
        self.agents.iter_mut().map(|a| a as &mut dyn Agent).collect()
    }

    fn get_info(&self) -> Info {
        let g = self.goal.transform().position();
        let mut info = Info::new();
        info.insert("episode".into(), self.episodes.into());
        info.insert("goal".into(), serde_json::json!([g.x, g.y]));
        info
    }

    fn reset(&mut self, _ctx: &SyncContext) -> Result<(), AreaError> {
        self.episodes += 1;
        self.goal_tree.lock().unwrap().reset();
        *self.goal_position.lock().unwrap() = [0.0, 0.0];
        self.goal.transform().set_position(Vector3::new(0.0, 0.0, 0.5))?;
        let h = ARENA_HALF_WIDTH - 0.5;
        for agent in &mut self.agents {
            *agent.velocity.lock().unwrap() = [0.0, 0.0];
            agent.steps = 0;
            let (x, y) = (self.rng.uniform(-h, h), self.rng.uniform(-h, h));
            agent.behaviour.transform().set_position(Vector3::new(x, y, 0.2))?;
        }
        Ok(())
    }

    fn observation_space(&self) -> BTreeMap<String, Space> {
        let space = Space::uniform_box(-ARENA_HALF_WIDTH, ARENA_HALF_WIDTH, vec![4]).expect("valid bounds");
        self.agents.iter().map(|a| (a.name.clone(), space.clone())).collect()
    }

    fn action_space(&self) -> BTreeMap<String, Space> {
        let space = Space::discrete(5).expect("n > 0");
        self.agents.iter().map(|a| (a.name.clone(), space.clone())).collect()
    }
}
