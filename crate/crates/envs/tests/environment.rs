use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use simsync_core::{Pose, Vector3};
use simsync_envs::demo::ChaseArea;
use simsync_envs::*;
use simsync_framework::model_xml::ModelXmlDocument;
use simsync_framework::{Behaviour, BehaviourScript, ContextConfig, HookResult, RandomSource, SyncContext};
use simsync_server::Server;

fn chase(seed: u64, max_steps: u32) -> (Server, Environment<ChaseArea>) {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    let area = ChaseArea::spawn(&ctx, seed, max_steps).unwrap();
    let env = Environment::new(ctx, area, EnvConfig::default()).unwrap();
    (server, env)
}

fn actions(pairs: &[(&str, Action)]) -> BTreeMap<String, Action> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[test]
fn reset_returns_one_observation_per_agent() {
    let (_server, mut env) = chase(1, 200);
    let obs = env.reset().unwrap();
    assert_eq!(obs.keys().collect::<Vec<_>>(), ["agent0", "agent1"]);
    let again = env.reset().unwrap();
    assert_eq!(again.len(), 2);
    assert_ne!(obs["agent0"], again["agent0"], "a second reset re-places agents");
    assert_eq!(env.steps(), 0);
}

#[test]
fn random_loop_yields_well_formed_steps() {
    let (_server, mut env) = chase(2, 200);
    let (obs_space, act_space) = env.spaces();
    let (obs_space, act_space) = (obs_space.clone(), act_space.clone());
    let results = random_rollout(&mut env, 100, &mut RandomSource::new(2)).unwrap();
    assert_eq!(results.len(), 100);
    let names = ["agent0", "agent1"];
    for r in &results {
        assert_eq!(r.state.keys().collect::<Vec<_>>(), names);
        assert_eq!(r.reward.keys().collect::<Vec<_>>(), names);
        assert_eq!(r.done.keys().collect::<Vec<_>>(), names);
        assert_eq!(r.action.keys().collect::<Vec<_>>(), names);
        for n in names {
            assert!(obs_space[n].contains_observation(&r.state[n]), "{:?}", r.state[n]);
            assert!(act_space[n].contains(&r.action[n]));
            assert!(r.reward[n] <= 0.0);
        }
        assert!(r.info.contains_key("goal"));
    }
}

#[test]
fn local_state_reaches_the_server() {
    let (server, mut env) = chase(3, 200);
    env.reset().unwrap();
    let r = env.step(&actions(&[("agent0", Action::Discrete(1))])).unwrap();
    let remote = server.with_world(|w| w.model("agent0").unwrap().pose.position);
    let local = &r.state["agent0"];
    // The last tick's write is flushed by that tick's setter.
    assert!((remote.x - local[0]).abs() < 1e-9 && (remote.y - local[1]).abs() < 1e-9);
}

#[test]
fn bad_actions_are_rejected_without_side_effects() {
    let (server, mut env) = chase(4, 200);
    assert!(matches!(env.step(&BTreeMap::new()), Err(EnvError::NotReset)));
    env.reset().unwrap();
    env.step(&BTreeMap::new()).unwrap();
    let time = env.context().sim_time_ns();
    let before = server.with_world(|w| w.models().cloned().collect::<Vec<_>>());

    let bad = actions(&[("agent0", Action::Discrete(1)), ("agent1", Action::Discrete(5))]);
    match env.step(&bad) {
        Err(EnvError::InvalidAction { agent, .. }) => assert_eq!(agent, "agent1"),
        other => panic!("{other:?}"),
    }
    let unknown = actions(&[("agent0", Action::Discrete(1)), ("agent7", Action::Discrete(1))]);
    assert!(matches!(env.step(&unknown), Err(EnvError::UnknownAgent(n)) if n == "agent7"));
    let wrong_kind = actions(&[("agent0", Action::Continuous(vec![1.0]))]);
    assert!(matches!(env.step(&wrong_kind), Err(EnvError::InvalidAction { .. })));

    assert_eq!(env.context().sim_time_ns(), time);
    assert_eq!(server.with_world(|w| w.models().cloned().collect::<Vec<_>>()), before);
    assert_eq!(env.steps(), 1);
}

#[test]
fn missing_agents_get_the_noop() {
    let (_server, mut env) = chase(5, 200);
    let start = env.reset().unwrap();
    let r = env.step(&actions(&[("agent0", Action::Discrete(3))])).unwrap();
    assert_eq!(r.action["agent1"], Action::Discrete(0));
    assert_eq!(r.action["agent0"], Action::Discrete(3));
    assert_eq!(r.state["agent1"][..2], start["agent1"][..2]);
    assert!(r.state["agent0"][1] > start["agent0"][1]);
}

#[test]
fn finished_episode_requires_reset() {
    let (_server, mut env) = chase(6, 3);
    env.reset().unwrap();
    for i in 0..3 {
        let r = env.step(&BTreeMap::new()).unwrap();
        assert_eq!(r.all_done(), i == 2);
    }
    assert!(matches!(env.step(&BTreeMap::new()), Err(EnvError::EpisodeFinished)));
    env.reset().unwrap();
    assert!(!env.step(&BTreeMap::new()).unwrap().all_done());
}

#[test]
fn seeded_reruns_are_identical() {
    let run = || {
        let (_server, mut env) = chase(42, 200);
        let results = random_rollout(&mut env, 100, &mut RandomSource::new(42)).unwrap();
        serde_json::to_string(&results).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let (_server, mut env) = chase(43, 200);
    let other = serde_json::to_string(&random_rollout(&mut env, 100, &mut RandomSource::new(43)).unwrap()).unwrap();
    assert_ne!(a, other);
}

struct Counts {
    update: AtomicU64,
    fixed: AtomicU64,
}

struct Counting(Arc<Counts>);

impl BehaviourScript for Counting {
    fn update(&mut self, _b: &Behaviour) -> HookResult {
        self.0.update.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    fn fixed_update(&mut self, _b: &Behaviour, _t: u64) -> HookResult {
        self.0.fixed.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }
}

struct Solo {
    name: String,
    fail_next_reset: Arc<AtomicBool>,
}

impl Agent for Solo {
    fn name(&self) -> &str {
        &self.name
    }
    fn get_next_state(&self) -> Observation {
        vec![0.0]
    }
    fn on_action_received(&mut self, _action: &Action) {}
    fn get_reward(&self) -> f64 {
        1.0
    }
    fn is_done(&self) -> bool {
        false
    }
}

struct CountingArea {
    agents: Vec<Solo>,
}

impl Area for CountingArea {
    fn get_agents(&self) -> Vec<&dyn Agent> {
        self.agents.iter().map(|a| a as &dyn Agent).collect()
    }
    fn get_agents_mut(&mut self) -> Vec<&mut dyn Agent> {
        self.agents.iter_mut().map(|a| a as &mut dyn Agent).collect()
    }
    fn get_info(&self) -> Info {
        Info::new()
    }
    fn reset(&mut self, _ctx: &SyncContext) -> Result<(), AreaError> {
        if self.agents[0].fail_next_reset.swap(false, Ordering::SeqCst) {
            return Err("scene not ready".into());
        }
        Ok(())
    }
    fn observation_space(&self) -> BTreeMap<String, Space> {
        [("solo".to_string(), Space::uniform_box(0.0, 1.0, vec![1]).unwrap())].into()
    }
    fn action_space(&self) -> BTreeMap<String, Space> {
        [("solo".to_string(), Space::discrete(2).unwrap())].into()
    }
}

#[test]
fn one_update_and_ticks_per_step_fixed_updates() {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    let counts: Vec<Arc<Counts>> = (0..3)
        .map(|i| {
            let c = Arc::new(Counts {
                update: AtomicU64::new(0),
                fixed: AtomicU64::new(0),
            });
            let b = Behaviour::new(
                format!("b{i}"),
                "counted",
                ctx.model_spawner(&ModelXmlDocument::single_box("b", Vector3::ONE)),
                Counting(c.clone()),
            )
            .unwrap();
            ctx.spawn_behaviour(&b, Pose::IDENTITY).unwrap();
            c
        })
        .collect();
    let fail = Arc::new(AtomicBool::new(true));
    let area = CountingArea {
        agents: vec![Solo {
            name: "solo".into(),
            fail_next_reset: fail.clone(),
        }],
    };
    let mut env = Environment::new(ctx, area, EnvConfig { ticks_per_step: 7 }).unwrap();
    assert!(matches!(env.reset(), Err(EnvError::Area(_))));
    assert!(matches!(env.step(&BTreeMap::new()), Err(EnvError::NotReset)));
    env.reset().unwrap();
    for step in 1..=5u64 {
        env.step(&BTreeMap::new()).unwrap();
        for c in &counts {
            assert_eq!(c.update.load(Ordering::SeqCst), step);
            assert_eq!(c.fixed.load(Ordering::SeqCst), 7 * step);
        }
    }
    assert_eq!(server.with_world(|w| w.sim_time_ns()), 35 * 1_000_000);
}

#[test]
fn construction_checks_spaces() {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    let area = CountingArea {
        agents: vec![
            Solo {
                name: "solo".into(),
                fail_next_reset: Arc::default(),
            },
            Solo {
                name: "solo".into(),
                fail_next_reset: Arc::default(),
            },
        ],
    };
    assert!(matches!(
        Environment::new(ctx.clone(), area, EnvConfig::default()),
        Err(EnvError::Config(_))
    ));
    let area = CountingArea {
        agents: vec![Solo {
            name: "solo".into(),
            fail_next_reset: Arc::default(),
        }],
    };
    assert!(matches!(
        Environment::new(ctx, area, EnvConfig { ticks_per_step: 0 }),
        Err(EnvError::Config(_))
    ));
}
