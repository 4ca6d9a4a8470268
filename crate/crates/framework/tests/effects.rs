use simsync_core::{Color, Pose, Vector3};
use simsync_framework::model_xml::{parse_model_xml, ModelXmlDocument};
use simsync_framework::*;
use simsync_protocol::VisualState;
use simsync_server::Server;

const TWO_VISUALS: &str = r#"<model name="lamp">
  <link name="base">
    <visual name="stand"><geometry><cylinder><radius>0.1</radius><length>1</length></cylinder></geometry></visual>
    <visual name="bulb"><geometry><sphere><radius>0.2</radius></sphere></geometry></visual>
  </link>
  <link name="shade">
    <visual name="cone"><geometry><box><size>0.5 0.5 0.3</size></box></geometry></visual>
  </link>
</model>"#;

fn setup() -> (Server, SyncContext) {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    (server, ctx)
}

fn spawn(ctx: &SyncContext, name: &str, doc: &ModelXmlDocument) -> Behaviour {
    let b = Behaviour::new(name, "prop", ctx.model_spawner(doc), ()).unwrap();
    ctx.spawn_behaviour(&b, Pose::IDENTITY).unwrap();
    b
}

fn server_visuals(server: &Server, model: &str) -> Vec<VisualState> {
    server.with_world(|w| w.visuals().filter(|v| v.model_name == model).cloned().collect())
}

#[test]
fn invisible_hides_then_restores() {
    let (server, ctx) = setup();
    spawn(&ctx, "lamp0", &parse_model_xml(TWO_VISUALS).unwrap());
    let before = server_visuals(&server, "lamp0");
    assert!(before.iter().all(|v| v.visible));

    let effect = EffectHandle::new(VisibilityEffect::invisible("lamp0", None).unwrap());
    ctx.attach_effect(&effect).unwrap();
    assert!(matches!(ctx.attach_effect(&effect), Err(FrameworkError::EffectAttached)));
    ctx.step_clock(1).unwrap();
    assert!(server_visuals(&server, "lamp0").iter().all(|v| !v.visible));
    ctx.step_clock(3).unwrap();
    assert!(server_visuals(&server, "lamp0").iter().all(|v| !v.visible));

    ctx.detach_effect(&effect).unwrap();
    assert!(matches!(ctx.detach_effect(&effect), Err(FrameworkError::EffectNotAttached)));
    ctx.step_clock(1).unwrap();
    assert_eq!(server_visuals(&server, "lamp0"), before);
}

#[test]
fn selector_limits_scope() {
    let (server, ctx) = setup();
    spawn(&ctx, "lamp0", &parse_model_xml(TWO_VISUALS).unwrap());
    let sel = VisualSelector {
        links: vec!["base".into()],
        visuals: vec!["bulb".into()],
    };
    let effect = EffectHandle::new(VisibilityEffect::invisible("lamp0", None).unwrap().with_selector(sel));
    ctx.attach_effect(&effect).unwrap();
    ctx.step_clock(1).unwrap();
    for v in server_visuals(&server, "lamp0") {
        assert_eq!(v.visible, v.visual_name != "bulb", "{}", v.visual_name);
    }
}

#[test]
fn blink_toggles_on_half_period_multiples() {
    let (server, ctx) = setup();
    spawn(&ctx, "lamp0", &ModelXmlDocument::single_box("b", Vector3::ONE));
    let effect = EffectHandle::new(VisibilityEffect::blink("lamp0", 0.2, None).unwrap());
    ctx.attach_effect(&effect).unwrap();
    let mut observed = Vec::new();
    for _ in 0..1000 {
        ctx.step_clock(1).unwrap();
        observed.push(server_visuals(&server, "lamp0")[0].visible);
    }
    assert!(observed[0], "starts visible");
    let toggles: Vec<usize> = (1..observed.len()).filter(|&k| observed[k] != observed[k - 1]).collect();
    assert_eq!(toggles.len(), 9);
    for (i, k) in toggles.iter().enumerate() {
        assert_eq!(*k, 100 * (i + 1));
    }
}

#[test]
fn blink_half_period_uses_integer_nanoseconds() {
    let (server, ctx) = setup();
    spawn(&ctx, "lamp0", &ModelXmlDocument::single_box("b", Vector3::ONE));
    // 0.3 / 2 / 0.001 is 149.99999999999997 in floating point.
    let effect = EffectHandle::new(VisibilityEffect::blink("lamp0", 0.3, None).unwrap());
    ctx.attach_effect(&effect).unwrap();
    let mut observed = Vec::new();
    for _ in 0..400 {
        ctx.step_clock(1).unwrap();
        observed.push(server_visuals(&server, "lamp0")[0].visible);
    }
    let first_toggle = (1..observed.len()).find(|&k| observed[k] != observed[k - 1]);
    assert_eq!(first_toggle, Some(150));
}

#[test]
fn finite_duration_detaches_itself() {
    let (server, ctx) = setup();
    spawn(&ctx, "lamp0", &ModelXmlDocument::single_box("b", Vector3::ONE));
    let effect = EffectHandle::new(VisibilityEffect::invisible("lamp0", Some(0.05)).unwrap());
    ctx.attach_effect(&effect).unwrap();
    for tick in 1..=49 {
        ctx.step_clock(1).unwrap();
        assert!(effect.is_attached(), "tick {tick}");
        assert!(!server_visuals(&server, "lamp0")[0].visible);
    }
    ctx.step_clock(1).unwrap();
    assert!(!effect.is_attached());
    assert!(server_visuals(&server, "lamp0")[0].visible);
    assert!(ctx.effects().is_empty());
}

#[test]
fn effects_on_different_models_advance_independently() {
    let (server, ctx) = setup();
    spawn(&ctx, "a", &ModelXmlDocument::single_box("b", Vector3::ONE));
    spawn(&ctx, "b", &ModelXmlDocument::single_box("b", Vector3::ONE));
    let fast = EffectHandle::new(VisibilityEffect::blink("a", 0.004, None).unwrap());
    let slow = EffectHandle::new(VisibilityEffect::blink("b", 0.008, None).unwrap());
    ctx.attach_effect(&fast).unwrap();
    ctx.step_clock(1).unwrap();
    ctx.attach_effect(&slow).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..8 {
        ctx.step_clock(1).unwrap();
        a.push(server_visuals(&server, "a")[0].visible);
        b.push(server_visuals(&server, "b")[0].visible);
    }
    assert_eq!(a, [true, false, false, true, true, false, false, true]);
    assert_eq!(b, [true, true, true, true, false, false, false, false]);
}

#[test]
fn deleting_the_target_drops_the_effect() {
    let (_server, ctx) = setup();
    let b = spawn(&ctx, "gone", &ModelXmlDocument::single_box("b", Vector3::ONE));
    let effect = EffectHandle::new(VisibilityEffect::blink("gone", 0.1, None).unwrap());
    ctx.attach_effect(&effect).unwrap();
    ctx.delete_behaviour(&b).unwrap();
    ctx.step_clock(1).unwrap();
    assert!(!effect.is_attached());
}

struct Tint {
    target: String,
    ticks: u32,
}

impl Effect for Tint {
    fn on_attach(&mut self, _env: &effects::EffectEnv) -> Result<(), effects::EffectError> {
        Ok(())
    }
    fn on_update(&mut self, env: &effects::EffectEnv) -> Result<effects::EffectStatus, effects::EffectError> {
        self.ticks += 1;
        for k in env.target_visuals(&self.target, &VisualSelector::all())? {
            let mut v = env.cache.visual(&k).unwrap();
            v.material.emissive = Color::rgb(0.0, 0.0, 1.0);
            env.cache.write_visual(v);
        }
        Ok(if self.ticks >= 2 {
            effects::EffectStatus::Expired
        } else {
            effects::EffectStatus::Running
        })
    }
    fn on_detach(&mut self, _env: &effects::EffectEnv) -> Result<(), effects::EffectError> {
        Ok(())
    }
}

#[test]
fn custom_effect() {
    let (server, ctx) = setup();
    spawn(&ctx, "a", &ModelXmlDocument::single_box("b", Vector3::ONE));
    let h = EffectHandle::new(Tint {
        target: "a".into(),
        ticks: 0,
    });
    ctx.attach_effect(&h).unwrap();
    ctx.step_clock(2).unwrap();
    assert!(!h.is_attached());
    assert_eq!(server_visuals(&server, "a")[0].material.emissive, Color::rgb(0.0, 0.0, 1.0));
}
