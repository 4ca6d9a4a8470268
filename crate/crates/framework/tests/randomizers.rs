use std::collections::BTreeSet;

use simsync_core::{Color, Pose};
use simsync_framework::model_xml::parse_model_xml;
use simsync_framework::*;
use simsync_protocol::EntryStatus;
use simsync_server::Server;

const TABLE: &str = r#"<model name="table">
  <link name="top">
    <visual name="slab"><geometry><box><size>1 1 0.1</size></box></geometry></visual>
    <visual name="trim"><geometry><box><size>1 1 0.02</size></box></geometry></visual>
  </link>
  <link name="leg">
    <visual name="post"><geometry><cylinder><radius>0.05</radius><length>0.7</length></cylinder></geometry></visual>
  </link>
</model>"#;

fn setup(models: &[&str]) -> (Server, SyncContext) {
    let server = Server::start_local().unwrap();
    let ctx = SyncContext::connect(server.local_addr(), ContextConfig::default()).unwrap();
    let doc = parse_model_xml(TABLE).unwrap();
    for m in models {
        let b = Behaviour::new(*m, "table", ctx.model_spawner(&doc), ()).unwrap();
        ctx.spawn_behaviour(&b, Pose::IDENTITY).unwrap();
    }
    (server, ctx)
}

fn visual_cfg(level: RandomizerLevel, n: usize) -> ModelVisualRandomizerConfig {
    ModelVisualRandomizerConfig {
        level,
        color_min: Color::new(0.1, 0.2, 0.3, 1.0),
        color_max: Color::new(0.4, 0.6, 0.9, 1.0),
        num_selection: n,
        model_names: None,
        link_names: None,
        visual_names: None,
    }
}

fn light_cfg() -> LightRandomizerConfig {
    LightRandomizerConfig {
        light_names: vec!["sun".into()],
        color_min: Color::new(0.2, 0.2, 0.2, 1.0),
        color_max: Color::new(0.9, 0.8, 0.7, 1.0),
        attenuation_constant: ValueRange::new(0.5, 0.5),
        attenuation_linear: ValueRange::new(0.0, 1.0),
        attenuation_quadratic: ValueRange::new(0.0, 0.01),
    }
}

#[test]
fn degenerate_red_range_is_exact_and_reaches_server() {
    let (server, ctx) = setup(&["t0"]);
    let mut cfg = visual_cfg(RandomizerLevel::Visual, 2);
    cfg.color_min = Color::RED;
    cfg.color_max = Color::RED;
    let mut r = ModelVisualRandomizer::new(cfg).unwrap();
    let writes = ctx.randomize(&mut r, &mut RandomSource::new(7)).unwrap();
    assert_eq!(writes.visuals.len(), 2);
    for v in &writes.visuals {
        assert_eq!(v.material.diffuse, Color::new(1.0, 0.0, 0.0, 1.0));
    }
    ctx.step_clock(1).unwrap();
    let red = server.with_world(|w| w.visuals().filter(|v| v.material.diffuse == Color::RED).count());
    assert_eq!(red, 2);
}

#[test]
fn levels_share_colors_as_documented() {
    let (_server, ctx) = setup(&["t0", "t1"]);
    let mut model = ModelVisualRandomizer::new(visual_cfg(RandomizerLevel::Model, 1)).unwrap();
    let w = ctx.randomize(&mut model, &mut RandomSource::new(1)).unwrap();
    assert_eq!(w.visuals.len(), 3);
    let colors: BTreeSet<_> = w.visuals.iter().map(|v| format!("{:?}", v.material.diffuse)).collect();
    assert_eq!(colors.len(), 1);
    let models: BTreeSet<_> = w.visuals.iter().map(|v| v.model_name.clone()).collect();
    assert_eq!(models.len(), 1);

    let mut link = ModelVisualRandomizer::new(visual_cfg(RandomizerLevel::Link, 4)).unwrap();
    let w = ctx.randomize(&mut link, &mut RandomSource::new(2)).unwrap();
    assert_eq!(w.visuals.len(), 6);
    for v in &w.visuals {
        let sibling = w
            .visuals
            .iter()
            .find(|o| o.model_name == v.model_name && o.link_name == v.link_name)
            .unwrap();
        assert_eq!(v.material.diffuse, sibling.material.diffuse);
    }
}

#[test]
fn oversized_selection_randomizes_each_unit_once() {
    let (_server, ctx) = setup(&["t0", "t1"]);
    let mut r = ModelVisualRandomizer::new(visual_cfg(RandomizerLevel::Visual, 100)).unwrap();
    let w = ctx.randomize(&mut r, &mut RandomSource::new(3)).unwrap();
    let keys: BTreeSet<_> = w.visuals.iter().map(|v| v.key()).collect();
    assert_eq!(w.visuals.len(), 6);
    assert_eq!(keys.len(), 6);
}

#[test]
fn filters_and_empty_selection() {
    let (_server, ctx) = setup(&["t0", "t1"]);
    let mut cfg = visual_cfg(RandomizerLevel::Visual, 10);
    cfg.model_names = Some(vec!["t1".into()]);
    cfg.link_names = Some(vec!["top".into()]);
    let mut r = ModelVisualRandomizer::new(cfg.clone()).unwrap();
    let w = ctx.randomize(&mut r, &mut RandomSource::new(4)).unwrap();
    assert_eq!(w.visuals.len(), 2);
    assert!(w.visuals.iter().all(|v| v.model_name == "t1" && v.link_name == "top"));

    cfg.model_names = Some(vec!["nothing".into()]);
    let mut r = ModelVisualRandomizer::new(cfg).unwrap();
    let w = ctx.randomize(&mut r, &mut RandomSource::new(4)).unwrap();
    assert!(w.visuals.is_empty());
    assert!(w.diagnostic.is_some());
    assert!(ctx.diagnostics().iter().any(|d| d.source == "randomizer"));
}

#[test]
fn visual_samples_stay_in_range_and_are_deterministic() {
    let (_server, ctx) = setup(&["t0", "t1", "t2"]);
    let cfg = visual_cfg(RandomizerLevel::Visual, 3);
    let run = |seed: u64| {
        let mut r = ModelVisualRandomizer::new(cfg.clone()).unwrap();
        let mut rng = RandomSource::new(seed);
        let mut all = Vec::new();
        for _ in 0..400 {
            all.extend(r.randomize(ctx.cache(), &mut rng).unwrap().visuals);
        }
        all
    };
    let a = run(42);
    assert!(a.len() >= 1000);
    for v in &a {
        let c = v.material.diffuse;
        assert!((0.1..=0.4).contains(&c.r) && (0.2..=0.6).contains(&c.g) && (0.3..=0.9).contains(&c.b));
        assert_eq!(c.a, 1.0);
    }
    let b = run(42);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_ne!(a, run(43));
}

#[test]
fn alpha_kept_unless_range_spans_it() {
    let (_server, ctx) = setup(&["t0"]);
    let mut cfg = visual_cfg(RandomizerLevel::Visual, 3);
    cfg.color_min.a = 0.2;
    cfg.color_max.a = 0.2;
    let mut r = ModelVisualRandomizer::new(cfg.clone()).unwrap();
    let w = r.randomize(ctx.cache(), &mut RandomSource::new(5)).unwrap();
    assert!(w.visuals.iter().all(|v| v.material.diffuse.a == 1.0));
    cfg.color_max.a = 0.6;
    let mut r = ModelVisualRandomizer::new(cfg).unwrap();
    let w = r.randomize(ctx.cache(), &mut RandomSource::new(5)).unwrap();
    assert!(w.visuals.iter().all(|v| (0.2..=0.6).contains(&v.material.diffuse.a)));
}

#[test]
fn light_ranges_statistics_and_server_write() {
    let (server, ctx) = setup(&[]);
    let mut r = LightRandomizer::new(light_cfg()).unwrap();
    let mut rng = RandomSource::new(11);
    let mut linear = Vec::new();
    for _ in 0..1000 {
        let w = ctx.randomize(&mut r, &mut rng).unwrap();
        let l = &w.lights[0];
        assert_eq!(l.attenuation_constant, 0.5);
        assert!((0.0..=0.01).contains(&l.attenuation_quadratic));
        assert!((0.2..=0.9).contains(&l.color.r));
        linear.push(l.attenuation_linear);
    }
    let min = linear.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = linear.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = linear.iter().sum::<f64>() / linear.len() as f64;
    assert!(min >= 0.0 && max <= 1.0);
    assert!((mean - 0.5).abs() < 0.05, "mean {mean}");

    let last = ctx.cache().light("sun").unwrap();
    ctx.step_clock(1).unwrap();
    let remote = server.with_world(|w| w.lights().find(|l| l.name == "sun").cloned().unwrap());
    assert_eq!(remote, last);
}

#[test]
fn light_determinism() {
    let (_server, ctx) = setup(&[]);
    let run = || {
        let mut r = LightRandomizer::new(light_cfg()).unwrap();
        let mut rng = RandomSource::new(42);
        (0..50)
            .flat_map(|_| ctx.randomize(&mut r, &mut rng).unwrap().lights)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn unknown_light_is_not_found() {
    let (_server, ctx) = setup(&[]);
    let mut cfg = light_cfg();
    cfg.light_names = vec!["moon".into()];
    let mut r = LightRandomizer::new(cfg).unwrap();
    match ctx.randomize(&mut r, &mut RandomSource::new(1)) {
        Err(FrameworkError::Rejected { name, status }) => {
            assert_eq!(name, "moon");
            assert_eq!(status, EntryStatus::NotFound);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        RandomizerConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 2);
}

#[test]
fn config_file_round_trip() {
    let cfg = RandomizerConfig::ModelVisual(visual_cfg(RandomizerLevel::Link, 2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    assert_eq!(RandomizerConfig::load(&path).unwrap(), cfg);
    std::fs::write(&path, r#"{"kind":"model_visual","level":"VISUAL","color_min":{"r":1.0,"g":1.0,"b":1.0,"a":1.0},"color_max":{"r":0.0,"g":0.0,"b":0.0,"a":1.0},"num_selection":1}"#).unwrap();
    assert!(matches!(RandomizerConfig::load(&path), Err(FrameworkError::Config(_))));
}
